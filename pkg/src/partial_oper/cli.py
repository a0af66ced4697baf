"""Command-line entry point: ``partial-oper <command> [options]``.

Machine-readable JSON goes to ``--output`` (stdout if absent); a short human
summary goes to stderr.  Exit codes: 0 success, 1 invalid input, 2 step
budget exceeded, 3 certification failure.
"""
from __future__ import annotations

import argparse
import logging
import random
import sys
from fractions import Fraction

from . import __version__
from .cohom import CohomError, defdim_report
from .connection import (BudgetExceeded, CertificationError, IterationConfig, TransversalityError,
                         iterate_to_partial_oper, validate_system)
from .exactalg import format_rat, rat
from .hodge import SearchConfig, UnsupportedRankError, is_semistable, max_destabilizer, par_slope
from .io import InputError, dumps, hodge_from_json, hodge_to_json, load_json, system_from_json
from .oracle import brute_force_destabilizer
from .strata import (StrataError, chamber_scan, classify_signature, draw_chamber_samples, enumerate_walls,
                     kostov_check, rank2_arrangement, rank2_factory)

log = logging.getLogger("partial_oper")

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_CERT = 0, 1, 2, 3


def _emit(args, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _search(args) -> SearchConfig:
    return SearchConfig(reverse_levels=args.reverse_order, reverse_steps=args.reverse_order,
                        heuristic_rank=args.heuristic_rank)


def _system(args):
    if not args.input:
        raise InputError("--input is required")
    return system_from_json(load_json(args.input))


def cmd_validate(args) -> int:
    s = _system(args)
    rep = validate_system(s)
    _emit(args, [dumps({"valid": True, "rank": s.rank, "points": [format_rat(x) for x in s.points],
                        "eigenvalues": [[format_rat(q) for q in ev] for ev in rep.eigenvalues],
                        "steps_scalar": rep.steps_scalar})])
    _say(f"valid: rank {s.rank}, {s.k} points")
    return EXIT_OK


def _run_limit(args, s):
    cfg = IterationConfig(budget=args.budget, search=_search(args))
    return iterate_to_partial_oper(s, cfg)


def cmd_limit(args) -> int:
    s = _system(args)
    F, E, trace = _run_limit(args, s)
    sig = classify_signature(E, _search(args), check=False)
    cert = is_semistable(E, _search(args))
    lines = [dumps(step.to_json()) for step in trace.steps]
    lines.append(dumps({"final": True, "steps": len(trace.steps), "filtration_ranks": F.ranks(),
                        "signature": sig.to_json(), "hodge": hodge_to_json(E),
                        "certificate": cert.certificate.to_json() if cert.certificate else None}))
    _emit(args, lines)
    _say(f"limit after {len(trace.steps)} modification(s); levels "
         + ", ".join(f"p={p} rank={r} deg={d} pardeg={format_rat(q)}" for p, r, d, q in sig.levels)
         + f"; oper={sig.is_oper}")
    return EXIT_OK


def _parse_eigen(text: str) -> list[list]:
    try:
        return [[rat(x) for x in pt.split(",")] for pt in text.split(";") if pt.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad eigenvalue list: {exc}") from exc


def cmd_kostov(args) -> int:
    if args.eigen:
        eig = _parse_eigen(args.eigen)
    elif args.input:
        eig = [[rat(x) for x in pt] for pt in load_json(args.input)["eigenvalues"]]
    else:
        raise InputError("give --eigen or --input")
    try:
        gen = kostov_check(eig)
    except StrataError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, [dumps({"generic": gen, "eigenvalues": [[format_rat(q) for q in ev] for ev in eig]})])
    _say(f"generic: {'true' if gen else 'false'}")
    return EXIT_OK


def _arrangement(args):
    if args.input:
        data = load_json(args.input)
        try:
            forms = [[(f["coeffs"], f["const"]) for f in pt] for pt in data["forms"]]
            return enumerate_walls(forms, int(data["rank"]), [tuple(b) for b in data["box"]],
                                   override=args.heuristic_rank)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed arrangement: {exc}") from exc
    return rank2_arrangement(args.points)


def cmd_walls(args) -> int:
    try:
        arr = _arrangement(args)
    except StrataError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, [dumps(arr.to_json())])
    _say(f"{len(arr.walls)} walls")
    return EXIT_OK


def cmd_scan(args) -> int:
    arr = rank2_arrangement(args.points)
    rng = random.Random(args.seed)
    pts = [rat(i) for i in range(args.points)]
    params = draw_chamber_samples(arr, rng, args.per_chamber, args.min_chambers) if args.per_chamber else []
    rep = chamber_scan(arr, params, rank2_factory(pts), seed=args.seed, threads=args.threads,
                       config=IterationConfig(budget=args.budget, search=_search(args)))
    _emit(args, [dumps(rep.to_json())])
    bad = rep.disagreements()
    _say(f"{len(rep.samples)} samples in {len(rep.by_chamber())} chambers; "
         f"intra-chamber disagreements: {len(bad)}")
    return EXIT_OK


def cmd_defdim(args) -> int:
    s = _system(args)
    F, _, _ = _run_limit(args, s)
    try:
        rep = defdim_report(s, F, strong=args.strong_parabolic, cfg=_search(args))
    except CohomError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, [dumps(rep)])
    _say(f"h0={rep['h0']} h1={rep['h1']} h2={rep['h2']} ({rep['variant']})")
    return EXIT_OK


def _compare(e, cfg) -> tuple[bool, dict]:
    o = brute_force_destabilizer(e)
    r = max_destabilizer(e, cfg)
    got = None
    if r is not None:
        h, _ = r
        got = (Fraction(str(par_slope(h, e))), h.rank, tuple(h.level_ranks()))
    want = None if o is None else (o.slope, o.rank, o.levels)
    fmt = (lambda v: None if v is None else {"slope": str(v[0]), "rank": v[1], "levels": list(v[2])})
    return got == want, {"search": fmt(got), "oracle": fmt(want)}


def cmd_oracle(args) -> int:
    from .sampling import random_hodge_system
    cfg = _search(args)
    results = []
    if args.input:
        cases = [hodge_from_json(load_json(args.input))]
    else:
        rng = random.Random(args.seed)
        cases = []
        for _ in range(args.trials):
            k = rng.choice([3, 4])
            ranks = rng.choice([(2,), (2,), (1, 1)])
            cases.append(random_hodge_system(rng, list(range(k)), ranks, deg_range=(-1, 1), weight_den=7))
    ok_all = True
    for i, e in enumerate(cases):
        ok, rec = _compare(e, cfg)
        ok_all &= ok
        results.append(dict(rec, case=i, agree=ok))
    _emit(args, [dumps({"cases": results, "agree": ok_all})])
    _say(f"oracle agreement on {sum(r['agree'] for r in results)}/{len(results)} cases")
    return EXIT_OK if ok_all else EXIT_CERT


COMMANDS = {"validate": cmd_validate, "limit": cmd_limit, "kostov": cmd_kostov, "walls": cmd_walls,
            "scan": cmd_scan, "defdim": cmd_defdim, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--budget", type=int, default=64, help="modification step budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--heuristic-rank", action="store_true",
                        help="allow the heuristic search above rank 3 and lift size guards")
    common.add_argument("--strong-parabolic", action="store_true",
                        help="use strongly parabolic endomorphisms in the deformation complex")
    common.add_argument("--reverse-order", action="store_true", help="explore search candidates in reverse")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="partial-oper", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a Fuchsian system")
    sub.add_parser("limit", parents=[common], help="iterate to a gr-semistable filtration")
    k = sub.add_parser("kostov", parents=[common], help="Kostov genericity of eigenvalues")
    k.add_argument("--eigen", help='per-point lists, e.g. "1/5,-1/5;1/7,-1/7;3/35,-3/35"')
    w = sub.add_parser("walls", parents=[common], help="walls of the rank-2 (+-a_i) arrangement or a JSON one")
    w.add_argument("--points", type=int, default=3)
    s = sub.add_parser("scan", parents=[common], help="chamber scan of the rank-2 arrangement")
    s.add_argument("--points", type=int, default=3)
    s.add_argument("--per-chamber", type=int, default=10)
    s.add_argument("--min-chambers", type=int, default=3)
    sub.add_parser("defdim", parents=[common], help="deformation dimensions at the limit")
    o = sub.add_parser("oracle", parents=[common], help="compare the search with brute force")
    o.add_argument("--trials", type=int, default=50)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InputError, TransversalityError, UnsupportedRankError) as exc:
        _say(f"error: {exc}")
        return EXIT_INPUT
    except BudgetExceeded as exc:
        _say(f"error: {exc}")
        return EXIT_BUDGET
    except CertificationError as exc:
        _say(f"certification failure: {exc}")
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
