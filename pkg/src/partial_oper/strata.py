"""Stratum signatures, oper detection, Kostov genericity and weight-space walls."""
from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .exactalg import ZERO, Poly, format_rat, rat
from .hodge import HodgeSystem, SearchConfig, is_semistable


class StrataError(ValueError):
    pass


# ----------------------------------------------------------------------------
# signatures


def _theta_is_oper_iso(e: HodgeSystem, p: int, strict: bool) -> bool:
    """``theta_p : E^p -> E^{p-1}(k-2)`` between lines is an isomorphism.

    Integral sense: a nonzero constant with degree bound 0.  Parabolic sense
    (the default): of full degree, with only simple zeros, all at marked points,
    so it is an isomorphism away from D and logarithmic along D.
    """
    th = e.theta[p].e[0][0]
    bound = e.levels[p - 1].bundle.degrees[0] + e.twist - e.levels[p].bundle.degrees[0]
    if not th.c or th.degree != bound:
        return False
    if strict:
        return bound == 0
    rest = th
    for x in e.points:
        q, r = rest.divmod(Poly((-x, 1)))
        if not r.c:
            rest = q
    return rest.degree == 0


def is_oper(e: HodgeSystem, strict: bool = False) -> bool:
    ix = e.indices
    if not ix or any(e.levels[p].rank != 1 for p in ix):
        return False
    if ix != list(range(ix[0], ix[-1] + 1)):
        return False
    return all(_theta_is_oper_iso(e, p, strict) for p in ix[1:])


@dataclass(frozen=True)
class StratumSignature:
    levels: tuple  # (p, rank, degree, pardeg) with lowest level 0
    is_oper: bool
    is_trivial_filtration: bool

    def type_key(self) -> tuple:
        """Discrete part: Hodge type without the continuous parabolic degrees."""
        return tuple((p, r, d) for p, r, d, _ in self.levels), self.is_oper

    def to_json(self) -> dict:
        return {"levels": [{"p": p, "rank": r, "degree": d, "pardeg": format_rat(q)}
                           for p, r, d, q in self.levels],
                "is_oper": self.is_oper, "is_trivial_filtration": self.is_trivial_filtration}


def classify_signature(e: HodgeSystem, cfg: SearchConfig = SearchConfig(), check: bool = True) -> StratumSignature:
    if check and not is_semistable(e, cfg):
        raise StrataError("signature of a non-semistable system")
    ix = e.indices
    lo = ix[0] if ix else 0
    levels = tuple((p - lo, e.levels[p].rank, e.levels[p].bundle.degree, e.levels[p].pardeg) for p in ix)
    return StratumSignature(levels, is_oper(e), len(ix) <= 1)


# ----------------------------------------------------------------------------
# Kostov genericity


def _selection_patterns(r: int, k: int):
    for rp in range(1, r):
        for choice in itertools.product(itertools.combinations(range(r), rp), repeat=k):
            yield rp, choice


def kostov_check(eigen: Sequence[Sequence]) -> bool:
    """No choice of ``0 < r' < r`` eigenvalues at every point has an integral total."""
    eigen = [[rat(x) for x in ev] for ev in eigen]
    if not eigen:
        return True
    r = len(eigen[0])
    if any(len(ev) != r for ev in eigen):
        raise StrataError("every point needs exactly r eigenvalues")
    if sum((sum(ev, ZERO) for ev in eigen), ZERO) != 0:
        raise StrataError("eigenvalues must sum to zero")
    for _, choice in _selection_patterns(r, len(eigen)):
        tot = sum((eigen[i][j] for i, c in enumerate(choice) for j in c), ZERO)
        if tot.denominator == 1:
            return False
    return True


# ----------------------------------------------------------------------------
# walls


@dataclass(frozen=True)
class Wall:
    normal: tuple   # first nonzero entry is 1
    offset: object  # the wall is normal . a = offset
    patterns: tuple  # selection patterns producing it

    def value(self, a):
        return sum((c * x for c, x in zip(self.normal, a)), ZERO) - self.offset

    def to_json(self) -> dict:
        return {"normal": [format_rat(c) for c in self.normal], "offset": format_rat(self.offset),
                "patterns": [[list(c) for c in p] for p in self.patterns]}


@dataclass(frozen=True)
class WallArrangement:
    """Walls ``sum of selected eigenvalue forms in Z`` inside an open box of parameters.

    ``forms[i][j] = (coeffs, const)`` is the j-th eigenvalue at point i as an
    affine function of the parameters.
    """

    nparams: int
    box: tuple
    forms: tuple
    walls: tuple
    degenerate: tuple = ()  # patterns whose total is a constant integer

    def on_wall(self, a) -> bool:
        return bool(self.degenerate) or any(w.value(a) == 0 for w in self.walls)

    def chamber_id(self, a) -> tuple:
        out = []
        for w in self.walls:
            v = w.value(a)
            out.append(0 if v == 0 else (1 if v > 0 else -1))
        return tuple(out)

    def min_sq_distance(self, a):
        best = None
        for w in self.walls:
            d = w.value(a) ** 2 / sum((c * c for c in w.normal), ZERO)
            best = d if best is None or d < best else best
        return best

    def in_box(self, a) -> bool:
        return all(lo < x < hi for x, (lo, hi) in zip(a, self.box))

    def eigenvalues(self, a) -> list[list]:
        return [[sum((c * x for c, x in zip(co, a)), ZERO) + c0 for co, c0 in pt] for pt in self.forms]

    def to_json(self) -> dict:
        return {"nparams": self.nparams, "box": [[format_rat(lo), format_rat(hi)] for lo, hi in self.box],
                "walls": [w.to_json() for w in self.walls], "degenerate": len(self.degenerate) > 0}


def _floor(q) -> int:
    return int(q.numerator // q.denominator)


def enumerate_walls(forms: Sequence[Sequence[tuple]], r: int, box: Sequence[tuple],
                    override: bool = False) -> WallArrangement:
    k = len(forms)
    if (r > 3 or k > 5) and not override:
        raise StrataError("wall enumeration is limited to r <= 3 and k <= 5")
    box = tuple((rat(lo), rat(hi)) for lo, hi in box)
    n = len(box)
    forms = tuple(tuple((tuple(rat(c) for c in co), rat(c0)) for co, c0 in pt) for pt in forms)
    if any(len(pt) != r for pt in forms):
        raise StrataError("every point needs r eigenvalue forms")
    found: dict = {}
    degenerate = []
    for pattern in (_selection_patterns(r, k) if k else ()):
        _, choice = pattern
        lin = [ZERO] * n
        const = ZERO
        for i, c in enumerate(choice):
            for j in c:
                co, c0 = forms[i][j]
                lin = [a + b for a, b in zip(lin, co)]
                const += c0
        if not any(lin):
            if const.denominator == 1:
                degenerate.append(choice)
            continue
        lo = const + sum((c * (b[0] if c > 0 else b[1]) for c, b in zip(lin, box)), ZERO)
        hi = const + sum((c * (b[1] if c > 0 else b[0]) for c, b in zip(lin, box)), ZERO)
        lead = next(c for c in lin if c)
        for m in range(_floor(lo) + 1, _floor(hi) + 1):
            if not lo < m < hi:
                continue
            key = (tuple(c / lead for c in lin), (m - const) / lead)
            found.setdefault(key, []).append(choice)
    walls = tuple(Wall(nm, off, tuple(found[(nm, off)])) for nm, off in sorted(found))
    return WallArrangement(n, box, forms, walls, tuple(degenerate))


def rank2_forms(k: int) -> list:
    """Eigenvalues ``(a_i, -a_i)`` at each of k points, parameters ``a_1..a_k``."""
    out = []
    for i in range(k):
        e = tuple(1 if j == i else 0 for j in range(k))
        out.append(((e, 0), (tuple(-x for x in e), 0)))
    return out


def rank2_arrangement(k: int) -> WallArrangement:
    half = rat(1) / 2
    return enumerate_walls(rank2_forms(k), 2, [(ZERO, half)] * k)


# ----------------------------------------------------------------------------
# chamber scans


@dataclass
class ScanSample:
    ident: int
    params: tuple
    chamber: tuple
    generic: bool
    signature: StratumSignature | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {"id": self.ident, "weights": [format_rat(x) for x in self.params],
                "chamber": list(self.chamber), "generic": self.generic,
                "signature": self.signature.to_json() if self.signature else None,
                **({"error": self.error} if self.error else {})}


@dataclass
class ScanReport:
    arrangement: WallArrangement
    samples: list = field(default_factory=list)

    def by_chamber(self) -> dict:
        out: dict = {}
        for s in sorted(self.samples, key=lambda s: s.ident):
            out.setdefault(s.chamber, []).append(s)
        return out

    def disagreements(self, generic_only: bool = True) -> list[tuple]:
        """Chambers whose (generic) samples have more than one Hodge type."""
        bad = []
        for ch, ss in sorted(self.by_chamber().items()):
            keys = {s.signature.type_key() for s in ss if s.signature and (s.generic or not generic_only)}
            if len(keys) > 1:
                bad.append(ch)
        return bad

    def to_json(self) -> dict:
        chambers = []
        for ch, ss in sorted(self.by_chamber().items()):
            keys = sorted({repr(s.signature.type_key()) for s in ss if s.signature})
            chambers.append({"chamber": list(ch), "samples": len(ss), "types": len(keys),
                             "disagreement": len(keys) > 1})
        return {"arrangement": self.arrangement.to_json(),
                "samples": [s.to_json() for s in sorted(self.samples, key=lambda s: s.ident)],
                "chambers": chambers}


def random_box_point(rng: random.Random, box, den: int) -> tuple:
    out = []
    for lo, hi in box:
        a, b = _floor(lo * den) + 1, -_floor(-hi * den) - 1
        out.append(rat(rng.randint(a, b)) / den)
    return tuple(out)


def draw_chamber_samples(arr: WallArrangement, rng: random.Random, per_chamber: int, min_chambers: int,
                         den: int = 211, threshold=rat(1) / 200, max_draws: int = 20000) -> list[tuple]:
    """Rejection-sample box points until ``min_chambers`` chambers hold ``per_chamber`` generic points."""
    buckets: dict = {}
    thr2 = rat(threshold) ** 2
    for _ in range(max_draws):
        a = random_box_point(rng, arr.box, den)
        if not arr.in_box(a) or arr.on_wall(a):
            continue
        if not kostov_check(arr.eigenvalues(a)):
            continue
        d = arr.min_sq_distance(a)
        if d is not None and d < thr2:
            continue
        b = buckets.setdefault(arr.chamber_id(a), [])
        if len(b) < per_chamber:
            b.append(a)
        if sum(len(v) == per_chamber for v in buckets.values()) >= min_chambers:
            break
    full = sorted(c for c, v in buckets.items() if len(v) == per_chamber)
    if len(full) < min_chambers:
        raise StrataError("sampler could not fill enough chambers")
    return [a for c in full for a in buckets[c]]


def _scan_one(job):
    ident, params, factory, seed, cfg = job
    from .connection import iterate_to_partial_oper
    rng = random.Random(seed)
    try:
        s = factory(rng, params)
        _, e, _ = iterate_to_partial_oper(s, cfg)
        return ident, classify_signature(e, cfg.search, check=False), None
    except Exception as exc:  # surfaced in the report
        return ident, None, f"{type(exc).__name__}: {exc}"


def chamber_scan(arr: WallArrangement, params: Sequence[tuple], factory: Callable, seed: int = 0,
                 threshold=rat(1) / 200, threads: int = 1, config=None) -> ScanReport:
    """Run the limit on one system per parameter point and group signatures by chamber.

    ``factory(rng, params)`` must be a picklable top-level callable returning a
    FuchsianSystem.  Every sample gets its own seed derived from ``seed`` and
    its index, so results do not depend on ``threads``.
    """
    from .connection import IterationConfig
    cfg = config or IterationConfig()
    report = ScanReport(arr)
    thr2 = rat(threshold) ** 2
    jobs = []
    for i, a in enumerate(params):
        a = tuple(rat(x) for x in a)
        d = arr.min_sq_distance(a)
        generic = kostov_check(arr.eigenvalues(a)) and (d is None or d >= thr2)
        report.samples.append(ScanSample(i, a, arr.chamber_id(a), generic))
        jobs.append((i, a, factory, seed * 1000003 + i, cfg))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_scan_one, jobs))
    else:
        results = [_scan_one(j) for j in jobs]
    for ident, sig, err in results:
        report.samples[ident].signature = sig
        report.samples[ident].error = err
    return report


def rank2_factory(points: Sequence) -> Callable:
    return _Rank2Factory(tuple(rat(x) for x in points))


@dataclass(frozen=True)
class _Rank2Factory:
    points: tuple

    def __call__(self, rng, params):
        from .sampling import rank2_system
        return rank2_system(rng, self.points, params)
