"""Systems of Hodge bundles on the marked projective line.

A system is a graded parabolic bundle ``E = sum_p E^p`` with logarithmic
Higgs maps ``theta_p : E^p -> E^{p-1} (x) O(k-2)``.  This module computes
slopes, the center of gravity, and the maximal destabilizing graded
subobject.

The destabilizer search is exact.  For total rank <= 3 every proper graded
subsystem has rank 1 or corank 1, and both kinds are searched exhaustively:

* family ``line``: a line ``L`` in ``ker theta_p`` at one level;
* family ``corank1``: ``H^q = E^q`` for ``q != p`` and ``H^p = ker(lambda)``
  for a line quotient ``lambda : E^p -> O(c)`` with ``lambda o theta_{p+1} = 0``.

For each degree the flag-incidence profiles are explored by a pruned search
that maximizes (resp. minimizes) the weight contribution subject to linear
solvability.  A solvable (degree, profile) pair bounds the saturated object's
parabolic degree from one side, and the saturated object itself realizes its
own pair, so the optimum over pairs is the true optimum.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .bundle import (BundleMap, ParabolicData, SplitBundle, Subbundle, par_degree,
                     par_degree_bundle, quotient, saturate, kernel_subbundle)
from .exactalg import (ONE, ZERO, Echelon, PolyMatrix, _degree_slice_equations, _from_coeffs,
                       nullspace_q, rat)


class HodgeError(ValueError):
    pass


class UnsupportedRankError(HodgeError):
    pass


@dataclass(frozen=True)
class HodgeLevel:
    bundle: SplitBundle
    par: ParabolicData

    @property
    def rank(self) -> int:
        return self.bundle.rank

    @property
    def pardeg(self):
        return par_degree_bundle(self.bundle, self.par)


@dataclass(frozen=True, eq=False)
class HodgeSystem:
    points: tuple
    levels: Mapping[int, HodgeLevel]
    theta: Mapping[int, PolyMatrix] = field(default_factory=dict)

    def __post_init__(self):
        lv = {p: l for p, l in sorted(self.levels.items()) if l.rank > 0}
        object.__setattr__(self, "levels", lv)
        th = {}
        for p, m in self.theta.items():
            if p in lv and p - 1 in lv:
                BundleMap(lv[p].bundle, lv[p - 1].bundle, self.twist, m)  # validates bounds
                th[p] = m
        for p in lv:
            if p in lv and p - 1 in lv and p not in th:
                th[p] = PolyMatrix.zeros(lv[p - 1].rank, lv[p].rank)
        object.__setattr__(self, "theta", th)

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def twist(self) -> int:
        return self.k - 2

    @property
    def indices(self) -> list[int]:
        return sorted(self.levels)

    @property
    def rank(self) -> int:
        return sum(l.rank for l in self.levels.values())

    @property
    def degree(self) -> int:
        return sum(l.bundle.degree for l in self.levels.values())

    @property
    def pardeg(self):
        return sum((l.pardeg for l in self.levels.values()), ZERO)

    def theta_map(self, p: int) -> BundleMap:
        return BundleMap(self.levels[p].bundle, self.levels[p - 1].bundle, self.twist, self.theta[p])

    def has_gaps(self) -> bool:
        ix = self.indices
        return bool(ix) and len(ix) != ix[-1] - ix[0] + 1

    def __eq__(self, other):
        if not isinstance(other, HodgeSystem):
            return NotImplemented
        return (self.points, self.levels, self.theta) == (other.points, other.levels, other.theta)


def shift(e: HodgeSystem, k: int) -> HodgeSystem:
    """Relabel levels so that the new level p holds the old level p - k."""
    return HodgeSystem(e.points, {p + k: l for p, l in e.levels.items()},
                       {p + k: m for p, m in e.theta.items()})


def zeta(e: HodgeSystem | Mapping[int, int]):
    """Center of gravity: the rank-weighted mean of the Hodge indices."""
    ranks = _ranks(e)
    n = sum(ranks.values())
    if n == 0:
        raise HodgeError("center of gravity of a rank-zero object")
    return rat(sum(p * r for p, r in ranks.items())) / n


def _ranks(e) -> dict[int, int]:
    if isinstance(e, HodgeSystem):
        return {p: l.rank for p, l in e.levels.items()}
    if isinstance(e, GradedSub):
        return {p: s.rank for p, s in e.parts.items() if s.rank}
    return {p: r for p, r in e.items() if r}


@dataclass(frozen=True, eq=False)
class GradedSub:
    """Graded subobject ``H = sum_p H^p`` with each ``H^p`` a subbundle of ``E^p``."""

    parts: Mapping[int, Subbundle]

    @property
    def rank(self) -> int:
        return sum(s.rank for s in self.parts.values())

    def level_ranks(self) -> dict[int, int]:
        return {p: s.rank for p, s in sorted(self.parts.items()) if s.rank}

    def pardeg(self, e: HodgeSystem):
        return sum((par_degree(s, e.levels[p].par) for p, s in self.parts.items() if s.rank), ZERO)

    def level_data(self, e: HodgeSystem) -> list[tuple]:
        return [(p, s.rank, s.degree, par_degree(s, e.levels[p].par))
                for p, s in sorted(self.parts.items()) if s.rank]


def full_graded_sub(e: HodgeSystem, overrides: Mapping[int, Subbundle] = {}) -> GradedSub:
    parts = {p: overrides.get(p, Subbundle.whole(l.bundle)) for p, l in e.levels.items()}
    return GradedSub(parts)


def zero_graded_sub(e: HodgeSystem, overrides: Mapping[int, Subbundle] = {}) -> GradedSub:
    parts = {p: overrides.get(p, Subbundle.zero(l.bundle)) for p, l in e.levels.items()}
    return GradedSub(parts)


def is_theta_invariant(e: HodgeSystem, h: GradedSub) -> bool:
    for p in e.indices:
        if p - 1 not in e.levels:
            continue
        hp = h.parts.get(p)
        if hp is None or hp.rank == 0:
            continue
        img = e.theta[p] @ hp.matrix
        hq = h.parts.get(p - 1) or Subbundle.zero(e.levels[p - 1].bundle)
        if hq.rank == hq.ambient.rank:
            continue
        if hq.rank == 0:
            if not img.is_zero():
                return False
            continue
        _, proj = quotient(hq)
        if not (proj.matrix @ img).is_zero():
            return False
    return True


def par_slope(obj, e: HodgeSystem | None = None):
    """Parabolic slope of a system, or of a graded sub (pass the ambient ``e``)."""
    if isinstance(obj, HodgeSystem):
        if obj.rank == 0:
            raise HodgeError("slope of a rank-zero system")
        return obj.pardeg / obj.rank
    if isinstance(obj, GradedSub):
        if obj.rank == 0:
            raise HodgeError("slope of a rank-zero subobject")
        return obj.pardeg(e) / obj.rank
    raise TypeError(type(obj))


@dataclass(frozen=True)
class HNInvariants:
    beta: object
    rho: int
    gamma: object

    def key(self) -> tuple:
        return (self.beta, self.rho, self.gamma)


def hn_step_invariants(e: HodgeSystem, h: GradedSub) -> HNInvariants:
    if h.rank == 0 or h.rank >= e.rank:
        raise HodgeError("destabilizer must be a proper nonzero subobject")
    if not is_theta_invariant(e, h):
        raise HodgeError("subobject is not theta-invariant")
    hr = h.level_ranks()
    qr = {p: l.rank - hr.get(p, 0) for p, l in e.levels.items()}
    return HNInvariants(par_slope(h, e), h.rank, zeta(qr) - zeta(hr))


# ----------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class SearchConfig:
    """Exploration order knobs; results must not depend on them."""

    reverse_levels: bool = False
    reverse_steps: bool = False
    seed: int | None = None
    heuristic_rank: bool = False

    def level_order(self, levels: Iterable[int]) -> list[int]:
        ix = sorted(levels, reverse=self.reverse_levels)
        if self.seed is not None:
            random.Random(self.seed).shuffle(ix)
        return ix


@dataclass
class FamilyResult:
    family: str
    level: int
    degree: int
    value: object  # slope of the candidate subobject
    sub: GradedSub


@dataclass
class SearchCertificate:
    slope: object
    threshold_strict: bool
    best: dict = field(default_factory=dict)  # family -> best slope meeting threshold or None
    heuristic: bool = False

    def to_json(self) -> dict:
        from .exactalg import format_rat
        return {"slope": format_rat(self.slope), "strict": self.threshold_strict, "heuristic": self.heuristic,
                "families": {k: (None if v is None else format_rat(v)) for k, v in self.best.items()}}


def _eval_matrix(lens: list[int], x) -> list[list]:
    """Rows: fiber coordinates; columns: coefficients in the layout ``lens``."""
    total = sum(lens)
    rows, off = [], 0
    for n in lens:
        row = [ZERO] * total
        xp = ONE
        for j in range(n):
            row[off + j] = xp
            xp *= x
        rows.append(row)
        off += n
    return rows


def _mat_mul(a: list[list], b: list[list]) -> list[list]:
    if not a:
        return []
    bt = list(zip(*b)) if b else []
    return [[sum((x * y for x, y in zip(r, c)), ZERO) for c in bt] for r in a]


def _best_profile(dim: int, blocks: list[list[tuple]], maximize: bool, bound, strict: bool, reverse: bool):
    """Choose one option per point so the stacked constraint rows leave a kernel.

    ``blocks[x]`` lists ``(weight, rows)`` options.  Optimizes the weight sum
    subject to ``rank < dim``; only sums beating ``bound`` are of interest.
    Returns ``(sum, rows)`` or ``None``.
    """
    best = [None, None]
    sign = 1 if maximize else -1

    def beats(val, ref):
        if ref is None:
            return True
        return sign * val > sign * ref if strict else sign * val >= sign * ref

    tail = [ZERO] * (len(blocks) + 1)
    for i in range(len(blocks) - 1, -1, -1):
        ws = [w for w, _ in blocks[i]]
        tail[i] = tail[i + 1] + (max(ws) if maximize else min(ws))

    def rec(i, acc, ech: Echelon, rows):
        if not beats(acc + tail[i], bound):
            return
        if best[0] is not None and sign * (acc + tail[i]) <= sign * best[0]:
            return
        if i == len(blocks):
            best[0], best[1] = acc, rows
            return
        opts = sorted(blocks[i], key=lambda o: sign * o[0], reverse=not reverse)
        for w, crows in opts:
            e2 = Echelon(dim)
            e2.rows = list(ech.rows)
            for r in crows:
                e2.add(r)
            if e2.rank < dim:
                rec(i + 1, acc + w, e2, rows + list(crows))

    rec(0, ZERO, Echelon(dim), [])
    if best[0] is None:
        return None
    return best[0], best[1]


def _line_candidates(e: HodgeSystem, p: int, threshold, strict: bool, cfg: SearchConfig):
    """Best line subbundle of ``ker theta_p`` with slope beating ``threshold``."""
    lvl = e.levels[p]
    degs = lvl.bundle.degrees
    theta = e.theta.get(p)
    wmax = sum((max(f.weights) if f.weights else ZERO) for f in lvl.par.flags)
    best = None
    a = degs[0]
    while True:
        cap = rat(a) + wmax
        if (cap <= threshold) if strict else (cap < threshold):
            break
        if best is not None and cap <= best[0]:
            break
        lens = [max(d - a + 1, 0) for d in degs]
        total = sum(lens)
        eqs = _degree_slice_equations(theta, [], lens) if theta is not None else []
        basis = nullspace_q(eqs, total) if eqs else nullspace_q([], total)
        if basis:
            ncols = list(zip(*basis))  # total x D
            nmat = [list(r) for r in ncols]
            blocks = []
            for x, flag in zip(lvl.par.points, lvl.par.flags):
                fib = _mat_mul(_eval_matrix(lens, x), nmat)
                opts = []
                for j, w in enumerate(flag.weights):
                    ann = flag.annihilator(j)
                    opts.append((w, [r for r in _mat_mul(ann, fib) if any(r)] if ann else []))
                blocks.append(opts)
            res = _best_profile(len(basis), blocks, True, threshold - a, strict, cfg.reverse_steps)
            if res is not None:
                val = rat(a) + res[0]
                if best is None or val > best[0]:
                    c = nullspace_q(res[1], len(basis))[0] if res[1] else [ONE] + [ZERO] * (len(basis) - 1)
                    coeffs = [sum((b[i] * ci for b, ci in zip(basis, c)), ZERO) for i in range(total)]
                    best = (val, a, _from_coeffs(coeffs, lens))
        a -= 1
    if best is None:
        return None
    val, a, vec = best
    sub = saturate(BundleMap(SplitBundle((a,)), lvl.bundle, 0, PolyMatrix.from_columns([vec], lvl.rank)))
    return FamilyResult("line", p, a, val, zero_graded_sub(e, {p: sub}))


def _corank1_candidates(e: HodgeSystem, p: int, threshold, strict: bool, cfg: SearchConfig):
    """Best corank-one subsystem cut out at level p, slope beating ``threshold``."""
    lvl = e.levels[p]
    n = e.rank
    degs = lvl.bundle.degrees
    theta_up = e.theta.get(p + 1)
    eqs_mat = theta_up.T if theta_up is not None else None
    # subobject slope (pardeg(E) - q)/(n-1) beats threshold  <=>  q beats  qbound (from below)
    qbound = e.pardeg - (n - 1) * threshold
    wmin = sum((min(f.weights) if f.weights else ZERO) for f in lvl.par.flags)
    best = None
    c = degs[-1]
    while True:
        floor = rat(c) + wmin
        if (floor >= qbound) if strict else (floor > qbound):
            break
        if best is not None and floor >= best[0]:
            break
        lens = [max(c - d + 1, 0) for d in degs]
        total = sum(lens)
        eqs = _degree_slice_equations(eqs_mat, [], lens) if eqs_mat is not None else []
        basis = nullspace_q(eqs, total) if eqs else nullspace_q([], total)
        if basis:
            nmat = [list(r) for r in zip(*basis)]
            blocks = []
            for x, flag in zip(lvl.par.points, lvl.par.flags):
                fib = _mat_mul(_eval_matrix(lens, x), nmat)
                opts = []
                for j, w in enumerate(flag.weights):
                    prev = [list(r) for r in flag.spaces[j - 1]] if j > 0 else []
                    opts.append((w, [r for r in _mat_mul(prev, fib) if any(r)] if prev else []))
                blocks.append(opts)
            res = _best_profile(len(basis), blocks, False, qbound - c, strict, cfg.reverse_steps)
            if res is not None:
                val = rat(c) + res[0]
                if best is None or val < best[0]:
                    cc = nullspace_q(res[1], len(basis))[0] if res[1] else [ONE] + [ZERO] * (len(basis) - 1)
                    coeffs = [sum((b[i] * ci for b, ci in zip(basis, cc)), ZERO) for i in range(total)]
                    best = (val, c, _from_coeffs(coeffs, lens))
        c += 1
    if best is None:
        return None
    q, c, w = best
    lam = BundleMap(lvl.bundle, SplitBundle((c,)), 0, PolyMatrix([w], 1, lvl.rank))
    hp = kernel_subbundle(lam)
    sub = full_graded_sub(e, {p: hp})
    return FamilyResult("corank1", p, c, sub.pardeg(e) / (n - 1), sub)


def _canonical_candidates(e: HodgeSystem):
    """Tails ``sum_{q <= p0} E^q`` and kernels of theta (heuristic family for rank >= 4)."""
    out = []
    ix = e.indices
    for p0 in ix[:-1]:
        sub = GradedSub({p: (Subbundle.whole(l.bundle) if p <= p0 else Subbundle.zero(l.bundle))
                         for p, l in e.levels.items()})
        out.append(FamilyResult("canonical", p0, 0, par_slope(sub, e), sub))
    for p in ix:
        if p in e.theta:
            k = kernel_subbundle(e.theta_map(p))
            if 0 < k.rank:
                sub = zero_graded_sub(e, {p: k})
                out.append(FamilyResult("canonical", p, 0, par_slope(sub, e), sub))
    return out


def _search(e: HodgeSystem, strict: bool, cfg: SearchConfig):
    n = e.rank
    if n == 0:
        raise HodgeError("empty system")
    heuristic = n > 3
    if heuristic and not cfg.heuristic_rank:
        raise UnsupportedRankError(f"complete search supports rank <= 3 (got {n}); pass heuristic_rank")
    mu = par_slope(e)
    cert = SearchCertificate(mu, strict, {}, heuristic)
    results: list[FamilyResult] = []
    if n == 1:
        cert.best = {"line": None}
        return results, cert
    fams = [("line", _line_candidates)]
    if n >= 3:
        fams.append(("corank1", _corank1_candidates))
    for name, fn in fams:
        best = None
        for p in cfg.level_order(e.indices):
            r = fn(e, p, mu, strict, cfg)
            if r is not None:
                results.append(r)
                if best is None or r.value > best:
                    best = r.value
        cert.best[name] = best
    if heuristic:
        canon = [r for r in _canonical_candidates(e) if (r.value > mu if strict else r.value >= mu)]
        results.extend(canon)
        cert.best["canonical"] = max((r.value for r in canon), default=None)
    return results, cert


def _pick(results: list[FamilyResult]) -> FamilyResult | None:
    if not results:
        return None

    def key(r: FamilyResult):
        lv = r.sub.level_ranks()
        vec = tuple(lv.get(p, 0) for p in sorted(r.sub.parts))
        return (r.value, r.sub.rank, tuple(-x for x in vec))

    return max(results, key=key)


def max_destabilizer(e: HodgeSystem, cfg: SearchConfig = SearchConfig()):
    """Maximal destabilizing graded subobject, or ``None`` if ``e`` is semistable.

    Returns ``(GradedSub, HNInvariants)``.
    """
    results, _ = _search(e, True, cfg)
    r = _pick(results)
    if r is None:
        return None
    h = r.sub
    inv = hn_step_invariants(e, h)
    if not inv.beta > par_slope(e):
        raise HodgeError("destabilizer does not destabilize")
    return h, inv


@dataclass
class Semistability:
    semistable: bool
    certificate: SearchCertificate
    destabilizer: GradedSub | None = None

    def __bool__(self):
        return self.semistable


def is_semistable(e: HodgeSystem, cfg: SearchConfig = SearchConfig()) -> Semistability:
    results, cert = _search(e, True, cfg)
    r = _pick(results)
    return Semistability(r is None, cert, None if r is None else r.sub)


def is_stable(e: HodgeSystem, cfg: SearchConfig = SearchConfig()) -> Semistability:
    """No proper graded subobject of slope >= the slope of ``e``."""
    results, cert = _search(e, False, cfg)
    r = _pick(results)
    return Semistability(r is None, cert, None if r is None else r.sub)
