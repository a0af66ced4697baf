"""Hypercohomology of two-term complexes on P^1 and deformation dimensions.

Endomorphisms are vectorized row-major.  A term of a complex is a subsheaf
of a split ambient bundle cut out by fiber conditions at the marked points
(and, for trace-free variants, by the trace); its splitting type comes from a
shifted-minimal module basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from .bundle import BundleMap, Flag, SplitBundle
from .connection import FuchsianSystem, GTFiltration, kodaira_spencer
from .exactalg import ONE, ZERO, Poly, PolyMatrix, module_basis, nullspace_q, rank_q, solve_poly
from .hodge import HodgeSystem, SearchConfig, is_stable


class CohomError(ValueError):
    pass


# ----------------------------------------------------------------------------
# terms and complexes


@dataclass(frozen=True, eq=False)
class Term:
    """``{v in (+) O(ambient[i]) : trace . v = 0, C_x v(x) = 0}``."""

    ambient: tuple
    conditions: tuple = ()   # (x, rows)
    trace: tuple | None = None  # constant row, or None

    @cached_property
    def rank(self) -> int:
        return len(self.ambient) - (1 if self.trace and any(self.trace) else 0)

    @cached_property
    def _basis(self):
        n = len(self.ambient)
        if self.rank == 0:
            return SplitBundle(), PolyMatrix.zeros(n, 0)
        eqs = PolyMatrix([list(self.trace)], 1, n) if self.trace and any(self.trace) else None
        picks = module_basis(n, list(self.ambient), self.rank, eqs=eqs, points=self.conditions)
        cols = [v for _, v in picks]
        return SplitBundle(tuple(-d for d, _ in picks)), PolyMatrix.from_columns(cols, n)

    @property
    def bundle(self) -> SplitBundle:
        return self._basis[0]

    @property
    def basis(self) -> PolyMatrix:
        return self._basis[1]

    def codims(self) -> list[int]:
        base = [list(self.trace)] if self.trace and any(self.trace) else []
        r0 = rank_q(base) if base else 0
        return [rank_q(base + [list(r) for r in rows]) - r0 for _, rows in self.conditions]

    def rr_degree(self) -> int:
        """Degree from bookkeeping: ambient degree minus the codimension at each point.

        The trace lands in the line of the diagonal coordinates, which is removed too.
        """
        tr = 0
        if self.trace and any(self.trace):
            tr = self.ambient[next(i for i, c in enumerate(self.trace) if c)]
        return sum(self.ambient) - tr - sum(self.codims())


def chi_bundle(e: SplitBundle) -> int:
    return sum(d + 1 for d in e.degrees)


@dataclass(frozen=True, eq=False)
class TwoTermComplex:
    """``[C0 -d-> C1]`` with d an O-linear map (twist already absorbed in C1)."""

    c0: SplitBundle
    c1: SplitBundle
    d: BundleMap

    @property
    def chi(self) -> int:
        return chi_bundle(self.c0) - chi_bundle(self.c1)


def h0_basis(e: SplitBundle) -> list[tuple]:
    return [(j, m) for j, a in enumerate(e.degrees) for m in range(a + 1)]


def h1_basis(e: SplitBundle) -> list[tuple]:
    """Cech classes ``t^m e_j`` with ``a_j < m < 0``."""
    return [(j, m) for j, a in enumerate(e.degrees) for m in range(a + 1, 0)]


def _induced_rank(c: TwoTermComplex, src: list, tgt: list) -> int:
    index = {b: i for i, b in enumerate(tgt)}
    rows = []
    for j, m in src:
        v = [ZERO] * len(tgt)
        for i in range(c.c1.rank):
            for e, a in enumerate(c.d.matrix.e[i][j].c):
                pos = index.get((i, m + e))
                if pos is not None:
                    v[pos] += a
        rows.append(v)
    return rank_q(rows) if rows and tgt else 0


def hyper_dims(c: TwoTermComplex) -> tuple[int, int, int]:
    """``(h0, h1, h2)`` from the maps on H^0 and on H^1 of the two terms."""
    s0, t0 = h0_basis(c.c0), h0_basis(c.c1)
    s1, t1 = h1_basis(c.c0), h1_basis(c.c1)
    r0 = _induced_rank(c, s0, t0)
    r1 = _induced_rank(c, s1, t1)
    return len(s0) - r0, (len(t0) - r0) + (len(s1) - r1), len(t1) - r1


def line_cohomology(d: int) -> tuple[int, int]:
    """``(h^0, h^1)`` of ``O(d)`` on P^1."""
    return max(d + 1, 0), max(-d - 1, 0)


# ----------------------------------------------------------------------------
# parabolic Hom conditions


def _target_step(g: Flag, w, strict: bool) -> int:
    """Largest step of g whose weight is >= w (> w if strict); -1 if none."""
    best = -1
    for j, wt in enumerate(g.weights):
        if wt > w or (not strict and wt == w):
            best = j
    return best


def hom_conditions(f: Flag, g: Flag, strict: bool) -> list[list]:
    """Rows on row-major ``phi`` (g.dim x f.dim) expressing weight preservation.

    ``phi`` must send a vector of weight w into the part of weight >= w of the
    target (strictly > w for the strongly parabolic variant).
    """
    n, m = f.dim, g.dim
    rows = []
    for j, sp in enumerate(f.spaces):
        t = _target_step(g, f.weights[j], strict)
        ann = g.annihilator(t)
        for a in ann:
            for v in sp:
                rows.append([a[i] * v[jj] for i in range(m) for jj in range(n)])
    return [r for r in rows if any(r)]


def _reduce_rows(rows: list[list], n: int) -> list[list]:
    """A row basis of the span (keeps conditions small)."""
    if not rows:
        return []
    ns = nullspace_q(rows, n)
    return nullspace_q(ns, n) if ns else [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]


# ----------------------------------------------------------------------------
# graded complexes


@dataclass(frozen=True)
class _Block:
    q: int      # source level
    qt: int     # target level
    offset: int
    rows: int   # target rank
    cols: int   # source rank


def _blocks(e: HodgeSystem, p: int) -> list[_Block]:
    out, off = [], 0
    for q in e.indices:
        if q + p in e.levels:
            m, n = e.levels[q + p].rank, e.levels[q].rank
            out.append(_Block(q, q + p, off, m, n))
            off += m * n
    return out


def _graded_term(e: HodgeSystem, p: int, twist: int, strict: bool, trace_free: bool) -> tuple[Term, list]:
    blocks = _blocks(e, p)
    ambient = []
    for b in blocks:
        dt, ds = e.levels[b.qt].bundle.degrees, e.levels[b.q].bundle.degrees
        ambient += [dt[i] - ds[j] + twist for i in range(b.rows) for j in range(b.cols)]
    n = len(ambient)
    conds = []
    for ix, x in enumerate(e.points):
        rows = []
        for b in blocks:
            for r in hom_conditions(e.levels[b.q].par.flags[ix], e.levels[b.qt].par.flags[ix], strict):
                rows.append([ZERO] * b.offset + r + [ZERO] * (n - b.offset - len(r)))
        rows = _reduce_rows(rows, n)
        if rows:
            conds.append((x, tuple(tuple(r) for r in rows)))
    trace = None
    if trace_free and p == 0 and n:
        t = [ZERO] * n
        for b in blocks:
            for i in range(b.rows):
                t[b.offset + i * b.cols + i] = ONE
        trace = tuple(t)
    return Term(tuple(ambient), tuple(conds), trace), blocks


def _graded_differential(e: HodgeSystem, b0: list[_Block], b1: list[_Block]) -> PolyMatrix:
    """``phi -> theta phi - phi theta`` from Gr^p End to Gr^{p-1} End (x) O(k-2)."""
    n0 = sum(b.rows * b.cols for b in b0)
    n1 = sum(b.rows * b.cols for b in b1)
    src = {b.q: b for b in b0}
    ent = [[Poly() for _ in range(n0)] for _ in range(n1)]
    for c in b1:  # Hom(E^s, E^{s+p-1})
        s = c.q
        up = src.get(s)          # phi: E^s -> E^{s+p}, then theta_{s+p}
        if up is not None and up.qt in e.theta:
            th = e.theta[up.qt].e
            for a in range(c.rows):
                for bb in range(c.cols):
                    for cc in range(up.rows):
                        if th[a][cc].c:
                            ent[c.offset + a * c.cols + bb][up.offset + cc * up.cols + bb] += th[a][cc]
        lo = src.get(s - 1)      # theta_s: E^s -> E^{s-1}, then phi: E^{s-1} -> E^{s+p-1}
        if lo is not None and s in e.theta:
            th = e.theta[s].e
            for a in range(c.rows):
                for bb in range(c.cols):
                    for cc in range(lo.cols):
                        if th[cc][bb].c:
                            ent[c.offset + a * c.cols + bb][lo.offset + a * lo.cols + cc] -= th[cc][bb]
    return PolyMatrix(ent, n1, n0)


def _restrict(d: PolyMatrix, t0: Term, t1: Term) -> BundleMap:
    c0, c1 = t0.bundle, t1.bundle
    if c0.rank == 0 or c1.rank == 0:
        img = d @ t0.basis if c0.rank else None
        if img is not None and not img.is_zero():
            raise CohomError("differential does not vanish into a zero term")
        return BundleMap(c0, c1, 0, PolyMatrix.zeros(c1.rank, c0.rank))
    x = solve_poly(t1.basis, d @ t0.basis)
    return BundleMap(c0, c1, 0, x)


@dataclass(frozen=True, eq=False)
class GradedComplex:
    p: int
    complex: TwoTermComplex
    terms: tuple  # (Term, Term)

    @property
    def rr_chi(self) -> int:
        t0, t1 = self.terms
        return (t0.rr_degree() + t0.rank) - (t1.rr_degree() + t1.rank)


def graded_complex(e: HodgeSystem, p: int, strong: bool = False, trace_free: bool = False) -> GradedComplex:
    """``Gr^p ParEnd -> Gr^{p-1} X (x) Omega(log D)`` with X = ParEnd, or SParEnd if ``strong``."""
    if e.k < 1:
        raise CohomError("at least one marked point is required")
    t0, b0 = _graded_term(e, p, 0, False, trace_free)
    t1, b1 = _graded_term(e, p - 1, e.twist, strong, trace_free)
    d = _graded_differential(e, b0, b1)
    return GradedComplex(p, TwoTermComplex(t0.bundle, t1.bundle, _restrict(d, t0, t1)), (t0, t1))


def graded_range(e: HodgeSystem) -> range:
    ix = e.indices
    span = ix[-1] - ix[0] if ix else 0
    return range(-span, span + 2)


# ----------------------------------------------------------------------------
# total complex


def _end_term(s: FuchsianSystem, twist: int, strict: bool, trace_free: bool) -> Term:
    r = s.rank
    n = r * r
    conds = []
    for x, f in zip(s.points, s.par.flags):
        rows = _reduce_rows(hom_conditions(f, f, strict), n)
        if rows:
            conds.append((x, tuple(tuple(row) for row in rows)))
    trace = tuple(ONE if i == j else ZERO for i in range(r) for j in range(r)) if trace_free else None
    return Term(tuple([twist] * n), tuple(conds), trace)


def horizontal_endomorphisms(s: FuchsianSystem, strict: bool, trace_free: bool) -> int:
    """Dimension of constant ``phi`` in (S)ParEnd commuting with every residue."""
    r = s.rank
    n = r * r
    rows = []
    for f in s.par.flags:
        rows += hom_conditions(f, f, strict)
    for a in s.residues:
        # [A, phi]_{ij} = sum_l A_il phi_lj - phi_il A_lj
        for i in range(r):
            for j in range(r):
                row = [ZERO] * n
                for l in range(r):
                    row[l * r + j] += a[i][l]
                    row[i * r + l] -= a[l][j]
                rows.append(row)
    if trace_free:
        rows.append([ONE if i == j else ZERO for i in range(r) for j in range(r)])
    return len(nullspace_q([x for x in rows if any(x)], n))


@dataclass
class DefDims:
    h0: int
    h1: int
    h2: int
    chi: int
    rr_chi: int
    graded: list = field(default_factory=list)  # (p, dim Gr^p of H^1)
    graded_h0: int | None = None
    graded_h2: int | None = None

    def to_json(self) -> dict:
        return {"h0": self.h0, "h1": self.h1, "h2": self.h2, "chi": self.chi,
                "graded": [{"p": p, "dim": d} for p, d in self.graded]}

    def graded_dim(self, p: int) -> int:
        return dict(self.graded).get(p, 0)

    def symmetric(self) -> bool:
        ps = {p for p, _ in self.graded} | {1 - p for p, _ in self.graded}
        return all(self.graded_dim(p) == self.graded_dim(1 - p) for p in ps)

    def f1_dim(self) -> int:
        return sum(d for p, d in self.graded if p >= 1)


def total_def_dims(s: FuchsianSystem, strong: bool = False, trace_free: bool = False) -> DefDims:
    """Dimensions for ``ParEnd -> X (x) Omega(log D)`` with the connection as differential.

    ``h0`` counts horizontal flag-preserving endomorphisms, ``h2`` is ``h0`` of
    the Serre-dual complex (strongly parabolic for the default variant, the
    same complex for the strong one) and ``h1`` follows from the Euler
    characteristic of the splitting types.
    """
    if s.k < 1:
        raise CohomError("at least one marked point is required")
    t0 = _end_term(s, 0, False, trace_free)
    t1 = _end_term(s, s.twist, strong, trace_free)
    chi = chi_bundle(t0.bundle) - chi_bundle(t1.bundle)
    rr = (t0.rr_degree() + t0.rank) - (t1.rr_degree() + t1.rank)
    h0 = horizontal_endomorphisms(s, False, trace_free)
    h2 = horizontal_endomorphisms(s, not strong, trace_free)
    return DefDims(h0, h0 + h2 - chi, h2, chi, rr)


def graded_def_dims(s: FuchsianSystem, F: GTFiltration, strong: bool = False, trace_free: bool = False,
                    require_stable: bool = True, cfg: SearchConfig = SearchConfig()) -> DefDims:
    e = kodaira_spencer(s, F)
    if require_stable and not is_stable(e, cfg):
        raise CohomError("graded system is not certified stable")
    return hodge_def_dims(e, strong, trace_free)


def hodge_def_dims(e: HodgeSystem, strong: bool = False, trace_free: bool = False) -> DefDims:
    graded, h0, h1, h2, chi, rr = [], 0, 0, 0, 0, 0
    for p in graded_range(e):
        g = graded_complex(e, p, strong, trace_free)
        a, b, c = hyper_dims(g.complex)
        graded.append((p, b))
        h0, h1, h2 = h0 + a, h1 + b, h2 + c
        chi += g.complex.chi
        rr += g.rr_chi
    return DefDims(h0, h1, h2, chi, rr, graded, h0, h2)


def parabolic_end_complex(s: FuchsianSystem, F: GTFiltration, p, strong: bool = False,
                          trace_free: bool = False):
    """Graded complex for integer p; for ``"total"`` the pair of terms of the full complex."""
    if s.k < 1:
        raise CohomError("at least one marked point is required")
    if p == "total":
        return _end_term(s, 0, False, trace_free), _end_term(s, s.twist, strong, trace_free)
    if not isinstance(p, int):
        raise CohomError(f"invalid graded index {p!r}")
    return graded_complex(kodaira_spencer(s, F), p, strong, trace_free)


def defdim_report(s: FuchsianSystem, F: GTFiltration, strong: bool = False,
                  cfg: SearchConfig = SearchConfig()) -> dict:
    out = {}
    for tf in (False, True):
        tot = total_def_dims(s, strong, tf)
        e = kodaira_spencer(s, F)
        stable = bool(is_stable(e, cfg))
        rep = tot.to_json()
        if stable:
            g = hodge_def_dims(e, strong, tf)
            rep["graded"] = [{"p": p, "dim": d} for p, d in g.graded]
            rep["degenerates"] = g.h1 == tot.h1
            rep["symmetric"] = g.symmetric()
        else:
            rep["graded"] = None
        rep["gr_stable"] = stable
        out["trace_free" if tf else "full"] = rep
    res = dict(out["full"])
    res["trace_free"] = out["trace_free"]
    res["variant"] = "strong" if strong else "parabolic"
    return res
