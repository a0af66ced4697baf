"""Split vector bundles on P^1, degree-bounded maps, subbundles and flags.

A bundle is ``O(d_1) + ... + O(d_r)`` with the d_i non-increasing.  Sections
of ``O(d)`` over the affine chart are polynomials of degree <= d, so a map
``O(a) -> O(b)(w)`` is a polynomial of degree <= ``b + w - a``.  The point at
infinity is never a marked point; it is checked through leading coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exactalg import (ONE, ZERO, Echelon, Poly, PolyMatrix,
                       minor_gcd, module_basis, nullspace_q, rank_q, rat, rref, solve_poly)


class BundleError(ValueError):
    pass


@dataclass(frozen=True)
class SplitBundle:
    degrees: tuple[int, ...] = ()

    def __post_init__(self):
        d = tuple(sorted((int(x) for x in self.degrees), reverse=True))
        if d != tuple(self.degrees):
            object.__setattr__(self, "degrees", d)

    @property
    def rank(self) -> int:
        return len(self.degrees)

    @property
    def degree(self) -> int:
        return sum(self.degrees)

    @classmethod
    def trivial(cls, r: int) -> "SplitBundle":
        return cls((0,) * r)


def _bound(target_deg: int, twist: int, source_deg: int) -> int:
    return target_deg + twist - source_deg


@dataclass(frozen=True)
class BundleMap:
    """Map ``source -> target (x) O(twist)``; degrees must be sorted as in the bundles."""

    source: SplitBundle
    target: SplitBundle
    twist: int
    matrix: PolyMatrix

    def __post_init__(self):
        m = self.matrix
        if (m.rows, m.cols) != (self.target.rank, self.source.rank):
            raise BundleError(f"matrix {m.rows}x{m.cols} does not fit {self.target.rank}x{self.source.rank}")
        for i, ti in enumerate(self.target.degrees):
            for j, sj in enumerate(self.source.degrees):
                if m.e[i][j].degree > _bound(ti, self.twist, sj):
                    raise BundleError(f"entry ({i},{j}) violates degree bound {_bound(ti, self.twist, sj)}")

    def bound(self, i: int, j: int) -> int:
        return _bound(self.target.degrees[i], self.twist, self.source.degrees[j])

    def leading_matrix(self) -> list[list]:
        """Coefficient of t^bound(i,j) in each entry: the map's fiber at infinity."""
        return [[self.matrix.e[i][j].coeff(self.bound(i, j)) if self.bound(i, j) >= 0 else ZERO
                 for j in range(self.source.rank)] for i in range(self.target.rank)]

    def compose(self, other: "BundleMap") -> "BundleMap":
        """``self o other``."""
        if other.target != self.source:
            raise BundleError("composition of incompatible maps")
        return BundleMap(other.source, self.target, self.twist + other.twist, self.matrix @ other.matrix)


@dataclass(frozen=True)
class SubbundleReport:
    full_rank: bool
    finite_saturated: bool
    infinity_saturated: bool
    minor_gcd: Poly | None = None

    @property
    def valid(self) -> bool:
        return self.full_rank and self.finite_saturated and self.infinity_saturated


def check_subbundle(m: BundleMap) -> SubbundleReport:
    if m.twist != 0:
        raise BundleError("a subbundle inclusion has twist 0")
    s = m.source.rank
    if s == 0:
        return SubbundleReport(True, True, True, None)
    full = m.matrix.rank() == s
    if not full:
        return SubbundleReport(False, False, False, None)
    g = minor_gcd(m.matrix, s)
    fin = g.degree == 0
    inf = rank_q(m.leading_matrix()) == s
    return SubbundleReport(True, fin, inf, g)


@dataclass(frozen=True)
class Subbundle:
    """A saturated subbundle, given by its inclusion map (twist 0)."""

    inclusion: BundleMap

    @property
    def bundle(self) -> SplitBundle:
        return self.inclusion.source

    @property
    def ambient(self) -> SplitBundle:
        return self.inclusion.target

    @property
    def matrix(self) -> PolyMatrix:
        return self.inclusion.matrix

    @property
    def rank(self) -> int:
        return self.bundle.rank

    @property
    def degree(self) -> int:
        return self.bundle.degree

    @classmethod
    def whole(cls, e: SplitBundle) -> "Subbundle":
        return cls(BundleMap(e, e, 0, PolyMatrix.identity(e.rank)))

    @classmethod
    def zero(cls, e: SplitBundle) -> "Subbundle":
        return cls(BundleMap(SplitBundle(), e, 0, PolyMatrix.zeros(e.rank, 0)))

    @classmethod
    def checked(cls, m: BundleMap) -> "Subbundle":
        rep = check_subbundle(m)
        if not rep.valid:
            raise BundleError(f"not a subbundle: {rep}")
        return cls(m)


def _subbundle_from_picks(ambient: SplitBundle, picks) -> Subbundle:
    # picks: (shifted degree delta, vector); the line is O(-delta)
    picks = sorted(picks, key=lambda p: p[0])
    src = SplitBundle(tuple(-d for d, _ in picks))
    mat = PolyMatrix.from_columns([v for _, v in picks], ambient.rank) if picks else PolyMatrix.zeros(ambient.rank, 0)
    return Subbundle(BundleMap(src, ambient, 0, mat))


def left_annihilator(m: PolyMatrix) -> PolyMatrix:
    """Rows spanning the saturated module of row vectors killing the columns of m."""
    n = m.rows
    rk = n - m.rank()
    picks = module_basis(n, [0] * n, rk, eqs=m.T)
    if not picks:
        return PolyMatrix.zeros(0, n)
    return PolyMatrix([v for _, v in picks], len(picks), n)


def saturate(m: BundleMap) -> Subbundle:
    """Saturation of the image of an injective map ``m`` with twist 0."""
    if m.twist != 0:
        raise BundleError("saturate expects twist 0")
    s = m.source.rank
    if m.matrix.rank() != s:
        raise BundleError("saturate needs an injective (full column rank) map")
    r = m.target.rank
    ann = left_annihilator(m.matrix)
    picks = module_basis(r, list(m.target.degrees), s, eqs=ann if ann.rows else None)
    return _subbundle_from_picks(m.target, picks)


def span_subbundle(target: SplitBundle, vectors: PolyMatrix) -> Subbundle:
    """Saturated subbundle generated by polynomial column vectors (any rank)."""
    r = target.rank
    s = vectors.rank()
    if s == 0:
        return Subbundle.zero(target)
    ann = left_annihilator(vectors)
    picks = module_basis(r, list(target.degrees), s, eqs=ann if ann.rows else None)
    return _subbundle_from_picks(target, picks)


def kernel_subbundle(m: BundleMap) -> Subbundle:
    n = m.source.rank
    rk = n - m.matrix.rank()
    picks = module_basis(n, list(m.source.degrees), rk, eqs=m.matrix) if rk else []
    return _subbundle_from_picks(m.source, picks)


def quotient(sub: Subbundle) -> tuple[SplitBundle, BundleMap]:
    """Quotient bundle and projection, through the dual of the inclusion."""
    if not check_subbundle(sub.inclusion).valid:
        raise BundleError("quotient of an invalid subbundle")
    amb = sub.ambient
    r, s = amb.rank, sub.rank
    eqs = sub.matrix.T if s else None
    picks = module_basis(r, [-d for d in amb.degrees], r - s, eqs=eqs)
    picks = sorted(picks, key=lambda p: -p[0])
    q = SplitBundle(tuple(d for d, _ in picks))
    proj = PolyMatrix([v for _, v in picks], len(picks), r) if picks else PolyMatrix.zeros(0, r)
    return q, BundleMap(amb, q, 0, proj)


def sub_in_frame(big: Subbundle, small: Subbundle) -> Subbundle:
    """Express ``small`` (contained in ``big``, same ambient) as a subbundle of big.bundle."""
    c = solve_poly(big.matrix, small.matrix)
    return Subbundle(BundleMap(small.bundle, big.bundle, 0, c))


def compose_sub(outer: Subbundle, inner: Subbundle) -> Subbundle:
    """``inner`` is a subbundle of ``outer.bundle``; return it inside ``outer.ambient``."""
    return Subbundle(BundleMap(inner.bundle, outer.ambient, 0, outer.matrix @ inner.matrix))


# ----------------------------------------------------------------------------
# parabolic structure


def _canon(vectors: Sequence[Sequence], dim: int) -> tuple:
    rows = [list(map(rat, v)) for v in vectors if any(rat(x) for x in v)]
    R, _ = rref(rows) if rows else ([], [])
    return tuple(tuple(r) for r in R)


@dataclass(frozen=True)
class Flag:
    """Increasing filtration of a fiber ``Q^n``: ``spaces[j]`` is spanned by steps 0..j.

    Weights are strictly decreasing; a vector first contained in ``spaces[j]``
    carries weight ``weights[j]``.  Spaces are stored as rref row bases.
    """

    dim: int
    weights: tuple
    spaces: tuple

    @classmethod
    def build(cls, dim: int, weights: Sequence, spaces: Sequence[Sequence[Sequence]]) -> "Flag":
        ws, ss = [], []
        last = 0
        for w, sp in zip(weights, spaces):
            c = _canon(sp, dim)
            if len(c) > last:
                ws.append(rat(w))
                ss.append(c)
                last = len(c)
        for a, b in zip(ws, ws[1:]):
            if not a > b:
                raise BundleError("flag weights must strictly decrease")
        if ws and not (ZERO <= ws[-1] and ws[0] < ONE):
            raise BundleError("flag weights must lie in [0, 1)")
        if last != dim:
            raise BundleError(f"flag does not exhaust the fiber ({last} < {dim})")
        return cls(dim, tuple(ws), tuple(ss))

    @classmethod
    def from_steps(cls, dim: int, steps: Sequence[tuple]) -> "Flag":
        """``steps``: (weight, vectors) with strictly decreasing weights."""
        acc, spaces, weights = [], [], []
        for w, vecs in steps:
            acc = acc + [list(v) for v in vecs]
            spaces.append(list(acc))
            weights.append(w)
        return cls.build(dim, weights, spaces)

    @classmethod
    def trivial(cls, dim: int) -> "Flag":
        if dim == 0:
            return cls(0, (), ())
        return cls.build(dim, [ZERO], [[[ONE if i == j else ZERO for i in range(dim)] for j in range(dim)]])

    def jumps(self) -> list[tuple]:
        """(weight, multiplicity) per step."""
        out, last = [], 0
        for w, s in zip(self.weights, self.spaces):
            out.append((w, len(s) - last))
            last = len(s)
        return out

    def total_weight(self):
        return sum((w * m for w, m in self.jumps()), ZERO)

    def step_of(self, v: Sequence) -> int:
        """Index of the first space containing the nonzero vector v."""
        for j, s in enumerate(self.spaces):
            if rank_q(list(s) + [list(v)]) == len(s):
                return j
        raise BundleError("vector not in fiber")

    def annihilator(self, j: int) -> list[list]:
        """Rows whose common kernel is ``spaces[j]`` (j = -1 means the zero space)."""
        if j < 0:
            return [[ONE if a == b else ZERO for a in range(self.dim)] for b in range(self.dim)]
        return nullspace_q([list(r) for r in self.spaces[j]], self.dim) if self.spaces[j] else \
            [[ONE if a == b else ZERO for a in range(self.dim)] for b in range(self.dim)]

    def induced_sub(self, inc: Sequence[Sequence]) -> "Flag":
        """Flag on a subspace given by the columns of the n x s matrix ``inc`` (full rank)."""
        n = self.dim
        s = len(inc[0]) if inc else 0
        if s == 0:
            return Flag(0, (), ())
        spaces = []
        for sp in self.spaces:
            # c with inc.c in span(sp): solve [inc | -sp^T] (c, y) = 0
            k = len(sp)
            rows = [[inc[i][a] for a in range(s)] + [-sp[b][i] for b in range(k)] for i in range(n)]
            ns = nullspace_q(rows, s + k)
            spaces.append([v[:s] for v in ns])
        ws, ss, last = [], [], 0
        for w, sp in zip(self.weights, spaces):
            c = _canon(sp, s)
            if len(c) > last:
                ws.append(w)
                ss.append(c)
                last = len(c)
        return Flag(s, tuple(ws), tuple(ss))

    def induced_quotient(self, proj: Sequence[Sequence]) -> "Flag":
        """Image flag under the surjection given by the q x n matrix ``proj``."""
        q = len(proj)
        if q == 0:
            return Flag(0, (), ())
        ws, ss, last = [], [], 0
        for w, sp in zip(self.weights, self.spaces):
            img = [[sum((proj[i][a] * v[a] for a in range(self.dim)), ZERO) for i in range(q)] for v in sp]
            c = _canon(img, q)
            if len(c) > last:
                ws.append(w)
                ss.append(c)
                last = len(c)
        if last != q:
            raise BundleError("projection is not surjective on the fiber")
        return Flag(q, tuple(ws), tuple(ss))

    def to_json(self) -> list:
        from .exactalg import format_rat
        out, prev = [], []
        for w, s in zip(self.weights, self.spaces):
            # report a complement of the previous space inside this one
            ech = Echelon(self.dim)
            for r in prev:
                ech.add(r)
            step = [list(r) for r in s if ech.add(r)]
            out.append({"weight": format_rat(w), "vectors": [[format_rat(x) for x in v] for v in step]})
            prev = list(s)
        return out


@dataclass(frozen=True)
class ParabolicData:
    """Marked points and one fiber flag per point for a fixed bundle."""

    points: tuple
    flags: tuple

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise BundleError("marked points must be distinct")
        if len(self.points) != len(self.flags):
            raise BundleError("one flag per point")

    @classmethod
    def trivial(cls, points: Sequence, rank: int) -> "ParabolicData":
        return cls(tuple(rat(x) for x in points), tuple(Flag.trivial(rank) for _ in points))

    @property
    def k(self) -> int:
        return len(self.points)

    def total_weight(self):
        return sum((f.total_weight() for f in self.flags), ZERO)

    def induced_sub(self, sub: Subbundle) -> "ParabolicData":
        return ParabolicData(self.points, tuple(
            f.induced_sub(sub.matrix.evaluate(x)) for x, f in zip(self.points, self.flags)))

    def induced_quotient(self, proj: BundleMap) -> "ParabolicData":
        return ParabolicData(self.points, tuple(
            f.induced_quotient(proj.matrix.evaluate(x)) for x, f in zip(self.points, self.flags)))


def par_degree_bundle(e: SplitBundle, pd: ParabolicData):
    return rat(e.degree) + pd.total_weight()


def par_degree(sub: Subbundle, pd: ParabolicData):
    """Degree of ``sub`` plus the weights of its induced flags at every point."""
    return par_degree_bundle(sub.bundle, pd.induced_sub(sub))
