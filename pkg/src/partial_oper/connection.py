"""Fuchsian systems, Griffiths-transverse filtrations and the modification loop.

The connection on the trivial bundle ``V = O^r`` is
``d + sum_i A_i dt / (t - x_i)`` with ``sum_i A_i = 0`` (no pole at infinity).
Under ``Omega^1(log D) = O(k-2)``, ``dt/P(t) -> 1`` with ``P = prod (t - x_i)``,
so in coordinates ``nabla f = P f' + A(t) f`` where
``A(t) = sum_i A_i prod_{j != i} (t - x_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import sympy

from .bundle import (BundleMap, Flag, ParabolicData, SplitBundle, Subbundle, compose_sub,
                     kernel_subbundle, par_degree, quotient, sub_in_frame)
from .exactalg import (ZERO, ExactAlgebraError, Poly, PolyMatrix, format_rat, nullspace_q,
                       rank_q, rat, solve_poly)
from .hodge import (GradedSub, HNInvariants, HodgeLevel, HodgeSystem, SearchConfig, is_semistable,
                    max_destabilizer)


class SystemError_(ValueError):
    """Invalid Fuchsian system input."""


class TransversalityError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class CertificationError(RuntimeError):
    """A post-condition failed; always indicates a bug."""


def _matmul_q(a, b):
    return [[sum((a[i][l] * b[l][j] for l in range(len(b))), ZERO) for j in range(len(b[0]))] for i in range(len(a))]


@dataclass(frozen=True, eq=False)
class FuchsianSystem:
    rank: int
    points: tuple
    residues: tuple  # r x r rational matrices (tuples of tuples)
    par: ParabolicData

    @cached_property
    def P(self) -> Poly:
        return Poly.from_roots(self.points)

    @cached_property
    def A(self) -> PolyMatrix:
        """``sum_i A_i prod_{j != i}(t - x_j)``, the coefficient matrix of nabla."""
        r = self.rank
        acc = PolyMatrix.zeros(r, r)
        for i, (x, a) in enumerate(zip(self.points, self.residues)):
            w = Poly.from_roots([y for j, y in enumerate(self.points) if j != i])
            acc = acc + PolyMatrix.constant(a).scale(w)
        return acc

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def twist(self) -> int:
        return self.k - 2

    @property
    def V(self) -> SplitBundle:
        return SplitBundle.trivial(self.rank)


@dataclass(frozen=True)
class ValidationReport:
    eigenvalues: tuple  # per point, sorted descending with multiplicity
    steps_scalar: bool  # residue acts as a scalar on every flag step


def eigen_decomposition(a: Sequence[Sequence]) -> list[tuple]:
    """(eigenvalue, eigenspace basis) pairs, eigenvalues descending; requires rational semisimple."""
    r = len(a)
    ev = sympy.Matrix([[sympy.Rational(str(x)) for x in row] for row in a]).eigenvals()
    out = []
    total = 0
    for lam, mult in ev.items():
        if not lam.is_rational:
            raise SystemError_(f"irrational eigenvalue {lam}")
        q = rat(str(lam))
        rows = [[a[i][j] - (q if i == j else ZERO) for j in range(r)] for i in range(r)]
        ns = nullspace_q(rows, r)
        if len(ns) != mult:
            raise SystemError_("residue is not semisimple")
        total += mult
        out.append((q, ns))
    if total != r:
        raise SystemError_("eigenvalues do not account for the rank")
    return sorted(out, key=lambda x: -x[0])


def _invariant(a, space) -> bool:
    r = len(a)
    img = [[sum((a[i][j] * v[j] for j in range(r)), ZERO) for i in range(r)] for v in space]
    return rank_q([list(v) for v in space] + img) == len(space)


def _shift_into(a, q, space, prev) -> bool:
    """(A - q) maps ``space`` into ``prev``."""
    r = len(a)
    for v in space:
        w = [sum((a[i][j] * v[j] for j in range(r)), ZERO) - q * v[i] for i in range(r)]
        if rank_q([list(u) for u in prev] + [w]) != len(prev):
            return False
    return True


def validate_system(s: FuchsianSystem) -> ValidationReport:
    r = s.rank
    if len(s.residues) != s.k:
        raise SystemError_("one residue matrix per point")
    if s.par.points != s.points:
        raise SystemError_("parabolic points differ from the pole set")
    for a in s.residues:
        if len(a) != r or any(len(row) != r for row in a):
            raise SystemError_("residue has the wrong shape")
    for i in range(r):
        for j in range(r):
            if sum((a[i][j] for a in s.residues), ZERO) != 0:
                raise SystemError_("residues do not sum to zero")
    eigs, scalar = [], True
    for a, f in zip(s.residues, s.par.flags):
        dec = eigen_decomposition(a)
        eigs.append(tuple(q for q, ns in dec for _ in ns))
        if f.dim != r:
            raise SystemError_("flag dimension differs from the rank")
        prev = []
        for sp in f.spaces:
            if not _invariant(a, sp):
                raise SystemError_("flag step is not invariant under the residue")
            scalar = scalar and any(_shift_into(a, q, sp, prev) for q, _ in dec)
            prev = list(sp)
    return ValidationReport(tuple(eigs), scalar)


def apply_nabla(s: FuchsianSystem, f: Sequence[Poly]) -> list[Poly]:
    """``P f' + A(t) f``: the connection in the log-form trivialization."""
    P = s.P
    out = []
    for i in range(s.rank):
        acc = P * f[i].derivative()
        for j in range(s.rank):
            if s.A.e[i][j].c and f[j].c:
                acc = acc + s.A.e[i][j] * f[j]
        out.append(acc)
    return out


def nabla_matrix(s: FuchsianSystem, b: PolyMatrix) -> PolyMatrix:
    """Apply the connection to every column of ``b``."""
    return b.derivative().scale(s.P) + s.A @ b


# ----------------------------------------------------------------------------
# filtrations


@dataclass(frozen=True, eq=False)
class GTFiltration:
    """``chain[0] = V > chain[1] > ... > chain[-1] = 0`` (equal neighbours allowed = gaps)."""

    chain: tuple

    @classmethod
    def trivial(cls, r: int) -> "GTFiltration":
        V = SplitBundle.trivial(r)
        return cls((Subbundle.whole(V), Subbundle.zero(V)))

    @property
    def length(self) -> int:
        return len(self.chain) - 1

    def ranks(self) -> list[int]:
        return [f.rank for f in self.chain]

    def normalized(self) -> tuple["GTFiltration", int]:
        """Drop repeated copies of V at the start and of 0 at the end; return the index offset."""
        ch = list(self.chain)
        r = ch[0].ambient.rank
        off = 0
        while len(ch) > 2 and ch[1].rank == r:
            ch.pop(0)
            off += 1
        while len(ch) > 2 and ch[-2].rank == 0:
            ch.pop()
        return GTFiltration(tuple(ch)), off

    def is_trivial(self) -> bool:
        return self.normalized()[0].length == 1

    def to_json(self) -> list:
        return [{"p": p, "degrees": list(f.bundle.degrees), "matrix": f.matrix.to_json()}
                for p, f in enumerate(self.chain)]


def check_chain(F: GTFiltration) -> None:
    ch = F.chain
    if not ch or ch[0].rank != ch[0].ambient.rank or ch[-1].rank != 0:
        raise TransversalityError("chain must start at V and end at 0")
    for a, b in zip(ch, ch[1:]):
        if b.rank > a.rank:
            raise TransversalityError("chain is not decreasing")
        if b.rank:
            try:
                solve_poly(a.matrix, b.matrix)
            except ExactAlgebraError:
                raise TransversalityError("chain is not nested") from None


def check_transversality(s: FuchsianSystem, F: GTFiltration) -> bool:
    check_chain(F)
    for p in range(1, F.length):
        fp, fq = F.chain[p], F.chain[p - 1]
        if fp.rank == 0 or fq.rank == s.rank:
            continue
        _, proj = quotient(fq)
        if not (proj.matrix @ nabla_matrix(s, fp.matrix)).is_zero():
            return False
    return True


@dataclass(frozen=True, eq=False)
class GradedPiece:
    p: int
    F: Subbundle          # F^p inside V
    E: SplitBundle        # F^p / F^{p+1}
    proj: BundleMap       # F^p.bundle -> E
    par: ParabolicData    # induced flags on E


def graded_pieces(s: FuchsianSystem, F: GTFiltration) -> list[GradedPiece]:
    out = []
    for p in range(F.length):
        fp, fn = F.chain[p], F.chain[p + 1]
        if fp.rank == fn.rank:
            out.append(GradedPiece(p, fp, SplitBundle(), BundleMap(fp.bundle, SplitBundle(), 0,
                                                                    PolyMatrix.zeros(0, fp.rank)),
                                   ParabolicData(s.points, tuple(Flag(0, (), ()) for _ in s.points))))
            continue
        inner = sub_in_frame(fp, fn) if fn.rank else Subbundle.zero(fp.bundle)
        e, proj = quotient(inner)
        par = s.par.induced_sub(fp).induced_quotient(proj)
        out.append(GradedPiece(p, fp, e, proj, par))
    return out


def kodaira_spencer(s: FuchsianSystem, F: GTFiltration, pieces: list[GradedPiece] | None = None) -> HodgeSystem:
    """Associated graded Higgs bundle ``(Gr_F V, theta)``."""
    if not check_transversality(s, F):
        raise TransversalityError("filtration is not Griffiths transverse")
    pieces = pieces or graded_pieces(s, F)
    levels = {g.p: HodgeLevel(g.E, g.par) for g in pieces}
    theta = {}
    for g in pieces[1:]:
        prev = pieces[g.p - 1]
        if g.E.rank == 0 or prev.E.rank == 0:
            continue
        coords = solve_poly(prev.F.matrix, nabla_matrix(s, g.F.matrix))
        phi = prev.proj.matrix @ coords  # F^p -> E^{p-1}(k-2), kills F^{p+1}
        theta[g.p] = solve_poly(g.proj.matrix.T, phi.T).T
    return HodgeSystem(s.points, levels, theta)


def modify(s: FuchsianSystem, F: GTFiltration, h: GradedSub,
           pieces: list[GradedPiece] | None = None) -> GTFiltration:
    """``G^p = ker(V -> (V/F^p)/H^{p-1})``, returned un-normalized with indices 0..m+1."""
    pieces = pieces or graded_pieces(s, F)
    V = s.V
    chain = [Subbundle.whole(V)]
    for p in range(1, F.length + 1):
        g = pieces[p - 1]
        if g.E.rank == 0:
            chain.append(g.F)
            continue
        hq = h.parts.get(p - 1) or Subbundle.zero(g.E)
        if hq.rank == g.E.rank:
            chain.append(g.F)
            continue
        if hq.rank == 0:
            q = PolyMatrix.identity(g.E.rank)
            target = g.E
        else:
            target, qmap = quotient(hq)
            q = qmap.matrix
        k = kernel_subbundle(BundleMap(g.F.bundle, target, 0, q @ g.proj.matrix))
        chain.append(compose_sub(g.F, k))
    chain.append(Subbundle.zero(V))
    return GTFiltration(tuple(chain))


def _sub_data(s: FuchsianSystem, f: Subbundle) -> tuple:
    return (f.rank, f.degree, par_degree(f, s.par) if f.rank else ZERO)


def modification_bookkeeping(s: FuchsianSystem, E: HodgeSystem, h: GradedSub, G: GTFiltration) -> list[tuple]:
    """Per level p: (rank, degree, pardeg) of Gr_G^p and of (Gr_F^p / H^p) + H^{p-1}.

    The left side is computed from subbundles of V, the right side from the
    graded system's own flags, so the two routes are independent.
    """
    out = []
    hdata = {p: (sb.rank, sb.degree, par_degree(sb, E.levels[p].par) if sb.rank else ZERO)
             for p, sb in h.parts.items()}
    for p in range(G.length):
        a, b = _sub_data(s, G.chain[p]), _sub_data(s, G.chain[p + 1])
        lhs = tuple(x - y for x, y in zip(a, b))
        lv = E.levels.get(p)
        e = (lv.rank, lv.bundle.degree, lv.pardeg) if lv else (0, 0, ZERO)
        hp = hdata.get(p, (0, 0, ZERO))
        hm = hdata.get(p - 1, (0, 0, ZERO))
        rhs = tuple(x - y + z for x, y, z in zip(e, hp, hm))
        out.append((p, lhs, rhs))
    return out


# ----------------------------------------------------------------------------
# iteration


@dataclass
class TraceStep:
    index: int
    invariants: HNInvariants
    levels: list      # (p, rank, degree, pardeg) of Gr_F
    destabilizer: list  # (p, rank, degree, pardeg) of H

    def to_json(self) -> dict:
        def lv(rows):
            return [{"p": p, "rank": r, "degree": d, "pardeg": format_rat(q)} for p, r, d, q in rows]
        return {"step": self.index, "beta": format_rat(self.invariants.beta), "rho": self.invariants.rho,
                "gamma": format_rat(self.invariants.gamma), "levels": lv(self.levels),
                "destabilizer": {"levels": lv(self.destabilizer)}}


@dataclass
class IterationTrace:
    steps: list = field(default_factory=list)

    def descending(self) -> bool:
        return all(b.invariants.key() < a.invariants.key() for a, b in zip(self.steps, self.steps[1:]))


@dataclass(frozen=True)
class IterationConfig:
    budget: int = 64
    search: SearchConfig = SearchConfig()
    certify: bool = True


def graded_level_data(E: HodgeSystem) -> list[tuple]:
    return [(p, l.rank, l.bundle.degree, l.pardeg) for p, l in sorted(E.levels.items())]


def iterate_to_partial_oper(s: FuchsianSystem, config: IterationConfig = IterationConfig()):
    """Iterate destabilizing modifications from the trivial filtration.

    Returns ``(F, E, trace)`` with ``E = kodaira_spencer(s, F)`` semistable.
    """
    F = GTFiltration.trivial(s.rank)
    trace = IterationTrace()
    for step in range(config.budget + 1):
        pieces = graded_pieces(s, F)
        E = kodaira_spencer(s, F, pieces)
        res = max_destabilizer(E, config.search)
        if res is None:
            if config.certify and not is_semistable(E, config.search):
                raise CertificationError("final object failed the semistability check")
            return F, E, trace
        if step == config.budget:
            break
        h, inv = res
        trace.steps.append(TraceStep(step, inv, graded_level_data(E), h.level_data(E)))
        if config.certify and len(trace.steps) > 1:
            if not inv.key() < trace.steps[-2].invariants.key():
                raise CertificationError(f"invariants did not descend at step {step}")
        G = modify(s, F, h, pieces)
        if config.certify:
            for p, lhs, rhs in modification_bookkeeping(s, E, h, G):
                if lhs != rhs:
                    raise CertificationError(f"exact-sequence bookkeeping fails at level {p}: {lhs} != {rhs}")
            if not check_transversality(s, G):
                raise CertificationError("modified filtration is not transverse")
        F, _ = G.normalized()
    raise BudgetExceeded(f"no semistable filtration within {config.budget} modifications")
