"""Seeded random generators for Fuchsian systems and Hodge systems."""
from __future__ import annotations

import random
from typing import Sequence

from .bundle import Flag, ParabolicData, SplitBundle
from .connection import FuchsianSystem, eigen_decomposition
from .exactalg import ONE, ZERO, Poly, PolyMatrix, det, rat, solve_q
from .hodge import HodgeLevel, HodgeSystem


def _inverse(m):
    r = len(m)
    return solve_q(m, [[ONE if i == j else ZERO for j in range(r)] for i in range(r)])


def _mul(a, b):
    return [[sum((a[i][l] * b[l][j] for l in range(len(b))), ZERO) for j in range(len(b[0]))]
            for i in range(len(a))]


def _random_invertible(rng: random.Random, r: int, height: int = 2):
    while True:
        s = [[rat(rng.randint(-height, height)) for _ in range(r)] for _ in range(r)]
        if det(PolyMatrix.constant(s)).c:
            return s


def _adjugate_times(x, u):
    """``adj(zI - X) u`` as a list of polynomials in z."""
    r = len(x)
    zi = [[Poly([-x[i][j], ONE]) if i == j else Poly.const(-x[i][j]) for j in range(r)] for i in range(r)]
    out = []
    for i in range(r):
        acc = Poly.const(0)
        for j in range(r):
            if r == 1:
                cof = Poly.const(1)
            else:
                minor = [[zi[a][b] for b in range(r) if b != i] for a in range(r) if a != j]
                cof = det(PolyMatrix(minor, r - 1, r - 1))
            if (i + j) % 2:
                cof = -cof
            acc = acc + cof * Poly.const(u[j])
        out.append(acc)
    return out


def weights_from_eigenvalues(eigs: Sequence) -> list[tuple]:
    """Distinct eigenvalues, descending, with weight ``lambda - min lambda``."""
    ds = sorted(set(rat(e) for e in eigs), reverse=True)
    lo = ds[-1]
    if ds[0] - lo >= 1:
        raise ValueError("eigenvalue spread at a point must be < 1")
    return [(q, q - lo) for q in ds]


def system_from_eigenvalues(rng: random.Random, points: Sequence, eigs: Sequence[Sequence],
                            height: int = 2, tries: int = 200) -> FuchsianSystem:
    """Residues with prescribed rational eigenvalues, summing to zero.

    The last two points are special: at point ``k-2`` the eigenvalues must be
    ``(c, ..., c, c')``; there ``A = cI + u w^T`` with ``w`` chosen so that
    ``-(sum of the others)`` has the eigenvalues requested at the last point.
    """
    pts = tuple(rat(x) for x in points)
    k, r = len(pts), len(eigs[0])
    if k < 3:
        raise ValueError("need at least three points")
    eigs = [[rat(e) for e in ev] for ev in eigs]
    if sum((sum(ev, ZERO) for ev in eigs), ZERO) != 0:
        raise ValueError("eigenvalues must sum to zero (Fuchs relation)")
    c = eigs[k - 2][0]
    if any(e != c for e in eigs[k - 2][:-1]):
        raise ValueError("point k-2 needs eigenvalues (c, ..., c, c')")
    target = Poly.from_roots([-e for e in eigs[k - 1]])
    for _ in range(tries):
        res = []
        for ev in eigs[:k - 2]:
            s = _random_invertible(rng, r, height)
            res.append(_mul(_mul(s, [[ev[i] if i == j else ZERO for j in range(r)] for i in range(r)]),
                            _inverse(s)))
        x = [[sum((a[i][j] for a in res), ZERO) + (c if i == j else ZERO) for j in range(r)] for i in range(r)]
        u = [rat(rng.randint(-height, height)) for _ in range(r)]
        if not any(u):
            continue
        charx = det(PolyMatrix([[Poly([-x[i][j], ONE]) if i == j else Poly.const(-x[i][j])
                                 for j in range(r)] for i in range(r)], r, r))
        adj = _adjugate_times(x, u)
        # char(X + u w^T) = char(X) - w . adj(zI - X) u
        rows = [[adj[i].coeff(m) for i in range(r)] for m in range(r)]
        rhs = [charx.coeff(m) - target.coeff(m) for m in range(r)]
        sol = solve_q(rows, [[v] for v in rhs])
        if sol is None:
            continue
        w = [row[0] for row in sol]
        uw = sum((u[i] * w[i] for i in range(r)), ZERO)
        if uw == 0 and eigs[k - 2][-1] != c:
            continue
        a1 = [[(c if i == j else ZERO) + u[i] * w[j] for j in range(r)] for i in range(r)]
        ak = [[-(x[i][j] + u[i] * w[j]) for j in range(r)] for i in range(r)]
        res += [a1, ak]
        try:
            return _assemble(pts, res)
        except ValueError:
            continue
    raise ValueError("could not realize the requested eigenvalues")


def _assemble(points, residues) -> FuchsianSystem:
    r = len(residues[0])
    flags = []
    for a in residues:
        dec = eigen_decomposition(a)
        lo = dec[-1][0]
        if dec[0][0] - lo >= 1:
            raise ValueError("eigenvalue spread at a point must be < 1")
        flags.append(Flag.from_steps(r, [(q - lo, ns) for q, ns in dec]))
    res = tuple(tuple(tuple(x for x in row) for row in a) for a in residues)
    return FuchsianSystem(r, tuple(points), res, ParabolicData(tuple(points), tuple(flags)))


def system_from_residues(points: Sequence, residues: Sequence) -> FuchsianSystem:
    """Fuchsian system with eigenspace flags and weights ``lambda - min lambda``."""
    return _assemble(tuple(rat(x) for x in points),
                     [[[rat(x) for x in row] for row in a] for a in residues])


def rank2_system(rng: random.Random, points: Sequence, a: Sequence, height: int = 2) -> FuchsianSystem:
    """Rank-2 system with eigenvalues ``(a_i, -a_i)`` at point i, ``0 <= a_i < 1/2``.

    Weights are then ``(2 a_i, 0)``, and the Kostov walls are ``sum eps_i a_i in Z``.
    """
    a = [rat(x) for x in a]
    if a[len(a) - 2] == 0:
        raise ValueError("the second-to-last parameter must be nonzero")
    return system_from_eigenvalues(rng, points, [[x, -x] for x in a], height)


def random_rank2_weights(rng: random.Random, k: int, den: int = 97) -> list:
    """Parameters ``a_i`` in (0, 1/2) for :func:`rank2_system`."""
    return [rat(rng.randint(1, den // 2 - 1)) / den for _ in range(k)]


def random_rank3_system(rng: random.Random, points: Sequence, height: int = 2, den: int = 13) -> FuchsianSystem:
    """Rank-3 system; point k-2 has a repeated eigenvalue by construction."""
    k = len(points)
    step = rat(1) / den
    while True:
        eigs = []
        for i in range(k - 1):
            if i == k - 2:
                c = rng.randint(0, den - 2) * step
                eigs.append([c, c, c + rng.randint(1, den - 1) * step])
            else:
                eigs.append(sorted((j * step for j in rng.sample(range(den), 3)), reverse=True))
        tot = sum((sum(ev, ZERO) for ev in eigs), ZERO)
        eigs.append([-tot / 3 + step, -tot / 3, -tot / 3 - step])
        try:
            return system_from_eigenvalues(rng, points, eigs, height)
        except ValueError:
            continue


def random_hodge_system(rng: random.Random, points: Sequence, ranks: Sequence[int],
                        deg_range: tuple = (-2, 2), theta_density: float = 0.7,
                        weight_den: int = 5) -> HodgeSystem:
    """Random graded Higgs bundle with the given level ranks (level p = index)."""
    pts = tuple(rat(x) for x in points)
    k = len(pts)
    levels = {}
    for p, r in enumerate(ranks):
        degs = tuple(rng.randint(*deg_range) for _ in range(r))
        flags = []
        for _ in pts:
            ws = sorted({rat(rng.randint(0, weight_den - 1)) / weight_den for _ in range(r)}, reverse=True)
            vecs = [[rat(rng.randint(-2, 2)) for _ in range(r)] for _ in range(r)]
            steps = []
            for j, w in enumerate(ws):
                take = vecs[j:j + 1] if j < len(ws) - 1 else vecs[j:]
                steps.append((w, take))
            try:
                flags.append(Flag.from_steps(r, steps))
            except Exception:
                flags.append(Flag.trivial(r))
        levels[p] = HodgeLevel(SplitBundle(degs), ParabolicData(pts, tuple(flags)))
    theta = {}
    for p in range(1, len(ranks)):
        src, tgt = levels[p].bundle, levels[p - 1].bundle
        rows = []
        for i in range(tgt.rank):
            row = []
            for j in range(src.rank):
                b = tgt.degrees[i] + k - 2 - src.degrees[j]
                if b < 0 or rng.random() > theta_density:
                    row.append(Poly.const(0))
                else:
                    row.append(Poly([rat(rng.randint(-3, 3)) for _ in range(b + 1)]))
            rows.append(row)
        theta[p] = PolyMatrix(rows, tgt.rank, src.rank)
    return HodgeSystem(pts, levels, theta)
