"""Exhaustive destabilizer enumeration for rank-2 Hodge systems.

Independent of the search in :mod:`hodge`: linear systems are solved with
sympy, and every (degree, incidence profile) pair is tried.  A nonzero sheaf
map ``O(d) -> E`` meeting the flag conditions on a set S of points certifies a
saturated line of parabolic degree at least ``d + weights(S)``: saturating adds
one to the degree per zero, more than any weight it can lose.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import sympy

from .hodge import HodgeSystem


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    slope: Fraction
    rank: int
    levels: tuple  # level indices carrying the destabilizer


def _q(x) -> Fraction:
    return Fraction(str(x))


def _flag_data(flag):
    """(top weight, top space or None, bottom weight) of a fiber flag of dimension <= 2."""
    ws = [_q(w) for w in flag.weights]
    if len(ws) == 1:
        return ws[0], None, ws[0]
    return ws[0], [_q(c) for c in flag.spaces[0][0]], ws[1]


def _line_exists(a: int, b: int, d: int, conditions) -> bool:
    """Nonzero ``(f, g)`` with deg f <= a-d, deg g <= b-d and ``(f, g)(x)`` in each line."""
    nf, ng = max(a - d + 1, 0), max(b - d + 1, 0)
    if nf + ng == 0:
        return False
    rows = []
    for x, v in conditions:
        # (f(x), g(x)) parallel to v:  v1 f(x) - v0 g(x) = 0
        x = sympy.Rational(str(x))
        row = [sympy.Rational(str(v[1])) * x ** i for i in range(nf)] + \
              [-sympy.Rational(str(v[0])) * x ** i for i in range(ng)]
        rows.append(row)
    if not rows:
        return True
    return len(sympy.Matrix(rows).nullspace()) > 0


def _single_level(e: HodgeSystem, p: int):
    lv = e.levels[p]
    a, b = lv.bundle.degrees
    data = [_flag_data(f) for f in lv.par.flags]
    total = _q(lv.pardeg)
    mu = total / 2
    base = sum((lo for _, _, lo in data), Fraction(0))
    free = [i for i, (_, sp, _) in enumerate(data) if sp is not None]
    best = None
    lo_d = int(mu) - len(e.points) - 2
    for d in range(lo_d, a + 1):
        for n in range(len(free) + 1):
            for S in itertools.combinations(free, n):
                val = d + base + sum((data[i][0] - data[i][2] for i in S), Fraction(0))
                if best is not None and val <= best:
                    continue
                conds = [(e.points[i], data[i][1]) for i in S]
                if _line_exists(a, b, d, conds):
                    best = val
    if best is not None and best > mu:
        return OracleResult(best, 1, (p,))
    return None


def brute_force_destabilizer(e: HodgeSystem) -> OracleResult | None:
    """Maximal destabilizing graded sub of a rank-2 system, or None if semistable."""
    if e.rank != 2:
        raise OracleError("the oracle handles rank 2 only")
    ix = e.indices
    if len(ix) == 1:
        return _single_level(e, ix[0])
    lo, hi = ix
    mu = _q(e.pardeg) / 2
    cands = [(_q(e.levels[lo].pardeg), lo)]
    if hi not in e.theta or e.theta[hi].is_zero():
        cands.append((_q(e.levels[hi].pardeg), hi))
    cands = [c for c in cands if c[0] > mu]
    if not cands:
        return None
    s, p = max(cands)
    return OracleResult(s, 1, (p,))
