import pytest
import sympy
from hypothesis import given, settings, strategies as st

from conftest import M, P
from partial_oper.exactalg import (NEG_INF, ExactAlgebraError, Poly, PolyMatrix, det, format_rat,
                                   minimal_kernel_basis, minor_gcd, poly_gcd, rat, solve_poly)

small = st.integers(-4, 4)
polys = st.lists(small, max_size=4).map(lambda c: P(*c))


def test_rat_canonical_form():
    x = rat("6/-4")
    assert (x.numerator, x.denominator) == (-3, 2)
    assert format_rat(x) == "-3/2"
    assert format_rat(rat(4) / 2) == "2"


def test_zero_poly_degree_is_sentinel():
    assert Poly().degree == NEG_INF
    assert P(0, 0).degree == NEG_INF
    assert P(1, 2).lc == 2


@pytest.mark.parametrize("a, b, want", [
    (P(-1, 0, 1), P(-1, 1), P(-1, 1)),
    (Poly(), Poly(), Poly()),
    (P(2, 2), P(4), P(1)),
])
def test_poly_gcd_examples(a, b, want):
    assert poly_gcd(a, b) == want


@given(polys, polys, polys)
def test_gcd_commutative_associative(a, b, c):
    assert poly_gcd(a, b) == poly_gcd(b, a)
    assert poly_gcd(poly_gcd(a, b), c) == poly_gcd(a, poly_gcd(b, c))


@given(polys, polys)
def test_divmod_identity(a, b):
    if b.is_zero():
        return
    quo, rem = a.divmod(b)
    assert quo * b + rem == a
    assert rem.degree < b.degree


@given(polys, polys, st.integers(-3, 3))
def test_ring_laws_and_evaluation(a, b, x):
    assert (a * b)(x) == a(x) * b(x)
    assert (a + b)(x) == a(x) + b(x)
    assert (a * b).derivative() == a.derivative() * b + a * b.derivative()


def test_poly_json_round_trip():
    p = P("1/2", 0, -3)
    assert p.to_json() == ["1/2", "0", "-3"]
    assert Poly.from_json(p.to_json()) == p


@pytest.mark.parametrize("m, s, want", [
    (M([[P(0, 1)], [P(0, 0, 1)]]), 1, P(0, 1)),
    (PolyMatrix.identity(2), 2, P(1)),
    (M([[P(-1, 1)], [P(1, 1)]]), 1, P(1)),
])
def test_minor_gcd_examples(m, s, want):
    assert minor_gcd(m, s) == want


def test_minor_gcd_range():
    with pytest.raises(ExactAlgebraError):
        minor_gcd(PolyMatrix.identity(2), 3)


def test_kernel_examples():
    k = minimal_kernel_basis(M([[P(0, 1), P(-1)]]))
    assert k.cols == 1
    col = k.column(0)
    c = col[0].lc
    assert col == [P(c), P(0, c)]
    assert minimal_kernel_basis(PolyMatrix.identity(2)).cols == 0


def _kernel_dim_bruteforce(m: PolyMatrix, d: int) -> int:
    """dim {v : m v = 0, deg v <= d} via sympy on coefficient unknowns."""
    t = sympy.Symbol("t")
    n = m.cols
    cs = sympy.symbols(f"c0:{n * (d + 1)}")
    v = [sum(cs[i * (d + 1) + j] * t ** j for j in range(d + 1)) for i in range(n)]
    eqs = []
    for r in range(m.rows):
        expr = sum(sympy.Poly([sympy.Rational(str(c)) for c in reversed(m.e[r][i].c)] or [0], t).as_expr() * v[i]
                   for i in range(n))
        eqs += sympy.Poly(sympy.expand(expr), t).coeffs() if sympy.expand(expr) != 0 else []
    if not eqs:
        return len(cs)
    A, _ = sympy.linear_eq_to_matrix(eqs, cs)
    return len(cs) - A.rank()


def _check_minimal(m: PolyMatrix):
    k = minimal_kernel_basis(m)
    assert (m @ k).is_zero()
    if k.cols:
        assert minor_gcd(k, k.cols) == P(1)
    degs = [max(x.degree for x in k.column(j)) for j in range(k.cols)]
    for d in range(4):
        want = _kernel_dim_bruteforce(m, d)
        assert want == sum(max(0, d - c + 1) for c in degs), (d, degs)


def test_kernel_minimality_spec_example():
    _check_minimal(M([[P(0, -1, 1), P(1, -1)]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(2, 3), st.data())
def test_kernel_minimality_random(rows, cols, data):
    entries = [[data.draw(st.lists(st.integers(-2, 2), max_size=3)) for _ in range(cols)] for _ in range(rows)]
    _check_minimal(M([[P(*e) for e in r] for r in entries]))


def test_det_and_solve():
    a = M([[P(0, 1), P(1)], [P(1), P(0, 1)]])
    assert det(a) == P(-1, 0, 1)
    b = M([[P(1, 1)], [P(1, 1)]])
    x = solve_poly(a, b)
    assert a @ x == b
    with pytest.raises(ExactAlgebraError):
        solve_poly(M([[P(0, 1)], [P(0, 1)]]), M([[P(1)], [P(1)]]))
