import pytest
from hypothesis import given, settings, strategies as st

from conftest import M, P, q
from partial_oper.bundle import (BundleError, BundleMap, Flag, ParabolicData, SplitBundle, Subbundle,
                                 check_subbundle, kernel_subbundle, par_degree, par_degree_bundle, quotient,
                                 saturate, span_subbundle)
from partial_oper.exactalg import PolyMatrix

O2 = SplitBundle((0, 0))


def test_split_bundle_is_sorted():
    e = SplitBundle((-1, 2, 0))
    assert e.degrees == (2, 0, -1) and e.rank == 3 and e.degree == 1


def test_bundle_map_degree_bounds():
    BundleMap(SplitBundle((-1,)), O2, 0, M([[P(0, 1)], [P(1)]]))
    with pytest.raises(BundleError):
        BundleMap(SplitBundle((0,)), O2, 0, M([[P(0, 1)], [P(1)]]))
    with pytest.raises(BundleError):
        BundleMap(SplitBundle((0,)), SplitBundle((-1,)), 0, M([[P(1)]]))


def test_check_subbundle_examples():
    ok = check_subbundle(BundleMap(SplitBundle((-1,)), O2, 0, M([[P(0, 1)], [P(1)]])))
    assert ok.valid
    finite = check_subbundle(BundleMap(SplitBundle((-1,)), O2, 0, M([[P(0, 1)], [P(0, 1)]])))
    assert finite.full_rank and not finite.finite_saturated and finite.minor_gcd == P(0, 1)
    inf = check_subbundle(BundleMap(SplitBundle((-1,)), O2, 0, M([[P(1)], [P(1)]])))
    assert inf.finite_saturated and not inf.infinity_saturated and not inf.valid


def test_saturate_examples():
    s = saturate(BundleMap(SplitBundle((-1,)), O2, 0, M([[P(0, 1)], [P(0, 1)]])))
    assert s.bundle.degrees == (0,)
    c = s.matrix.e[0][0]
    assert s.matrix.e[1][0] == c and c.degree == 0
    again = saturate(s.inclusion)
    assert again.bundle == s.bundle and check_subbundle(again.inclusion).valid
    whole = span_subbundle(O2, M([[P(0, 0, 1), P(0, 1, 1)], [P(1), P(1)]]))
    assert whole.bundle == O2 and whole.rank == 2


def test_kernel_examples():
    src = SplitBundle((0, -1))
    k = kernel_subbundle(BundleMap(src, SplitBundle((3,)), 0, PolyMatrix.zeros(1, 2)))
    assert k.bundle == src
    iso = kernel_subbundle(BundleMap(SplitBundle((-1,)), SplitBundle((-1,)), 0, M([[P(1)]])))
    assert iso.rank == 0
    m = BundleMap(O2, SplitBundle((1,)), 0, M([[P(0, 1), P(-1, 1)]]))
    k = kernel_subbundle(m)
    assert k.bundle.degrees == (-1,)
    assert (m.matrix @ k.matrix).is_zero() and check_subbundle(k.inclusion).valid


def test_quotient_examples():
    sub = Subbundle(BundleMap(SplitBundle((-1,)), O2, 0, M([[P(0, 1)], [P(1)]])))
    qb, proj = quotient(sub)
    assert qb.degrees == (1,)
    assert (proj.matrix @ sub.matrix).is_zero()
    row = proj.matrix.e[0]
    c = row[0].lc
    assert row == (P(c), P(0, -c))
    amb = SplitBundle((2, -1))
    qb, proj = quotient(Subbundle(BundleMap(SplitBundle((2,)), amb, 0, M([[P(1)], [P(0)]]))))
    assert qb.degrees == (-1,) and proj.matrix.e[0][0] == P() and proj.matrix.e[0][1].degree == 0
    qb, proj = quotient(Subbundle.zero(amb))
    assert qb == amb and proj.matrix.evaluate(0) == [[1, 0], [0, 1]]


def _flags3(vec):
    half = q("1/2")
    return ParabolicData((q(0), q(1), q(2)), tuple(Flag.from_steps(2, [(half, [vec]), (0, [[0, 1]])]) for _ in range(3)))


def test_par_degree_examples():
    pd = _flags3([1, 0])
    assert par_degree_bundle(O2, pd) == q("3/2")
    assert par_degree(Subbundle.whole(O2), pd) == q("3/2")
    line = Subbundle(BundleMap(SplitBundle((0,)), O2, 0, M([[P(1)], [P(0)]])))
    assert par_degree(line, pd) == q("3/2")
    zero = ParabolicData.trivial((q(0), q(1)), 2)
    sub = Subbundle(BundleMap(SplitBundle((-1,)), O2, 0, M([[P(0, 1)], [P(1)]])))
    assert par_degree(sub, zero) == -1


def test_flag_validation():
    with pytest.raises(BundleError):
        Flag.from_steps(2, [(q(0), [[1, 0]]), (q("1/2"), [[0, 1]])])
    with pytest.raises(BundleError):
        Flag.from_steps(2, [(q(1), [[1, 0]]), (q(0), [[0, 1]])])


@st.composite
def split_bundles(draw, max_rank=3):
    r = draw(st.integers(1, max_rank))
    return SplitBundle(tuple(draw(st.integers(-2, 2)) for _ in range(r)))


@st.composite
def random_maps(draw, twist=0):
    src, tgt = draw(split_bundles()), draw(split_bundles())
    rows = []
    for ti in tgt.degrees:
        row = []
        for sj in src.degrees:
            b = ti + twist - sj
            row.append(P(*draw(st.lists(st.integers(-2, 2), min_size=b + 1, max_size=b + 1))) if b >= 0 else P())
        rows.append(row)
    return BundleMap(src, tgt, twist, PolyMatrix(rows, tgt.rank, src.rank))


@settings(max_examples=40, deadline=None)
@given(random_maps())
def test_kernel_composes_to_zero(m):
    k = kernel_subbundle(m)
    assert (m.matrix @ k.matrix).is_zero()
    assert check_subbundle(k.inclusion).valid
    assert k.rank == m.source.rank - m.matrix.rank()


@settings(max_examples=40, deadline=None)
@given(random_maps())
def test_saturation_and_quotient_additivity(m):
    if m.matrix.rank() == 0:
        return
    sub = span_subbundle(m.target, m.matrix)
    assert check_subbundle(sub.inclusion).valid
    assert saturate(sub.inclusion).bundle == sub.bundle
    qb, proj = quotient(sub)
    assert (proj.matrix @ sub.matrix).is_zero()
    assert sub.rank + qb.rank == m.target.rank
    assert sub.degree + qb.degree == m.target.degree
    # saturation only raises degree
    if m.matrix.rank() == m.source.rank:
        assert sub.degree >= m.source.degree


def _max_line_degree_bruteforce(e: SplitBundle) -> int:
    """Largest d with a nonzero map O(d) -> E, searched downward from the top."""
    for d in range(max(e.degrees) + 3, min(e.degrees) - 3, -1):
        if any(a - d >= 0 for a in e.degrees):
            return d
    raise AssertionError


@settings(max_examples=30, deadline=None)
@given(split_bundles(), st.data())
def test_parabolic_additivity_and_top_line(e, data):
    assert _max_line_degree_bruteforce(e) == e.degrees[0]
    r = e.rank
    if r < 2:
        return
    pts = (q(0), q(1))
    flags = []
    for _ in pts:
        v = data.draw(st.lists(st.integers(-2, 2), min_size=r, max_size=r).filter(any))
        w = q(data.draw(st.integers(1, 9))) / 10
        flags.append(Flag.from_steps(r, [(w, [v]), (0, [[1 if i == j else 0 for i in range(r)] for j in range(r)])]))
    pd = ParabolicData(pts, tuple(flags))
    col = [P(*data.draw(st.lists(st.integers(-1, 1), min_size=1, max_size=2))) for _ in range(r)]
    if all(c.is_zero() for c in col):
        return
    sub = span_subbundle(e, PolyMatrix([[c] for c in col], r, 1))
    qb, proj = quotient(sub)
    total = par_degree_bundle(e, pd)
    assert par_degree(sub, pd) + par_degree_bundle(qb, pd.induced_quotient(proj)) == total
