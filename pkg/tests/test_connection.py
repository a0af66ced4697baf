import json
import random

import pytest

from conftest import FIXTURES, M, P, q
from partial_oper.bundle import BundleMap, SplitBundle, Subbundle
from partial_oper.connection import (BudgetExceeded, FuchsianSystem, GTFiltration, IterationConfig, SystemError_,
                                     TransversalityError, apply_nabla, check_transversality, eigen_decomposition,
                                     graded_pieces, iterate_to_partial_oper, kodaira_spencer, modification_bookkeeping,
                                     modify, validate_system)
from partial_oper.hodge import GradedSub, is_semistable, max_destabilizer
from partial_oper.io import system_from_json
from partial_oper.sampling import random_rank2_weights, random_rank3_system, rank2_system, system_from_residues
from partial_oper.strata import is_oper

V2 = SplitBundle.trivial(2)


def load(name):
    return system_from_json(json.loads((FIXTURES / name).read_text()))


def line(v):
    return Subbundle.checked(BundleMap(SplitBundle((0,)), V2, 0, M([[x] for x in v])))


def chain(*subs):
    return GTFiltration((Subbundle.whole(V2),) + subs + (Subbundle.zero(V2),))


def test_f1_validates():
    rep = validate_system(load("f1.json"))
    assert rep.eigenvalues == ((q("1/2"), 0), (q("1/2"), 0), (q("-1/2"), q("-1/2")))
    assert rep.steps_scalar


def test_bad_sum_rejected():
    s = load("f1.json")
    bad = FuchsianSystem(2, s.points, (s.residues[0], s.residues[0], s.residues[2]), s.par)
    with pytest.raises(SystemError_):
        validate_system(bad)


def test_nilpotent_residue_rejected():
    with pytest.raises(SystemError_):
        eigen_decomposition([[q(0), q(1)], [q(0), q(0)]])


def test_irrational_eigenvalues_rejected():
    with pytest.raises(SystemError_):
        eigen_decomposition([[q(0), q(2)], [q(1), q(0)]])


def test_apply_nabla():
    s = load("f1.json")
    # constant e1: P*0 + A e1, first column of A(t)
    out = apply_nabla(s, [P(1), P()])
    assert out == [s.A.e[0][0], s.A.e[1][0]]
    assert out[1].is_zero()
    # t e2 picks up P
    out = apply_nabla(s, [P(), P(0, 1)])
    assert out[1] == s.P + s.A.e[1][1] * P(0, 1)


def test_transversality():
    s = load("f1.json")
    assert check_transversality(s, GTFiltration.trivial(2))
    assert check_transversality(s, chain(line([1, 0])))
    assert check_transversality(s, chain(line([0, 1])))  # one step: nothing to check
    assert check_transversality(s, chain(line([1, 0]), line([1, 0])))  # e1 is invariant
    assert not check_transversality(s, chain(line([0, 1]), line([0, 1])))
    with pytest.raises(TransversalityError):
        kodaira_spencer(s, chain(line([0, 1]), line([0, 1])))


def test_kodaira_spencer_trivial():
    e = kodaira_spencer(load("f1.json"), GTFiltration.trivial(2))
    assert e.indices == [0] and not e.theta


def test_kodaira_spencer_invariant_line():
    s = load("f1.json")
    e = kodaira_spencer(s, chain(line([1, 0])))
    assert e.indices == [0, 1]
    assert all(m.is_zero() for m in e.theta.values())


def test_kodaira_spencer_nonzero():
    s = load("f1.json")
    e = kodaira_spencer(s, chain(line([0, 1])))
    assert not e.theta[1].is_zero()
    # theta is A(t) e2 read modulo e2: the (1,2) entry of A
    assert e.theta[1].e[0][0] == s.A.e[0][1] or e.theta[1].e[0][0] == -s.A.e[0][1]


def test_modify_zero_is_identity():
    s = load("f1.json")
    F = chain(line([0, 1]))
    E = kodaira_spencer(s, F)
    h = GradedSub({p: Subbundle.zero(E.levels[p].bundle) for p in E.indices})
    G, _ = modify(s, F, h).normalized()
    assert G.ranks() == F.ranks()


def test_modify_line_at_level_zero():
    s = load("rank2_dominant.json")
    F = GTFiltration.trivial(2)
    E = kodaira_spencer(s, F)
    h, _ = max_destabilizer(E)
    G = modify(s, F, h)
    assert G.ranks() == [2, 1, 0]
    assert G.chain[1].matrix == h.parts[0].matrix
    for p, lhs, rhs in modification_bookkeeping(s, E, h, G):
        assert lhs == rhs


def test_zero_weights_stays_trivial():
    s = system_from_residues([0, 1, 2], [[[0, 0], [0, 0]]] * 3)
    F, E, trace = iterate_to_partial_oper(s)
    assert F.is_trivial() and not trace.steps


def test_f1_iteration():
    F, E, trace = iterate_to_partial_oper(load("f1.json"))
    # e1 is a common invariant line, so nothing is forced at step 0
    assert is_semistable(E)
    assert trace.descending()


def test_dominant_fixture_gives_oper():
    F, E, trace = iterate_to_partial_oper(load("rank2_dominant.json"))
    assert len(trace.steps) == 1
    assert F.ranks() == [2, 1, 0]
    assert is_oper(E)


def test_reducible_terminates():
    res = [[[q("1/3"), 1], [0, 0]], [[q("1/4"), 0], [0, 0]], [[q("-7/12"), -1], [0, 0]]]
    s = system_from_residues([0, 1, 2], res)
    F, E, trace = iterate_to_partial_oper(s)
    assert is_semistable(E)


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        iterate_to_partial_oper(load("rank2_dominant.json"), IterationConfig(budget=0))


def test_random_iterations_certify():
    rng = random.Random(11)
    for _ in range(15):
        k = rng.choice([3, 4])
        s = rank2_system(rng, [q(i) for i in range(k)], random_rank2_weights(rng, k))
        F, E, trace = iterate_to_partial_oper(s)
        assert trace.descending() and check_transversality(s, F)
        assert len(graded_pieces(s, F)) == F.length
    for _ in range(5):
        s = random_rank3_system(rng, [q(0), q(1), q(2)])
        F, E, trace = iterate_to_partial_oper(s)
        assert is_semistable(E)


def test_no_gaps_for_generic_inputs():
    from partial_oper.strata import kostov_check
    rng = random.Random(31)
    runs = 0
    while runs < 12:
        k = rng.choice([3, 4])
        a = random_rank2_weights(rng, k)
        if not kostov_check([[x, -x] for x in a]):
            continue
        s = rank2_system(rng, [q(i) for i in range(k)], a)
        F, E, trace = iterate_to_partial_oper(s)
        for step in trace.steps:
            ps = [p for p, r, _, _ in step.levels if r]
            assert ps == list(range(ps[0], ps[-1] + 1))
        ps = [p for p in E.indices if E.levels[p].rank]
        assert ps == list(range(ps[0], ps[-1] + 1))
        runs += 1
