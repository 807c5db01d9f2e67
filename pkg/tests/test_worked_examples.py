"""Small hand-checkable instances, one assertion block per construction."""
import itertools

import pytest

from tolalg import (
    App,
    MnStatus,
    Var,
    check_mn,
    check_tolim_up_to,
    classify,
    eval_term,
    find_h_witness,
    find_malcev_term,
    free_algebra,
    gen_congruence,
    gen_tolerance,
    identity_holds,
    term_function,
    tolerance_witness,
    verify_mn_witness,
)
from tolalg.exceptions import NotFound
from tolalg.fixtures import lattice2, n5, prop5, semilattice2, separating_algebra, z2affine
from tolalg.witnesses import (
    VarOccurrence,
    distinguish_variables,
    h_balanced,
    h_lattice,
    h_malcev,
    h_semilattice,
    h_unary,
)

X = [Var(i) for i in range(8)]
MEET, JOIN = App(0, (X[0], X[1])), App(1, (X[0], X[1]))


def test_ternary_operation_is_majority_or_zero():
    alg = prop5().algebra
    table = term_function(alg, App(2, tuple(X[:3])), 3).table
    for idx, t in enumerate(itertools.product(range(3), repeat=3)):
        expected = 0 if len(set(t)) == 3 else max(set(t), key=t.count)
        assert table[idx] == expected
    assert eval_term(alg, App(2, (X[0], X[0], X[1])), [0, 2]) == 0
    assert eval_term(alg, App(0, tuple(X[:4])), [1, 1, 1, 1]) == 1


def test_generated_relations():
    fx = prop5()
    tau = fx.relation
    assert gen_tolerance(fx.algebra, tau.pairs())[0] == tau
    cg, _ = gen_congruence(fx.algebra, tau.pairs())
    assert (1, 2) in cg
    semi = semilattice2().algebra
    assert len(gen_tolerance(semi, [(0, 1)])[0]) == 4
    assert classify(semi, gen_congruence(semi, [(0, 1)])[0]).congruence


def test_operation_derived_witness():
    alg = prop5().algebra
    gens = [(1, 0), (0, 2)]
    tol, dag = gen_tolerance(alg, gens)
    target = (alg("f", 1, 0, 0, 2), alg("f", 2, 0, 0, 1))
    assert target in tol
    assert target == (1, 0)  # the image is a generator again
    h = tolerance_witness(alg, gens, dag, target)
    assert h == Var(0)
    # the reversed generator, read off in both orientations
    semi = semilattice2().algebra
    tol, dag = gen_tolerance(semi, [(0, 1)])
    h = tolerance_witness(semi, [(0, 1)], dag, (1, 0))
    assert eval_term(semi, h, [0, 1, 0, 1]) == 1 and eval_term(semi, h, [1, 0, 0, 1]) == 0


def test_binary_semilattice_terms():
    F = free_algebra(semilattice2().algebra, 2)
    assert len(F) == 3
    assert [F.term(i) for i in range(2)] == [X[0], X[1]]
    assert F.index_of_term(App(0, (X[0], X[1]))) == 2
    # regression value for the three-element algebra
    assert len(free_algebra(prop5().algebra, 2)) == 9


def test_level_two_counterexample_is_the_basic_pair():
    v = check_mn(prop5().algebra, 2)
    assert v.status is MnStatus.FAILS
    assert v.counterexample_terms == (App(0, tuple(X[:4])), App(1, tuple(X[:4])))
    with pytest.raises(NotFound):
        find_h_witness(prop5().algebra, 2, *v.counterexample_terms)


def test_semilattice_pair_across_two_levels():
    semi = semilattice2().algebra
    f, g = App(0, (X[0], X[3])), App(0, (X[1], X[2]))
    assert verify_mn_witness(semi, 2, f, g, find_h_witness(semi, 2, f, g))
    occ = h_semilattice(VarOccurrence.of_term(f, 2), VarOccurrence.of_term(g, 2))
    assert occ.slots() == [0, 3]  # u_0 and v_1


def test_found_terms():
    z2 = z2affine().algebra
    assert identity_holds(z2, find_malcev_term(z2), App(0, tuple(X[:3])), 3)


def test_lattice_instances():
    f, g = App(1, (X[0], X[1])), App(1, (X[1], X[0]))
    assert verify_mn_witness(n5().algebra, 1, f, g, h_lattice(f, g, 1, MEET, JOIN))
    f, g = App(0, (X[0], X[3])), App(0, (X[2], X[1]))
    assert verify_mn_witness(lattice2().algebra, 2, f, g, h_lattice(f, g, 2, MEET, JOIN))


def test_occurrence_table_rows():
    def row(fx, fy, gx, gy):
        h = h_semilattice(VarOccurrence((fx, True), (fy, False)), VarOccurrence((gx, True), (gy, False)))
        return h.u[0], h.v[0], h.x[0], h.y[0]

    assert row(True, False, False, True) == (True, False, False, False)
    assert row(True, True, True, True) == (False, False, True, True)
    assert row(False, False, False, False) == (False, False, False, False)


def test_absolutely_free_instances():
    dot = lambda a, b: App(0, (a, b))  # noqa: E731
    f = dot(dot(dot(X[1], X[0]), dot(X[0], X[1])), X[0])
    shape, leaves = distinguish_variables(f)
    z = [Var(i) for i in range(5)]
    assert shape == dot(dot(dot(z[0], z[1]), dot(z[2], z[3])), z[4])
    assert leaves == [1, 0, 0, 1, 0]
    assert h_balanced(dot(X[0], X[1]), dot(X[1], X[0]), 1) == dot(X[0], X[1])


def test_unary_rows():
    from tolalg import validate_algebra

    un = validate_algebra(3, [("s", 1, [1, 2, 0]), ("k", 1, [2, 2, 2])])
    s = lambda t: App(0, (t,))  # noqa: E731
    k = lambda t: App(1, (t,))  # noqa: E731
    assert h_unary(un, s(X[0]), s(X[0]), 1) == s(X[2])
    assert h_unary(un, s(X[0]), s(X[1]), 1) == s(X[0])
    assert h_unary(un, k(X[0]), k(X[3]), 2) == k(X[4])


def test_malcev_instance_and_necessity():
    z2 = z2affine().algebra
    p = App(0, tuple(X[:3]))
    f, g = App(0, (X[0], X[1], X[2])), App(0, (X[2], X[1], X[0]))
    assert verify_mn_witness(z2, 2, f, g, h_malcev(p, f, g, 2))
    # a projection is not a Mal'cev term, and the construction then breaks
    assert not verify_mn_witness(z2, 1, X[0], X[1], h_malcev(X[0], X[0], X[1], 1))


@pytest.mark.parametrize(
    "make, expected",
    [
        (semilattice2, [True, True]),
        (prop5, [True, False]),
        (lambda: separating_algebra(1), [True, False]),
    ],
)
def test_level_reports(make, expected):
    rep = check_tolim_up_to(make().algebra, 2)
    assert [lv.status is MnStatus.HOLDS for lv in rep.levels] == expected
