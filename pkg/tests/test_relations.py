import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import algebras, all_pairs
from tolalg import BinRel, classify, gen_congruence, gen_tolerance, quotient, tolerance_witness, validate_algebra
from tolalg.exceptions import AlgebraError, PairNotInTolerance
from tolalg.relations import Homomorphism, is_compatible, rel_image, small_tolerances


def naive_compatible(alg, pairs):
    rel = set(pairs)
    for op in alg.ops:
        for args in itertools.product(sorted(rel), repeat=op.arity):
            left = op.table[_index([a for a, _ in args], alg.size)]
            right = op.table[_index([b for _, b in args], alg.size)]
            if (int(left), int(right)) not in rel:
                return False
    return True


def _index(args, size):
    i = 0
    for a in args:
        i = i * size + a
    return i


def naive_tolerance(alg, gens):
    """Smallest reflexive symmetric compatible relation, by brute force."""
    rel = {(a, a) for a in range(alg.size)} | set(gens) | {(b, a) for a, b in gens}
    while True:
        new = set(rel)
        for op in alg.ops:
            for args in itertools.product(sorted(rel), repeat=op.arity):
                new.add(
                    (int(op.table[_index([a for a, _ in args], alg.size)]),
                     int(op.table[_index([b for _, b in args], alg.size)]))
                )
        if new == rel:
            return rel
        rel = new


pair_lists = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=3)


def _fit(alg, pairs):
    return [(a % alg.size, b % alg.size) for a, b in pairs]


@given(algebras(), pair_lists)
def test_tolerance_matches_brute_force(alg, pairs):
    gens = _fit(alg, pairs)
    tol, _ = gen_tolerance(alg, gens)
    assert set(tol.pairs()) == naive_tolerance(alg, gens)


@given(algebras(), pair_lists, pair_lists)
def test_closure_laws(alg, pairs, more):
    gens, extra = _fit(alg, pairs), _fit(alg, more)
    tol, _ = gen_tolerance(alg, gens)
    cg, _ = gen_congruence(alg, gens)
    flags = classify(alg, tol)
    assert flags.tolerance and naive_compatible(alg, tol.pairs())
    assert classify(alg, cg).congruence
    assert gen_tolerance(alg, tol.pairs())[0] == tol
    assert gen_congruence(alg, cg.pairs())[0] == cg
    assert tol <= gen_tolerance(alg, gens + extra)[0]
    assert cg <= gen_congruence(alg, gens + extra)[0]
    assert tol <= cg
    # the congruence is the transitive closure of the tolerance
    m = tol.matrix.copy()
    while True:
        m2 = m | ((m.astype(int) @ m.astype(int)) > 0)
        if (m2 == m).all():
            break
        m = m2
    assert BinRel(alg.size, m) == cg


@given(algebras(), pair_lists)
def test_witness_terms_evaluate_back(alg, pairs):
    from tolalg import eval_term

    gens = _fit(alg, pairs)
    tol, dag = gen_tolerance(alg, gens)
    assert dag.is_acyclic()
    for d, e in tol.pairs():
        h = tolerance_witness(alg, gens, dag, (d, e))
        env1 = [x for a, b in gens for x in (a, b)] + list(range(alg.size))
        env2 = [x for a, b in gens for x in (b, a)] + list(range(alg.size))
        assert (eval_term(alg, h, env1), eval_term(alg, h, env2)) == (d, e)


def test_witness_outside_tolerance():
    alg = validate_algebra(3, [("s", 1, [0, 0, 2])])
    gens = [(0, 1)]
    tol, dag = gen_tolerance(alg, gens)
    assert set(tol.pairs()) == {(0, 0), (1, 1), (2, 2), (0, 1), (1, 0)}
    with pytest.raises(PairNotInTolerance):
        tolerance_witness(alg, gens, dag, (0, 2))


def test_tolerance_need_not_be_transitive():
    # the path 0 - 1 - 2 under the order-reversing map
    alg = validate_algebra(3, [("r", 1, [2, 1, 0])])
    tol, _ = gen_tolerance(alg, [(0, 1)])
    flags = classify(alg, tol)
    assert flags.tolerance and not flags.congruence
    assert (0, 2) not in tol
    assert (0, 2) in gen_congruence(alg, [(0, 1)])[0]


def test_classify_flags():
    alg = validate_algebra(2, [("meet", 2, [0, 0, 0, 1])])
    assert classify(alg, BinRel.full(2)).congruence
    le = BinRel.from_pairs(2, [(0, 0), (0, 1), (1, 1)])
    flags = classify(alg, le)
    assert flags.reflexive and flags.compatible and not flags.symmetric
    assert not flags.tolerance and is_compatible(alg, le)


@given(algebras(max_size=3))
def test_small_tolerances_are_tolerances(alg):
    found = small_tolerances(alg)
    assert found == small_tolerances(alg)  # cached and stable
    for tau in found:
        assert classify(alg, tau).tolerance


@given(algebras(), st.tuples(st.integers(0, 3), st.integers(0, 3)), pair_lists)
def test_images_of_congruences_under_quotients(alg, cut, pairs):
    psi, _ = gen_congruence(alg, _fit(alg, [cut]))
    quo, phi = quotient(alg, psi)
    assert phi.surjective
    cg, _ = gen_congruence(alg, _fit(alg, pairs))
    assert classify(quo, rel_image(phi, cg)).tolerance


def test_quotient_rejects_non_congruence_and_bad_maps():
    alg = validate_algebra(3, [("r", 1, [2, 1, 0])])
    tol, _ = gen_tolerance(alg, [(0, 1)])
    with pytest.raises(AlgebraError):
        quotient(alg, tol)
    with pytest.raises(AlgebraError):
        Homomorphism(alg, alg, np.array([0, 0, 1]))


def test_binrel_basics():
    r = BinRel.from_pairs(3, [(0, 1), (1, 2)])
    assert r.inverse().pairs() == [(1, 0), (2, 1)]
    assert r.compose(r).pairs() == [(0, 2)]
    assert len(r | BinRel.diagonal(3)) == 5
    assert (0, 1) in r and (1, 0) not in r
    assert len(BinRel.full(3)) == len(all_pairs(3))
