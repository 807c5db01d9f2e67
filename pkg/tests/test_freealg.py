import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from helpers import algebras
from tolalg import Var, diagonal_pairs, explore_free_algebra, free_algebra, gen_congruence, identity_holds
from tolalg.exceptions import ResourceExceeded
from tolalg.fixtures import implication2, lattice2, n5, semilattice2, separating_algebra, z2affine
from tolalg.freealg import generator_pairs
from tolalg.limits import Limits
from tolalg.terms import term_function

# sizes of F(k), frozen from the brute-force oracle in tests/oracle.py
FREE_SIZES = {
    "semilattice2": [1, 3, 7, 15],
    "lattice2": [1, 4, 18, 166],
    "implication2": [2, 6, 38, 942],
    "z2affine": [1, 2, 4, 8],
    "n5": [1, 4, 99],
    "separating1": [2, 3, 4],
}
FIXTURES = {
    "semilattice2": semilattice2,
    "lattice2": lattice2,
    "implication2": implication2,
    "z2affine": z2affine,
    "n5": n5,
    "separating1": lambda: separating_algebra(1),
}


@pytest.mark.parametrize("name", sorted(FREE_SIZES))
def test_free_algebra_sizes(name):
    alg = FIXTURES[name]().algebra
    for k, expected in enumerate(FREE_SIZES[name], start=1):
        assert len(free_algebra(alg, k)) == expected


@given(algebras(max_size=3), st.integers(1, 2))
def test_free_algebra_matches_oracle(alg, k):
    ops = [(op.arity, [int(v) for v in op.table]) for op in alg.ops]
    try:
        expected = oracle.clone(alg.size, ops, k, cap=3000)
    except oracle.TooLarge:
        return
    F = free_algebra(alg, k, Limits(max_elements=5000))
    assert {tuple(r) for r in F.tables.tolist()} == {tuple(r) for r in expected.tolist()}


def test_projections_first_and_terms_match():
    F = free_algebra(lattice2().algebra, 3)
    for v in range(3):
        assert F.term(v) == Var(v)
    for i in range(len(F)):
        assert np.array_equal(term_function(F.base, F.term(i), 3).table, F.table(i))
        assert F.index_of_term(F.term(i)) == i


def test_partial_exploration_is_a_prefix():
    alg = implication2().algebra
    full = free_algebra(alg, 4)
    part = explore_free_algebra(alg, 4, max_layers=2)
    assert not part.complete
    assert np.array_equal(part.tables, full.tables[: len(part)])
    while part.grow():
        pass
    assert part.complete and len(part) == len(full)


def test_partial_exploration_under_limits():
    alg = implication2().algebra
    with pytest.raises(ResourceExceeded):
        free_algebra(alg, 4, Limits(max_elements=100))
    part = explore_free_algebra(alg, 4, Limits(max_elements=100))
    assert 4 <= len(part) <= 100 and not part.complete


@pytest.mark.parametrize(
    "make, n", [(lattice2, 2), (implication2, 1), (z2affine, 2), (semilattice2, 2), (n5, 1)]
)
def test_diagonal_pairs_form_the_generated_congruence(make, n):
    F = free_algebra(make().algebra, 2 * n)
    FA = F.as_algebra()
    gens = [(F.generators[a], F.generators[b]) for a, b in generator_pairs(n)]
    cg, _ = gen_congruence(FA, gens)
    assert sorted(cg.pairs()) == diagonal_pairs(F)


def test_identities():
    lat = lattice2().algebra
    x, y, z = Var(0), Var(1), Var(2)
    from tolalg import App

    meet = lambda a, b: App(0, (a, b))  # noqa: E731
    join = lambda a, b: App(1, (a, b))  # noqa: E731
    assert identity_holds(lat, meet(x, join(y, z)), join(meet(x, y), meet(x, z)))
    assert not identity_holds(n5().algebra, meet(x, join(y, z)), join(meet(x, y), meet(x, z)))
    assert identity_holds(lat, meet(x, x), x, 3)
