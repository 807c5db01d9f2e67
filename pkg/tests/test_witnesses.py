import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_algebra, random_shape, random_term
from tolalg import App, Var, identity_holds, verify_hm_chain, verify_mn_witness
from tolalg.exceptions import ChainInvalid, IncompatibleOccurrence, MnFails, ShapeMismatch
from tolalg.fixtures import implication2, lattice2, n5, semilattice2, z2affine
from tolalg.freealg import diagonal_restriction
from tolalg.malcev import find_malcev_term
from tolalg.terms import substitute, term_function
from tolalg.witnesses import (
    SEMILATTICE_TABLE,
    HOccurrence,
    VarOccurrence,
    collapse_last_pair,
    distinguish_variables,
    h_balanced,
    h_lattice,
    h_malcev,
    h_semilattice,
    h_unary,
    hm_reduce,
    pad_mn_witness,
    reduce_to_malcev,
    semilattice_term,
)

MEET, JOIN = App(0, (Var(0), Var(1))), App(1, (Var(0), Var(1)))


def _agree_on_diagonal(alg, n, f, g):
    tf = term_function(alg, f, 2 * n).table
    tg = term_function(alg, g, 2 * n).table
    return np.array_equal(diagonal_restriction(tf, alg.size, n), diagonal_restriction(tg, alg.size, n))


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_lattice_construction(seed, n):
    rng = np.random.default_rng(seed)
    alg = n5().algebra
    f = random_term(rng, [2, 2], 2 * n, 4)
    g = random_term(rng, [2, 2], 2 * n, 4)
    # force agreement on the diagonal by swapping x_i and y_i in some leaves of f
    g2 = substitute(f, [Var(j ^ int(rng.integers(2))) for j in range(2 * n)])
    for other in (g, g2):
        if _agree_on_diagonal(alg, n, f, other):
            assert verify_mn_witness(alg, n, f, other, h_lattice(f, other, n, MEET, JOIN))


def test_semilattice_table_rows_verify():
    semi = semilattice2().algebra
    for (fx, fy, gx, gy), row in SEMILATTICE_TABLE.items():
        assert (fx or fy) == (gx or gy)
        if not (fx or fy):
            assert row == (0, 0, 0, 0)
            continue
        f = semilattice_term([j for j, bit in enumerate((fx, fy)) if bit])
        g = semilattice_term([j for j, bit in enumerate((gx, gy)) if bit])
        h = semilattice_term(h_semilattice(VarOccurrence((fx,), (fy,)), VarOccurrence((gx,), (gy,))).slots())
        assert verify_mn_witness(semi, 1, f, g, h)


def test_semilattice_errors():
    with pytest.raises(IncompatibleOccurrence):
        h_semilattice(VarOccurrence((True,), (False,)), VarOccurrence((True, True), (False, False)))
    with pytest.raises(IncompatibleOccurrence):
        h_semilattice(VarOccurrence((True, False), (False, False)), VarOccurrence((True, True), (False, False)))
    with pytest.raises(ValueError):
        VarOccurrence((False,), (False,))
    assert VarOccurrence.of_term(App(0, (Var(1), Var(2))), 2) == VarOccurrence((False, True), (True, False))
    assert HOccurrence((True,), (False,), (False,), (True,)).slots() == [0, 3]


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_balanced_construction(seed, n):
    rng = np.random.default_rng(seed)
    alg = random_algebra(rng, 3, [2, 1])
    leaves: list = []
    shape = random_shape(rng, [2, 1], 4, leaves)
    pair = rng.integers(0, n, len(leaves))
    fill = lambda side: substitute(shape, [Var(2 * int(i) + int(rng.integers(2))) for i in pair])  # noqa: E731
    f, g = fill(0), fill(1)
    assert verify_mn_witness(alg, n, f, g, h_balanced(f, g, n))


def test_balanced_rejects_other_shapes():
    with pytest.raises(ShapeMismatch):
        h_balanced(App(0, (Var(0), Var(1))), App(0, (Var(0), App(0, (Var(0), Var(1))))))
    with pytest.raises(ShapeMismatch):
        h_balanced(App(0, (Var(0), Var(2))), App(0, (Var(0), Var(0))), 2)
    shape, leaves = distinguish_variables(App(0, (Var(3), App(1, (Var(3),)))))
    assert shape == App(0, (Var(0), App(1, (Var(1),)))) and leaves == [3, 3]


def test_unary_construction_every_dependence():
    un = random_algebra(np.random.default_rng(3), 4, [1, 1, 1])
    for n in (1, 2):
        k = 2 * n
        for word in itertools.product(range(3), repeat=2):
            for a, b in itertools.product(range(k), repeat=2):
                f = g = None
                f, g = Var(a), Var(b)
                for op in word:
                    f, g = App(op, (f,)), App(op, (g,))
                if _agree_on_diagonal(un, n, f, g):
                    assert verify_mn_witness(un, n, f, g, h_unary(un, f, g, n))
    with pytest.raises(ValueError):
        h_unary(lattice2().algebra, Var(0), Var(0), 1)


def test_malcev_construction():
    z2 = z2affine().algebra
    p = find_malcev_term(z2)
    rng = np.random.default_rng(5)
    for _ in range(40):
        f = random_term(rng, [3], 4, 3)
        g = substitute(f, [Var(j ^ int(rng.integers(2))) for j in range(4)])
        assert _agree_on_diagonal(z2, 2, f, g)
        assert verify_mn_witness(z2, 2, f, g, h_malcev(p, f, g, 2))


def test_padding_drops_one_level():
    lat = lattice2().algebra
    f, g = App(0, (Var(0), Var(1))), App(0, (Var(1), Var(0)))
    h2 = h_lattice(f, g, 2, MEET, JOIN)
    assert verify_mn_witness(lat, 2, f, g, h2)
    assert verify_mn_witness(lat, 1, f, g, pad_mn_witness(h2, 1))
    assert len(collapse_last_pair(1)) == 8
    with pytest.raises(ValueError):
        pad_mn_witness(Var(8), 1)


def test_chain_reduction():
    z2 = z2affine().algebra
    p = App(0, (Var(0), Var(1), Var(2)))
    chain = [p, Var(2), Var(2), Var(2)]
    assert verify_hm_chain(z2, chain)
    m = reduce_to_malcev(z2, chain)
    assert identity_holds(z2, substitute(m, [Var(0), Var(1), Var(1)]), Var(0))
    assert identity_holds(z2, substitute(m, [Var(0), Var(0), Var(1)]), Var(1))
    assert hm_reduce(z2, [p]) == [p]
    with pytest.raises(ChainInvalid):
        hm_reduce(z2, [Var(1)])
    imp = implication2().algebra
    from tolalg import permutability_degree

    with pytest.raises(MnFails):
        reduce_to_malcev(imp, list(permutability_degree(imp).chain))
