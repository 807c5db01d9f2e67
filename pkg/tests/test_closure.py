import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import algebras
from tolalg import Closure, subpower_member
from tolalg.exceptions import ResourceExceeded
from tolalg.limits import Limits, WorkBudget
from tolalg.terms import eval_vectors


def naive_subpower(alg, gens):
    """Fixpoint over Python tuples; constants count as generated."""
    found = {tuple(int(v) for v in g) for g in gens}
    width = len(gens[0]) if len(gens) else 0
    while True:
        new = set(found)
        for op in alg.ops:
            for args in itertools.product(sorted(found), repeat=op.arity):
                idx = np.zeros(width, dtype=np.int64)
                for a in args:
                    idx = idx * alg.size + np.array(a, dtype=np.int64)
                new.add(tuple(int(v) for v in op.table[idx]))
        if new == found:
            return found
        found = new


def _gens(alg, seed, count, width):
    rng = np.random.default_rng(seed)
    return rng.integers(0, alg.size, (count, width))


@given(algebras(max_size=3), st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_closure_matches_naive_fixpoint(alg, seed, count, width):
    gens = _gens(alg, seed, count, width)
    cl = Closure(alg, width)
    cl.add(gens, list(range(count)))
    cl.run()
    got = {tuple(int(v) for v in r) for r in cl.rows}
    assert len(got) == len(cl)
    assert got == naive_subpower(alg, gens)
    env = [gens[j] for j in range(count)]
    for i in range(len(cl)):
        val = np.broadcast_to(eval_vectors(alg, cl.term(i), env), (width,))
        assert val.tolist() == cl.rows[i].tolist()


@given(algebras(max_size=3), st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_membership_agrees_with_closure(alg, seed, width):
    rng = np.random.default_rng(seed)
    gens = rng.integers(0, alg.size, (2, width))
    target = rng.integers(0, alg.size, width)
    closed = naive_subpower(alg, gens)
    t = subpower_member(alg, gens, target)
    assert (t is not None) == (tuple(int(v) for v in target) in closed)
    if t is not None:
        val = np.broadcast_to(eval_vectors(alg, t, [gens[0], gens[1]]), (width,))
        assert val.tolist() == target.tolist()


def test_generator_order_is_kept():
    from tolalg import validate_algebra

    alg = validate_algebra(2, [("meet", 2, [0, 0, 0, 1])])
    cl = Closure(alg, 2)
    assert cl.add([[1, 0], [0, 1], [1, 0]], ["a", "b", "c"]) == [0, 1, 0]
    assert cl.run(target=[0, 0]) == 2


def test_element_cap():
    from tolalg import validate_algebra

    alg = validate_algebra(2, [("imp", 2, [1, 1, 0, 1])])
    cl = Closure(alg, 16, Limits(max_elements=50))
    cols = np.indices((2,) * 4).reshape(4, -1)
    cl.add(cols, list(range(4)))
    with pytest.raises(ResourceExceeded):
        cl.run()


def test_shared_budget_stops_repeated_closures():
    from tolalg import validate_algebra

    alg = validate_algebra(3, [("o", 2, [0, 1, 2, 0, 0, 0, 1, 2, 0]), ("s", 1, [1, 2, 0])])
    budget = WorkBudget(10**4)
    gens = np.indices((3, 3)).reshape(2, -1)
    with pytest.raises(ResourceExceeded):
        for _ in range(1000):
            cl = Closure(alg, 9, budget=budget)
            cl.add(gens, [0, 1])
            cl.run()
    assert budget.exhausted
