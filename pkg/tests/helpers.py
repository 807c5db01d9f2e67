"""Random generators shared by the test modules."""
from __future__ import annotations

import numpy as np

from tolalg import App, Var, validate_algebra


def random_algebra(rng, size: int, arities):
    ops = [(f"o{i}", a, rng.integers(0, size, size**a)) for i, a in enumerate(arities)]
    return validate_algebra(size, ops)


def random_term(rng, arities, nvars: int, depth: int):
    usable = [i for i, a in enumerate(arities) if a > 0]
    if depth == 0 or not usable or rng.random() < 0.3:
        return Var(int(rng.integers(nvars)))
    op = int(rng.choice(usable))
    return App(op, tuple(random_term(rng, arities, nvars, depth - 1) for _ in range(arities[op])))


def random_shape(rng, arities, depth: int, leaves: list):
    """Random term whose leaves are numbered left to right."""
    usable = [i for i, a in enumerate(arities) if a > 0]
    if depth == 0 or not usable or rng.random() < 0.3:
        leaves.append(len(leaves))
        return Var(leaves[-1])
    op = int(rng.choice(usable))
    return App(op, tuple(random_shape(rng, arities, depth - 1, leaves) for _ in range(arities[op])))


def random_relation_pairs(rng, size: int, count: int):
    return [tuple(int(v) for v in rng.integers(0, size, 2)) for _ in range(count)]


def all_pairs(size: int):
    return [(a, b) for a in range(size) for b in range(size)]




def algebras(max_size: int = 4, max_ops: int = 2, max_arity: int = 2):
    """Hypothesis strategy for small random algebras."""
    from hypothesis import strategies as st

    @st.composite
    def build(draw):
        size = draw(st.integers(1, max_size))
        arities = draw(st.lists(st.integers(0, max_arity), min_size=1, max_size=max_ops))
        ops = [
            (f"o{i}", a, draw(st.lists(st.integers(0, size - 1), min_size=size**a, max_size=size**a)))
            for i, a in enumerate(arities)
        ]
        return validate_algebra(size, ops)

    return build()


__all__ = ["random_algebra", "random_term", "random_shape", "random_relation_pairs", "all_pairs", "algebras"]
