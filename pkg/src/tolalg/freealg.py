"""Free algebras of V(A) as clones of term functions of A.

The free algebra of V(A) on k generators is the subalgebra of A^(A^k)
generated by the k projections: its elements are the k-ary term functions of
A, each stored as a value table over A^k (row-major order) together with the
term that first produced it.
"""
from __future__ import annotations

import numpy as np

from .algebra import FiniteAlgebra, validate_algebra
from .closure import Closure
from .exceptions import ResourceExceeded
from .limits import Limits, check_table, default_limits
from .terms import Term, TermFunction, Var, max_var, projection_columns, term_function


class FreeAlgebra:
    """Term functions of ``base`` of arity ``k``, projections first.

    ``complete`` is False for a partial exploration: then the elements are
    the first closure layers only, in the order the full algebra would list
    them, and the structure is not closed under the operations.
    """

    def __init__(self, base: FiniteAlgebra, k: int, closure: Closure, generators: list[int]):
        self.base = base
        self.k = k
        self._cl = closure
        self.generators = generators
        self._lifted: FiniteAlgebra | None = None

    @property
    def complete(self) -> bool:
        return self._cl.closed

    def __len__(self) -> int:
        return self._cl.n

    @property
    def tables(self) -> np.ndarray:
        return self._cl.rows

    def table(self, i: int) -> np.ndarray:
        return self._cl.rows[i].astype(np.int64)

    def term(self, i: int) -> Term:
        return self._cl.term(i)

    def element(self, i: int) -> TermFunction:
        table = self.table(i)
        table.setflags(write=False)
        return TermFunction(self.k, table, self.term(i))

    def index_of(self, table) -> int | None:
        table = np.asarray(table, dtype=np.int64)
        if table.shape != (self.base.size**self.k,):
            return None
        if table.min(initial=0) < 0 or table.max(initial=0) >= self.base.size:
            return None
        return self._cl.find(table)

    def index_of_term(self, t: Term) -> int | None:
        return self.index_of(term_function(self.base, t, self.k).table)

    def grow(self, layers: int = 1) -> bool:
        """Add up to ``layers`` whole closure layers; False if none fitted the limits."""
        if self.complete:
            return False
        n0, b0 = len(self), len(self._cl.boundaries)
        self._cl.run(partial_ok=True, max_layers=layers)
        return len(self._cl.boundaries) > b0 or len(self) > n0

    def layer_of(self, i: int) -> int:
        return self._cl.layer_of(i)

    def layer_blocks(self, start: int = 0) -> list[tuple[int, int]]:
        """Index ranges [a, b) of whole layers (or their tails) from ``start`` on."""
        cuts = sorted({start, len(self)} | {b for b in self._cl.boundaries if start < b < len(self)})
        return [(a, b) for a, b in zip(cuts, cuts[1:]) if a < b]

    def essential(self) -> np.ndarray:
        """Boolean matrix: element i depends on variable v."""
        s, k = self.base.size, self.k
        t = self.tables.reshape((len(self),) + (s,) * k)
        out = np.zeros((len(self), k), dtype=bool)
        for v in range(k):
            first = np.take(t, [0], axis=v + 1)
            out[:, v] = (t != first).reshape(len(self), -1).any(axis=1)
        return out

    def lifted_work(self) -> int:
        n = len(self)
        return sum(n**op.arity for op in self.base.ops) * max(self._cl.width, 1)

    def as_algebra(self, limits: Limits | None = None) -> FiniteAlgebra:
        """F itself as a FiniteAlgebra (operation tables over element indices)."""
        if self._lifted is not None:
            return self._lifted
        if not self.complete:
            raise ResourceExceeded("free algebra was only partially explored")
        limits = limits or default_limits()
        n = len(self)
        for op in self.base.ops:
            check_table(n**op.arity, limits, f"lifted table of {op.name}")
        if self.lifted_work() > limits.max_work:
            raise ResourceExceeded("lifting the operations to F is too expensive")
        rows = self._cl.rows
        s = self.base.size
        ops = []
        for op in self.base.ops:
            r = op.arity
            if r == 0:
                const = np.full(rows.shape[1], op.table[0], dtype=np.int64)
                ops.append((op.name, 0, [self._cl.find(const)]))
                continue
            total = n**r
            out = np.empty(total, dtype=np.int64)
            chunk = max(1, (1 << 22) // max(rows.shape[1], 1))
            for c0 in range(0, total, chunk):
                flat = np.arange(c0, min(total, c0 + chunk), dtype=np.int64)
                coords = np.unravel_index(flat, (n,) * r)
                acc = rows[coords[0]].astype(np.int64)
                for j in range(1, r):
                    acc = acc * s + rows[coords[j]]
                out[c0 : c0 + len(flat)] = self._cl.find_many(op.table[acc])
            ops.append((op.name, r, out))
        self._lifted = validate_algebra(n, ops, limits)
        return self._lifted

    def __repr__(self):
        state = "complete" if self.complete else "partial"
        return f"FreeAlgebra(k={self.k}, elements={len(self)}, {state})"


def _start(alg: FiniteAlgebra, k: int, limits: Limits) -> tuple[Closure, list[int]]:
    cols = projection_columns(alg.size, k, limits)
    cl = Closure(alg, alg.size**k, limits)
    gens = cl.add(np.array(cols, dtype=np.int64).reshape(k, alg.size**k), list(range(k)))
    return cl, gens


def free_algebra(alg: FiniteAlgebra, k: int, limits: Limits | None = None) -> FreeAlgebra:
    """The full free algebra on ``k`` generators; raises ResourceExceeded if too big."""
    limits = limits or default_limits()
    cl, gens = _start(alg, k, limits)
    cl.run()
    return FreeAlgebra(alg, k, cl, gens)


def explore_free_algebra(
    alg: FiniteAlgebra, k: int, limits: Limits | None = None, max_layers: int | None = None
) -> FreeAlgebra:
    """As many whole closure layers of F(k) as the limits allow.

    ``max_layers=0`` returns just the projections; `FreeAlgebra.grow`
    continues from there.
    """
    limits = limits or default_limits()
    cl, gens = _start(alg, k, limits)
    if max_layers != 0:
        cl.run(partial_ok=True, max_layers=max_layers)
    return FreeAlgebra(alg, k, cl, gens)


def identity_holds(
    alg: FiniteAlgebra, s: Term, t: Term, k: int | None = None, limits: Limits | None = None
) -> bool:
    """True iff ``s ≈ t`` is an identity of A (equivalently of V(A))."""
    if k is None:
        k = max(max_var(s), max_var(t)) + 1
    return bool(
        np.array_equal(term_function(alg, s, k, limits).table, term_function(alg, t, k, limits).table)
    )


def diagonal_points(size: int, n: int) -> np.ndarray:
    """Indices in A^(2n) of the tuples (y_0, y_0, ..., y_{n-1}, y_{n-1}), y in A^n order."""
    idx = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        idx = (idx[:, None] * size * size + np.arange(size) * (size + 1)).reshape(-1)
    return idx


def diagonal_restriction(tables: np.ndarray, size: int, n: int) -> np.ndarray:
    return np.asarray(tables)[..., diagonal_points(size, n)]


def diagonal_pairs(F: FreeAlgebra) -> list[tuple[int, int]]:
    """Pairs (i, j) of elements agreeing once x_{2i+1} is identified with x_{2i}.

    These are exactly the pairs of the congruence of F generated by the
    pairs of generators (x_{2i}, x_{2i+1}).
    """
    if F.k % 2:
        raise ValueError("diagonal pairs need an even number of generators")
    groups = diagonal_classes(F)
    pairs = [(int(a), int(b)) for cls in groups for a in cls for b in cls]
    pairs.sort()
    return pairs


def diagonal_classes(F: FreeAlgebra) -> list[np.ndarray]:
    restricted = diagonal_restriction(F.tables, F.base.size, F.k // 2)
    _, inverse = np.unique(restricted, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.flatnonzero(np.diff(inverse[order])) + 1
    return [np.sort(c) for c in np.split(order, bounds)]


def generator_pairs(n: int) -> list[tuple[int, int]]:
    return [(2 * i, 2 * i + 1) for i in range(n)]


__all__ = [
    "FreeAlgebra",
    "free_algebra",
    "explore_free_algebra",
    "identity_holds",
    "diagonal_pairs",
    "diagonal_classes",
    "diagonal_points",
    "diagonal_restriction",
    "generator_pairs",
    "Var",
]
