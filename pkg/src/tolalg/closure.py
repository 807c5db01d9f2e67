"""Generated subalgebras of finite powers, with derivation records.

Everything that closes a set under operations goes through `Closure`: free
algebras (subalgebras of A^(A^k) generated by projections), tolerances and
congruences (subalgebras of A^2), and identity-system solving (subalgebras
of A^I).  Elements are rows of a 2-d integer array; closure proceeds in
semi-naive layers so each argument tuple is evaluated exactly once.
"""
from __future__ import annotations

import logging
import weakref
from typing import Callable, Hashable, Sequence

import numpy as np

from .algebra import FiniteAlgebra
from .exceptions import ResourceExceeded
from .limits import Limits, WorkBudget, default_limits
from .terms import App, Term, Var, eval_vectors

log = logging.getLogger(__name__)

_CHUNK_ENTRIES = 1 << 22
_HASH_SEED = 0x5EED
_DENSE_KEYS = 1 << 24
_STAGE_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


class Closure:
    """Subalgebra of ``alg**width`` generated by the rows passed to `add`.

    Each element records how it was first obtained: either a generator label
    or ``(op_index, children)``.  Indices are assigned in discovery order,
    generators first, which makes every result reproducible.
    """

    def __init__(
        self,
        alg: FiniteAlgebra,
        width: int,
        limits: Limits | None = None,
        budget: WorkBudget | None = None,
    ):
        self.alg = alg
        self.budget = budget
        self.size = alg.size
        self.width = int(width)
        self.limits = limits or default_limits()
        self._ops = [(op.arity, op.table) for op in alg.ops]
        self.dtype = np.uint8 if self.size <= 255 else np.int64
        self._rows = np.zeros((16, self.width), dtype=self.dtype)
        self.n = 0
        self.done = 0
        self.parents: list = []
        # index just past each completed layer; generators form layer 0
        self.boundaries: list[int] = []
        self._index: dict[Hashable, int] = {}
        self._exact = self.size ** self.width < 2**62
        # small key spaces get a presence bitmap instead of sorting batches
        self._present = (
            np.zeros(self.size**self.width, dtype=bool)
            if self.size**self.width <= _DENSE_KEYS
            else None
        )
        if self._exact:
            self._weights = np.array(
                [self.size ** (self.width - 1 - j) for j in range(self.width)],
                dtype=np.int64,
            )
        else:
            rng = np.random.default_rng(_HASH_SEED)
            self._weights = rng.integers(1, 2**63, size=self.width, dtype=np.uint64) | 1

    # -- storage ---------------------------------------------------------
    @property
    def rows(self) -> np.ndarray:
        return self._rows[: self.n]

    def __len__(self) -> int:
        return self.n

    @property
    def closed(self) -> bool:
        return self.done == self.n

    def _hash(self, rows: np.ndarray) -> np.ndarray:
        if self.width == 0:
            return np.zeros(len(rows), dtype=np.int64)
        if self._exact:
            return rows.astype(np.int64) @ self._weights
        return (rows.astype(np.uint64) * self._weights).sum(axis=1, dtype=np.uint64).view(np.int64)

    def _key(self, row: np.ndarray, h: int) -> Hashable:
        return int(h) if self._exact else np.ascontiguousarray(row, dtype=self.dtype).tobytes()

    def find(self, row) -> int | None:
        row = np.asarray(row, dtype=self.dtype).reshape(1, self.width)
        return self._index.get(self._key(row[0], self._hash(row)[0]))

    def find_many(self, rows) -> list[int | None]:
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.width).astype(self.dtype)
        hashes = self._hash(rows)
        if self._exact:
            get = self._index.get
            return [get(h) for h in hashes.tolist()]
        return [self._index.get(self._key(r, h)) for r, h in zip(rows, hashes)]

    def _append(self, row: np.ndarray, key: Hashable, parent) -> int:
        if self.n == len(self._rows):
            grown = np.zeros((2 * len(self._rows), self.width), dtype=self.dtype)
            grown[: self.n] = self._rows[: self.n]
            self._rows = grown
        self._rows[self.n] = row
        self._index[key] = self.n
        if self._present is not None:
            self._present[key] = True
        self.parents.append(parent)
        self.n += 1
        if self.n > self.limits.max_elements:
            raise ResourceExceeded(
                f"generated subalgebra exceeds {self.limits.max_elements} elements"
            )
        if self.n * self.width > 20 * self.limits.max_table:
            raise ResourceExceeded("generated subalgebra exceeds the storage cap")
        return self.n - 1

    def add(self, rows, labels: Sequence) -> list[int]:
        """Add generator rows; returns the index of each (existing if duplicate)."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size != len(labels) * self.width:
            raise ValueError("one label per generator row")
        rows = rows.reshape(len(labels), self.width)
        if len(rows) and (rows.min() < 0 or rows.max() >= self.size):
            raise ValueError("generator entries outside the universe")
        rows = rows.astype(self.dtype)
        hashes = self._hash(rows)
        out = []
        for row, h, lab in zip(rows, hashes, labels):
            key = self._key(row, h)
            idx = self._index.get(key)
            if idx is None:
                idx = self._append(row, key, ("gen", lab))
            out.append(idx)
        return out

    def _absorb(self, res: np.ndarray, make_parent: Callable[[int], tuple]) -> None:
        hashes = self._hash(res)
        if self._present is not None:
            fresh = np.flatnonzero(~self._present[hashes])
            if not len(fresh):
                return
            _, first = np.unique(hashes[fresh], return_index=True)
            for pos in np.sort(fresh[first]):
                self._append(res[pos], int(hashes[pos]), make_parent(int(pos)))
            return
        uniq, first, inverse = np.unique(hashes, return_index=True, return_inverse=True)
        if not self._exact:
            if not np.array_equal(res, res[first[inverse.reshape(-1)]]):
                # hash collision inside the batch: dedup exactly instead
                _, first = np.unique(res, axis=0, return_index=True)
        for pos in np.sort(first):
            key = self._key(res[pos], hashes[pos])
            if key not in self._index:
                self._append(res[pos], key, make_parent(int(pos)))

    # -- layers ------------------------------------------------------------
    def _stages(self, op_i: int):
        """Transition tables for applying an operation one argument at a time.

        After j arguments the state of a coordinate is the class of the
        residual (r-j)-ary table; equal residual tables share a class, which
        is what lets partial applications be merged.
        """
        op = self.alg.ops[op_i]
        if op in _STAGE_CACHE:
            return _STAGE_CACHE[op]
        arity, table = self._ops[op_i]
        s = self.size
        trans = []
        reps = np.zeros(1, dtype=np.int64)
        for j in range(1, arity + 1):
            resid = np.asarray(table).reshape(s**j, s ** (arity - j))
            uniq, first, inv = np.unique(resid, axis=0, return_index=True, return_inverse=True)
            inv = inv.reshape(-1)
            trans.append(inv[reps[:, None] * s + np.arange(s)[None, :]].astype(np.int32))
            reps = first
        values = uniq[:, 0].astype(np.int64)
        _STAGE_CACHE[op] = (trans, values)
        return trans, values

    def _ranges(self, arity: int, p: int, lo: int, hi: int):
        return [(0, lo)] * p + [(lo, hi)] + [(0, hi)] * (arity - p - 1)

    def _charge(self, entries: int) -> None:
        self._work += entries
        if self.budget is not None:
            self.budget.spend(entries)
        if self._work > self.limits.max_work:
            raise ResourceExceeded(
                f"closure layer exceeds {self.limits.max_work} evaluations"
            )

    def _pairs(self, n_states: int, a0: int, a1: int):
        k = a1 - a0
        total = n_states * k
        step = max(1, _CHUNK_ENTRIES // max(self.width, 1))
        for c0 in range(0, total, step):
            flat = np.arange(c0, min(total, c0 + step), dtype=np.int64)
            yield flat // k, a0 + flat % k

    def _extend(self, states: np.ndarray, trans: np.ndarray, a0: int, a1: int):
        """Apply one more argument drawn from elements a0..a1-1; merge equal states."""
        self._charge(len(states) * (a1 - a0) * max(self.width, 1))
        out, prev, arg = [], [], []
        seen: dict[bytes, int] = {}
        n_out = 0
        classes = int(trans.max()) + 1
        dense = None
        if classes**self.width <= _DENSE_KEYS:
            dense = np.zeros(classes**self.width, dtype=bool)
            weights = classes ** np.arange(self.width - 1, -1, -1, dtype=np.int64)
        for sidx, aidx in self._pairs(len(states), a0, a1):
            cand = trans[states[sidx], self._rows[aidx]]
            if dense is not None:
                keys = cand.astype(np.int64) @ weights
                fresh = np.flatnonzero(~dense[keys])
                _, first = np.unique(keys[fresh], return_index=True)
                first = np.sort(fresh[first])
                dense[keys[first]] = True
                out.extend(cand[first])
                prev.extend(sidx[first])
                arg.extend(aidx[first])
                continue
            first = _first_unique(cand)
            for pos in first:
                key = cand[pos].tobytes()
                if key not in seen:
                    seen[key] = n_out
                    n_out += 1
                    out.append(cand[pos])
                    prev.append(sidx[pos])
                    arg.append(aidx[pos])
        if not out:
            return np.zeros((0, self.width), dtype=np.int32), np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.array(out), np.array(prev, dtype=np.int64), np.array(arg, dtype=np.int64)

    def run(
        self,
        target=None,
        *,
        stop_size: int | None = None,
        partial_ok: bool = False,
        max_layers: int | None = None,
    ) -> int | None:
        """Close under all operations.

        Returns the index of ``target`` as soon as it is generated (or None).
        With ``partial_ok`` the closure stops at the last completed layer
        instead of raising when a limit would be crossed; check `closed`.
        """
        tkey = None
        if target is not None:
            trow = np.asarray(target, dtype=np.int64).reshape(1, self.width).astype(self.dtype)
            tkey = self._key(trow[0], self._hash(trow)[0])
            if tkey in self._index:
                return self._index[tkey]
        layers = 0
        while not self.closed:
            if max_layers is not None and layers >= max_layers:
                return None
            if stop_size is not None and self.n >= stop_size:
                return None
            n0, p0 = self.n, len(self.parents)
            try:
                found = self._layer(tkey, stop_size)
            except ResourceExceeded:
                if not partial_ok:
                    raise
                self._rollback(n0, p0)
                return None
            layers += 1
            if found is not None:
                return found
        return None

    def _rollback(self, n0: int, p0: int) -> None:
        for i in range(n0, self.n):
            row = self._rows[i]
            key = self._key(row, self._hash(row[None, :])[0])
            self._index.pop(key, None)
            if self._present is not None:
                self._present[key] = False
        self.n = n0
        del self.parents[p0:]

    def _layer(self, tkey, stop_size) -> int | None:
        lo, hi = self.done, self.n
        self._work = 0
        for op_i, (arity, table) in enumerate(self._ops):
            if arity == 0:
                if lo == 0:
                    row = np.full((1, self.width), table[0], dtype=self.dtype)
                    self._absorb(row, lambda pos, o=op_i: (o, ()))
                    if tkey is not None and tkey in self._index:
                        return self._index[tkey]
                continue
            trans, values = self._stages(op_i)
            for p in reversed(range(arity)):
                ranges = self._ranges(arity, p, lo, hi)
                if any(a1 <= a0 for a0, a1 in ranges):
                    continue
                states = np.zeros((1, self.width), dtype=np.int32)
                chain = []
                for j in range(arity - 1):
                    states, prev, arg = self._extend(states, trans[j], *ranges[j])
                    chain.append((prev, arg))
                a0, a1 = ranges[-1]
                self._charge(len(states) * (a1 - a0) * max(self.width, 1))
                for sidx, aidx in self._pairs(len(states), a0, a1):
                    res = values[trans[-1][states[sidx], self._rows[aidx]]].astype(self.dtype)

                    def parent(pos, o=op_i, sidx=sidx, aidx=aidx, chain=chain):
                        args = [int(aidx[pos])]
                        k = int(sidx[pos])
                        for prev, arg in reversed(chain):
                            args.append(int(arg[k]))
                            k = int(prev[k])
                        return (o, tuple(reversed(args)))

                    self._absorb(res, parent)
                    # stopping early leaves `done` alone so a later run redoes this layer
                    if tkey is not None and tkey in self._index:
                        return self._index[tkey]
                    if stop_size is not None and self.n >= stop_size:
                        return None
        self.done = hi
        self.boundaries.append(hi)
        return None

    def layer_of(self, i: int) -> int:
        """Closure layer in which element ``i`` first appeared."""
        return int(np.searchsorted(self.boundaries, i, side="right"))

    # -- derivations -------------------------------------------------------
    def term(self, i: int, leaf: Callable[[object], Term] = Var, _memo=None) -> Term:
        """Witness term of element ``i``; generator labels map through ``leaf``."""
        memo = self._memo_for(leaf) if _memo is None else _memo
        if i in memo:
            return memo[i]
        stack = [i]
        while stack:
            j = stack[-1]
            if j in memo:
                stack.pop()
                continue
            kind, data = self.parents[j]
            if kind == "gen":
                memo[j] = leaf(data)
                stack.pop()
                continue
            pending = [c for c in data if c not in memo]
            if pending:
                stack.extend(pending)
                continue
            memo[j] = App(kind, tuple(memo[c] for c in data))
            stack.pop()
        return memo[i]

    def _memo_for(self, leaf) -> dict:
        cache = self.__dict__.setdefault("_term_memos", {})
        return cache.setdefault(leaf, {})


def _first_unique(rows: np.ndarray) -> np.ndarray:
    """Positions of the first occurrence of each distinct row, in order."""
    if rows.shape[1] == 0:
        return np.zeros(min(len(rows), 1), dtype=np.int64)
    _, first = np.unique(np.ascontiguousarray(rows).view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).reshape(-1), return_index=True)
    return np.sort(first)


def subpower_member(
    alg: FiniteAlgebra,
    generators: np.ndarray,
    target: np.ndarray,
    limits: Limits | None = None,
    budget: WorkBudget | None = None,
) -> Term | None:
    """Decide whether ``target`` lies in the subalgebra of A^W generated by rows.

    Returns a term over the generator slots (``Var(j)`` is row ``j``) that
    evaluates to ``target``, or None when no such term exists.

    Works on projections: the subalgebra generated on a coordinate set S is
    computed in full; if ``target`` restricted to S is missing, non-membership
    is certified.  Otherwise the term found there is evaluated on all
    coordinates and the first coordinate where it disagrees joins S.
    """
    limits = limits or default_limits()
    generators = np.asarray(generators, dtype=np.int64)
    target = np.asarray(target, dtype=np.int64).reshape(-1)
    g, width = generators.shape
    if target.shape != (width,):
        raise ValueError("target width differs from generator width")
    env = [generators[j] for j in range(g)]
    coords: list[int] = [0] if width else []
    while True:
        cl = Closure(alg, len(coords), limits, budget)
        cl.add(generators[:, coords], list(range(g)))
        idx = cl.run(target[coords])
        if idx is None:
            return None
        t = cl.term(idx)
        full = eval_vectors(alg, t, env) if g else _eval_closed(alg, t, width)
        bad = np.flatnonzero(full != target)
        if bad.size == 0:
            return t
        coords.append(int(bad[0]))
        log.debug("subpower_member: refining on %d coordinates", len(coords))


def _eval_closed(alg: FiniteAlgebra, t: Term, width: int) -> np.ndarray:
    return np.broadcast_to(eval_vectors(alg, t, [np.zeros(width, dtype=np.int64)]), (width,))
