"""Finite algebras stored as flat operation tables.

The universe of an algebra of size ``s`` is ``{0, ..., s-1}``.  An ``r``-ary
operation is a flat table of length ``s**r`` indexed row-major, most
significant argument first::

    index(a_0, ..., a_{r-1}) = sum(a_j * s**(r-1-j))
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    ArityMismatch,
    DuplicateOpName,
    ElementOutOfRange,
    EntryOutOfRange,
    TableLengthMismatch,
)
from .limits import Limits, check_table


def _frozen(table) -> np.ndarray:
    arr = np.array(table, dtype=np.int64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operation:
    name: str
    arity: int
    table: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Operation):
            return NotImplemented
        return (
            self.name == other.name
            and self.arity == other.arity
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.name, self.arity, self.table.tobytes()))

    def __repr__(self):
        return f"Operation({self.name!r}, arity={self.arity})"


@dataclass(frozen=True, eq=False)
class FiniteAlgebra:
    size: int
    ops: tuple[Operation, ...]

    def __eq__(self, other):
        if not isinstance(other, FiniteAlgebra):
            return NotImplemented
        return self.size == other.size and self.ops == other.ops

    def __hash__(self):
        return hash((self.size, self.ops))

    def __repr__(self):
        sig = ", ".join(f"{op.name}/{op.arity}" for op in self.ops)
        return f"FiniteAlgebra(size={self.size}, ops=[{sig}])"

    @property
    def names(self) -> list[str]:
        return [op.name for op in self.ops]

    @property
    def arities(self) -> list[int]:
        return [op.arity for op in self.ops]

    def op_index(self, name: str) -> int:
        for i, op in enumerate(self.ops):
            if op.name == name:
                return i
        raise KeyError(f"no operation named {name!r}")

    def op(self, key: int | str) -> Operation:
        if isinstance(key, str):
            return self.ops[self.op_index(key)]
        return self.ops[key]

    def __call__(self, key: int | str, *args: int) -> int:
        idx = self.op_index(key) if isinstance(key, str) else key
        return apply_op(self, idx, args)


def validate_algebra(
    size: int,
    ops: Iterable[Operation | tuple],
    limits: Limits | None = None,
) -> FiniteAlgebra:
    """Build a FiniteAlgebra, checking every table.

    ``ops`` holds Operation objects or ``(name, arity, table)`` triples.
    """
    if int(size) != size or size < 1:
        raise EntryOutOfRange(f"universe size must be a positive integer, got {size}")
    size = int(size)
    built = []
    seen = set()
    for op in ops:
        if not isinstance(op, Operation):
            name, arity, table = op
            op = Operation(str(name), int(arity), _frozen(table))
        elif op.table.flags.writeable:
            op = Operation(op.name, op.arity, _frozen(op.table))
        if op.arity < 0:
            raise ArityMismatch(f"operation {op.name!r} has negative arity")
        if op.name in seen:
            raise DuplicateOpName(f"operation name {op.name!r} used twice")
        seen.add(op.name)
        expected = size**op.arity
        check_table(expected, limits, f"table of {op.name!r}")
        if op.table.shape != (expected,):
            raise TableLengthMismatch(
                f"operation {op.name!r}: table has length {op.table.size}, "
                f"expected {size}^{op.arity} = {expected}"
            )
        if expected and (op.table.min() < 0 or op.table.max() >= size):
            bad = int(op.table[(op.table < 0) | (op.table >= size)][0])
            raise EntryOutOfRange(
                f"operation {op.name!r}: entry {bad} outside 0..{size - 1}"
            )
        built.append(op)
    return FiniteAlgebra(size, tuple(built))


def encode(args: Sequence[int], size: int) -> int:
    idx = 0
    for a in args:
        idx = idx * size + int(a)
    return idx


def decode(index: int, size: int, arity: int) -> tuple[int, ...]:
    out = [0] * arity
    for j in range(arity - 1, -1, -1):
        index, out[j] = divmod(index, size)
    return tuple(out)


def all_tuples(size: int, arity: int) -> np.ndarray:
    """All of ``A^arity`` in row-major order as an ``(size**arity, arity)`` array."""
    if arity == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((size,) * arity, dtype=np.int64)
    return grids.reshape(arity, -1).T.copy()


def apply_op(alg: FiniteAlgebra, op_index: int, args: Sequence[int]) -> int:
    op = alg.ops[op_index]
    if len(args) != op.arity:
        raise ArityMismatch(
            f"{op.name} takes {op.arity} arguments, got {len(args)}"
        )
    for a in args:
        if not 0 <= a < alg.size:
            raise ElementOutOfRange(f"element {a} outside 0..{alg.size - 1}")
    return int(op.table[encode(args, alg.size)])


def apply_vectors(
    alg: FiniteAlgebra, op_index: int, columns: Sequence[np.ndarray]
) -> np.ndarray:
    """Apply an operation pointwise to equally shaped integer arrays."""
    op = alg.ops[op_index]
    if len(columns) != op.arity:
        raise ArityMismatch(
            f"{op.name} takes {op.arity} arguments, got {len(columns)}"
        )
    if op.arity == 0:
        raise ArityMismatch("constants have no argument arrays; use op.table[0]")
    idx = np.asarray(columns[0], dtype=np.int64)
    for col in columns[1:]:
        idx = idx * alg.size + col
    return op.table[idx]


def is_idempotent(alg: FiniteAlgebra) -> bool:
    for op in alg.ops:
        if op.arity == 0:
            if alg.size > 1:
                return False
            continue
        diag = np.arange(alg.size, dtype=np.int64)
        idx = sum(diag * alg.size**j for j in range(op.arity))
        if not np.array_equal(op.table[idx], diag):
            return False
    return True
