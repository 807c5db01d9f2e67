"""Binary relations on finite algebras: tolerances, congruences and their images.

A tolerance is a reflexive, symmetric, compatible relation; a congruence is a
transitive tolerance.  The tolerance generated by pairs ``(a_i, b_i)`` is the
subalgebra of A^2 generated by those pairs, their flips and the diagonal of a
generating set, so every member pair (d, e) comes with a term h satisfying

    d = h(a_0, b_0, ..., a_{g-1}, b_{g-1}, c_0, ..., c_{s-1})
    e = h(b_0, a_0, ..., b_{g-1}, a_{g-1}, c_0, ..., c_{s-1})

which `tolerance_witness` extracts from the derivation records.
"""
from __future__ import annotations

import weakref

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .algebra import FiniteAlgebra, all_tuples, encode, validate_algebra
from .closure import Closure
from .exceptions import AlgebraError, ElementOutOfRange, PairNotInTolerance
from .limits import Limits, default_limits
from .terms import Term, Var, eval_term

Pair = tuple[int, int]


class BinRel:
    """A set of ordered pairs over ``{0, ..., size-1}`` (boolean matrix)."""

    __slots__ = ("size", "matrix")

    def __init__(self, size: int, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=bool)
        if matrix.shape != (size, size):
            raise ValueError(f"relation matrix must be {size}x{size}")
        matrix = matrix.copy()
        matrix.setflags(write=False)
        self.size = size
        self.matrix = matrix

    @classmethod
    def from_pairs(cls, size: int, pairs: Iterable[Pair]) -> "BinRel":
        m = np.zeros((size, size), dtype=bool)
        for a, b in pairs:
            if not (0 <= a < size and 0 <= b < size):
                raise ElementOutOfRange(f"pair ({a}, {b}) outside 0..{size - 1}")
            m[a, b] = True
        return cls(size, m)

    @classmethod
    def diagonal(cls, size: int) -> "BinRel":
        return cls(size, np.eye(size, dtype=bool))

    @classmethod
    def full(cls, size: int) -> "BinRel":
        return cls(size, np.ones((size, size), dtype=bool))

    def pairs(self) -> list[Pair]:
        return [(int(a), int(b)) for a, b in np.argwhere(self.matrix)]

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs())

    def __len__(self) -> int:
        return int(self.matrix.sum())

    def __contains__(self, pair) -> bool:
        a, b = pair
        return 0 <= a < self.size and 0 <= b < self.size and bool(self.matrix[a, b])

    def __eq__(self, other):
        if not isinstance(other, BinRel):
            return NotImplemented
        return self.size == other.size and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.size, np.packbits(self.matrix).tobytes()))

    def __le__(self, other: "BinRel") -> bool:
        return self.size == other.size and not np.any(self.matrix & ~other.matrix)

    def __or__(self, other: "BinRel") -> "BinRel":
        return BinRel(self.size, self.matrix | other.matrix)

    def inverse(self) -> "BinRel":
        return BinRel(self.size, self.matrix.T)

    def compose(self, other: "BinRel") -> "BinRel":
        prod = self.matrix.astype(np.float32) @ other.matrix.astype(np.float32)
        return BinRel(self.size, prod > 0)

    def __repr__(self):
        return f"BinRel(size={self.size}, pairs={self.pairs()})"


@dataclass(frozen=True)
class RelationFlags:
    reflexive: bool
    symmetric: bool
    transitive: bool
    compatible: bool

    @property
    def tolerance(self) -> bool:
        return self.reflexive and self.symmetric and self.compatible

    @property
    def congruence(self) -> bool:
        return self.tolerance and self.transitive

    def as_dict(self) -> dict[str, bool]:
        return {
            "reflexive": self.reflexive,
            "symmetric": self.symmetric,
            "transitive": self.transitive,
            "compatible": self.compatible,
            "tolerance": self.tolerance,
            "congruence": self.congruence,
        }


def is_compatible(alg: FiniteAlgebra, r: BinRel, limits: Limits | None = None) -> bool:
    """True iff every operation maps coordinatewise-related tuples to related values."""
    pairs = np.argwhere(r.matrix)
    for op in alg.ops:
        if op.arity == 0:
            c = int(op.table[0])
            if not r.matrix[c, c]:
                return False
            continue
        if not len(pairs):
            continue
        cl = Closure(alg, 2, limits)
        cl.add(pairs, [None] * len(pairs))
        n0 = cl.n
        cl.run(max_layers=1)
        if cl.n != n0:
            return False
    return True


def classify(alg: FiniteAlgebra, r: BinRel) -> RelationFlags:
    if r.size != alg.size:
        raise AlgebraError("relation and algebra have different universes")
    m = r.matrix
    return RelationFlags(
        reflexive=bool(np.all(np.diag(m))),
        symmetric=bool(np.array_equal(m, m.T)),
        transitive=r.compose(r) <= r,
        compatible=is_compatible(alg, r),
    )


def small_tolerances(
    alg: FiniteAlgebra, limits: Limits | None = None, max_count: int = 64
) -> list[BinRel]:
    """Tolerances of ``alg`` other than the full relation, smallest first.

    Every tolerance is generated by its pairs, so adding one pair at a time
    to known tolerances and closing reaches all of them.  The search stops
    after ``max_count`` tolerances, which then form a subset.
    """
    key = (max_count, limits)
    cached = _TOLERANCE_CACHE.setdefault(alg, {})
    if key not in cached:
        cached[key] = _search_tolerances(alg, limits, max_count)
    return list(cached[key])


_TOLERANCE_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _search_tolerances(alg: FiniteAlgebra, limits: Limits | None, max_count: int) -> list[BinRel]:
    s = alg.size
    full = BinRel.full(s)
    diag, _ = gen_tolerance(alg, [], limits=limits)
    found = {diag}
    frontier = [diag]
    while frontier and len(found) < max_count:
        nxt = []
        for r in frontier:
            for a, b in zip(*np.nonzero(np.triu(~r.matrix, 1))):
                t, _ = gen_tolerance(alg, r.pairs() + [(int(a), int(b))], limits=limits)
                if t not in found:
                    found.add(t)
                    nxt.append(t)
                    if len(found) >= max_count:
                        break
            if len(found) >= max_count:
                break
        frontier = nxt
    out = [r for r in found if r != full]
    out.sort(key=lambda r: (len(r), r.pairs()))
    return out


# -- derivations ---------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    index: int


@dataclass(frozen=True)
class Symmetry:
    pair: Pair


@dataclass(frozen=True)
class Diagonal:
    element: int


@dataclass(frozen=True)
class OpStep:
    op: int
    children: tuple[Pair, ...]


@dataclass(frozen=True)
class TransStep:
    left: Pair
    right: Pair


class DerivationDAG:
    """How each pair of a generated tolerance or congruence was first obtained.

    Every record refers only to pairs derived earlier, so replaying the
    records in index order rebuilds the relation.
    """

    def __init__(self, closure: Closure, gens: Sequence[Pair], constants: Sequence[int] | None):
        self._cl = closure
        self.gens = tuple(tuple(int(x) for x in g) for g in gens)
        self.constants = None if constants is None else tuple(int(c) for c in constants)

    def __len__(self) -> int:
        return self._cl.n

    def __contains__(self, pair) -> bool:
        return self.index(pair) is not None

    def index(self, pair) -> int | None:
        a, b = pair
        size = self._cl.size
        if not (0 <= a < size and 0 <= b < size):
            return None
        return self._cl.find((a, b))

    def pair_at(self, i: int) -> Pair:
        a, b = self._cl.rows[i]
        return int(a), int(b)

    def pairs(self) -> list[Pair]:
        return [self.pair_at(i) for i in range(self._cl.n)]

    def _record(self, i: int):
        kind, data = self._cl.parents[i]
        if kind != "gen":
            return OpStep(kind, tuple(self.pair_at(c) for c in data))
        tag = data[0]
        if tag == "g":
            return Generator(data[1])
        if tag == "s":
            return Symmetry(self.gens[data[1]])
        if tag == "d":
            return Diagonal(int(data[1]))
        return TransStep(self.pair_at(data[1]), self.pair_at(data[2]))

    def record(self, pair):
        i = self.index(pair)
        if i is None:
            raise KeyError(f"pair {pair} was not derived")
        return self._record(i)

    def replay(self, alg: FiniteAlgebra, pair) -> Pair:
        """Recompute ``pair`` from its record and the pairs it cites."""
        rec = self.record(pair)
        if isinstance(rec, Generator):
            return self.gens[rec.index]
        if isinstance(rec, Symmetry):
            if rec.pair not in self:
                raise KeyError("symmetry record cites an underived pair")
            return rec.pair[1], rec.pair[0]
        if isinstance(rec, Diagonal):
            return rec.element, rec.element
        if isinstance(rec, TransStep):
            if rec.left[1] != rec.right[0]:
                raise ValueError("transitivity step does not chain")
            return rec.left[0], rec.right[1]
        op = alg.ops[rec.op]
        firsts = [c[0] for c in rec.children]
        seconds = [c[1] for c in rec.children]
        return (
            int(op.table[encode(firsts, alg.size)]),
            int(op.table[encode(seconds, alg.size)]),
        )

    def is_acyclic(self) -> bool:
        for i in range(self._cl.n):
            kind, data = self._cl.parents[i]
            cited = data if kind != "gen" else (data[1:] if data[0] == "t" else ())
            if any(c >= i for c in cited):
                return False
        return True

    @property
    def closure(self) -> Closure:
        return self._cl


def _check_pairs(alg: FiniteAlgebra, gens: Iterable) -> list[Pair]:
    out = []
    for g in gens:
        a, b = (int(x) for x in g)
        if not (0 <= a < alg.size and 0 <= b < alg.size):
            raise ElementOutOfRange(f"pair ({a}, {b}) outside 0..{alg.size - 1}")
        out.append((a, b))
    return out


def _seed(alg: FiniteAlgebra, gens, constants, limits) -> Closure:
    cl = Closure(alg, 2, limits)
    if gens:
        cl.add(gens, [("g", i) for i in range(len(gens))])
        cl.add([(b, a) for a, b in gens], [("s", i) for i in range(len(gens))])
    consts = range(alg.size) if constants is None else constants
    cl.add([(c, c) for c in consts], [("d", c) for c in consts])
    return cl


def _to_rel(size: int, cl: Closure) -> BinRel:
    m = np.zeros((size, size), dtype=bool)
    rows = cl.rows.astype(np.int64)
    m[rows[:, 0], rows[:, 1]] = True
    return BinRel(size, m)


def gen_tolerance(
    alg: FiniteAlgebra,
    gens: Iterable[Pair],
    constants: Sequence[int] | None = None,
    limits: Limits | None = None,
    *,
    _stop_size: int | None = None,
) -> tuple[BinRel, DerivationDAG]:
    """Smallest tolerance containing ``gens``.

    ``constants`` must generate ``alg``; it defaults to the whole universe.
    It only affects the derivation records (and hence witness terms), never
    the relation itself.
    """
    gens = _check_pairs(alg, gens)
    if constants is not None:
        constants = [int(c) for c in constants]
        if any(not 0 <= c < alg.size for c in constants):
            raise ElementOutOfRange("constant outside the universe")
    cl = _seed(alg, gens, constants, limits)
    cl.run(stop_size=_stop_size)
    if constants is not None and _stop_size is None:
        diag = cl.rows[:, 0] == cl.rows[:, 1]
        if int(diag.sum()) != alg.size:
            raise AlgebraError("the given constants do not generate the algebra")
    return _to_rel(alg.size, cl), DerivationDAG(cl, gens, constants)


def gen_congruence(
    alg: FiniteAlgebra, gens: Iterable[Pair], limits: Limits | None = None
) -> tuple[BinRel, DerivationDAG]:
    """Smallest congruence containing ``gens``.

    Alternates a full compatible closure with one transitive-closure sweep
    until neither adds a pair.
    """
    gens = _check_pairs(alg, gens)
    cl = _seed(alg, gens, None, limits)
    while True:
        cl.run()
        rel = _to_rel(alg.size, cl)
        m = rel.matrix
        comp = (m.astype(np.float32) @ m.astype(np.float32)) > 0
        new = np.argwhere(comp & ~m)
        if not len(new):
            return rel, DerivationDAG(cl, gens, None)
        rows, labels = [], []
        for a, c in new:
            b = int(np.argmax(m[a] & m[:, c]))
            rows.append((a, c))
            labels.append(("t", cl.find((a, b)), cl.find((b, c))))
        cl.add(rows, labels)


def tolerance_witness(
    alg: FiniteAlgebra,
    gens: Sequence[Pair],
    dag: DerivationDAG,
    target: Pair,
    constants: Sequence[int] | None = None,
) -> Term:
    """Term h with ``h(a_i, b_i; c_j) = d`` and ``h(b_i, a_i; c_j) = e``.

    Variable ``2i`` holds ``a_i``, ``2i+1`` holds ``b_i`` and ``2g+j`` holds
    the constant ``c_j`` (the whole universe when ``constants`` is None).
    The term is checked by evaluation in both orientations before returning.
    """
    gens = _check_pairs(alg, gens)
    consts = None if constants is None else tuple(int(c) for c in constants)
    if tuple(gens) != dag.gens or consts != dag.constants:
        raise ValueError("derivation was built from different generators or constants")
    idx = dag.index(target)
    if idx is None:
        raise PairNotInTolerance(f"{tuple(target)} is not in the generated tolerance")
    g = len(gens)
    c_list = list(range(alg.size)) if consts is None else list(consts)
    slot_of_const = {}
    for j, c in enumerate(c_list):
        slot_of_const.setdefault(c, 2 * g + j)

    def leaf(label) -> Term:
        tag = label[0]
        if tag == "g":
            return Var(2 * label[1])
        if tag == "s":
            return Var(2 * label[1] + 1)
        if tag == "d":
            return Var(slot_of_const[label[1]])
        raise ValueError("a congruence derivation has no tolerance witness")

    h = dag.closure.term(idx, leaf)
    env1 = [x for a, b in gens for x in (a, b)] + c_list
    env2 = [x for a, b in gens for x in (b, a)] + c_list
    d, e = int(target[0]), int(target[1])
    if eval_term(alg, h, env1) != d or eval_term(alg, h, env2) != e:
        raise AssertionError("extracted witness failed re-evaluation")
    return h


# -- homomorphisms ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Homomorphism:
    source: FiniteAlgebra
    target: FiniteAlgebra
    map: np.ndarray

    def __post_init__(self):
        mp = np.asarray(self.map, dtype=np.int64).reshape(-1)
        mp.setflags(write=False)
        object.__setattr__(self, "map", mp)
        src, tgt = self.source, self.target
        if mp.shape != (src.size,):
            raise AlgebraError("map must send every source element somewhere")
        if mp.min() < 0 or mp.max() >= tgt.size:
            raise ElementOutOfRange("map value outside the target universe")
        if src.arities != tgt.arities:
            raise AlgebraError("source and target have different signatures")
        for op_s, op_t in zip(src.ops, tgt.ops):
            tuples = all_tuples(src.size, op_s.arity)
            idx = np.zeros(len(tuples), dtype=np.int64)
            for j in range(op_s.arity):
                idx = idx * tgt.size + mp[tuples[:, j]]
            if not np.array_equal(op_t.table[idx], mp[op_s.table]):
                raise AlgebraError(f"map does not preserve {op_s.name}")

    @property
    def surjective(self) -> bool:
        return len(np.unique(self.map)) == self.target.size


def rel_image(h: Homomorphism, r: BinRel) -> BinRel:
    if r.size != h.source.size:
        raise AlgebraError("relation does not live on the source algebra")
    m = np.zeros((h.target.size, h.target.size), dtype=bool)
    a, b = np.nonzero(r.matrix)
    m[h.map[a], h.map[b]] = True
    return BinRel(h.target.size, m)


def quotient(alg: FiniteAlgebra, theta: BinRel) -> tuple[FiniteAlgebra, Homomorphism]:
    """The quotient algebra by a congruence and the natural surjection."""
    if not classify(alg, theta).congruence:
        raise AlgebraError("can only factor by a congruence")
    labels = np.full(alg.size, -1, dtype=np.int64)
    reps = []
    for a in range(alg.size):
        if labels[a] < 0:
            labels[theta.matrix[a]] = len(reps)
            reps.append(a)
    k = len(reps)
    reps_arr = np.array(reps, dtype=np.int64)
    ops = []
    for op in alg.ops:
        tuples = all_tuples(k, op.arity)
        idx = np.zeros(len(tuples), dtype=np.int64)
        for j in range(op.arity):
            idx = idx * alg.size + reps_arr[tuples[:, j]]
        ops.append((op.name, op.arity, labels[op.table[idx]]))
    q = validate_algebra(k, ops)
    return q, Homomorphism(alg, q, labels)
