"""Closed-form h terms for M(n) in particular varieties, and chain reduction.

Every builder here is purely syntactic.  Callers check the result with
`verify_mn_witness` (or the chain checks); nothing is trusted unverified.

Slot layout of a 4n-ary h: ``u_i = Var(2i)``, ``v_i = Var(2i+1)``,
``x_i = Var(2n+2i)``, ``y_i = Var(2n+2i+1)``.  The 2n-ary f and g use
``x_i = Var(2i)`` and ``y_i = Var(2i+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import FiniteAlgebra
from .exceptions import ChainInvalid, IncompatibleOccurrence, MnFails, NotFound, ShapeMismatch
from .malcev import find_h_witness, shift_to_x_block, verify_hm_chain
from .limits import Limits
from .terms import App, Term, Var, max_var, substitute, term_function, variables


def _u(i): return Var(2 * i)
def _v(i): return Var(2 * i + 1)
def _x(n, i): return Var(2 * n + 2 * i)
def _y(n, i): return Var(2 * n + 2 * i + 1)


def _binary(op: Term, a: Term, b: Term) -> Term:
    return substitute(op, [a, b])


def _arity_n(f: Term, g: Term, n: int | None) -> int:
    if n is None:
        n = max(max_var(f), max_var(g), 0) // 2 + 1
    if max_var(f) >= 2 * n or max_var(g) >= 2 * n:
        raise ValueError(f"terms use more than the {2 * n} variables of level {n}")
    return n


# -- lattices ----------------------------------------------------------------------

def h_lattice(f: Term, g: Term, n: int, meet: Term, join: Term) -> Term:
    """f(x_i ∧ u_i, y_i ∧ v_i) ∨ g(x_i ∧ v_i, y_i ∧ u_i).

    ``meet`` and ``join`` are binary terms over Var(0), Var(1).  Needs every
    operation to be monotone for the lattice order.
    """
    left, right = [], []
    for i in range(n):
        left += [_binary(meet, _x(n, i), _u(i)), _binary(meet, _y(n, i), _v(i))]
        right += [_binary(meet, _x(n, i), _v(i)), _binary(meet, _y(n, i), _u(i))]
    return _binary(join, substitute(f, left), substitute(g, right))


# -- semilattices ------------------------------------------------------------------

@dataclass(frozen=True)
class VarOccurrence:
    """Which of x_i, y_i occur in a semilattice term, for each i < n."""

    x: tuple[bool, ...]
    y: tuple[bool, ...]

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y flags must have the same length")
        if not (any(self.x) or any(self.y)):
            raise ValueError("a semilattice term contains at least one variable")

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def of_term(cls, t: Term, n: int) -> "VarOccurrence":
        vs = variables(t)
        return cls(tuple(2 * i in vs for i in range(n)), tuple(2 * i + 1 in vs for i in range(n)))


@dataclass(frozen=True)
class HOccurrence:
    """Which of u_i, v_i, x_i, y_i occur in h, for each i < n."""

    u: tuple[bool, ...]
    v: tuple[bool, ...]
    x: tuple[bool, ...]
    y: tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.x)

    def slots(self) -> list[int]:
        n = self.n
        out = []
        for i in range(n):
            out += [2 * i] if self.u[i] else []
            out += [2 * i + 1] if self.v[i] else []
        for i in range(n):
            out += [2 * n + 2 * i] if self.x[i] else []
            out += [2 * n + 2 * i + 1] if self.y[i] else []
        return out


# (f has x_i, f has y_i, g has x_i, g has y_i) -> (u_i, v_i, x_i, y_i)
SEMILATTICE_TABLE: dict[tuple[int, int, int, int], tuple[int, int, int, int]] = {
    (0, 0, 0, 0): (0, 0, 0, 0),
    (1, 0, 1, 0): (0, 0, 1, 0),
    (0, 1, 0, 1): (0, 0, 0, 1),
    (1, 0, 0, 1): (1, 0, 0, 0),
    (0, 1, 1, 0): (0, 1, 0, 0),
    (1, 1, 1, 1): (0, 0, 1, 1),
    (1, 1, 1, 0): (0, 1, 1, 0),
    (1, 1, 0, 1): (1, 0, 0, 1),
    (1, 0, 1, 1): (1, 0, 1, 0),
    (0, 1, 1, 1): (0, 1, 0, 1),
}


def h_semilattice(f_occ: VarOccurrence, g_occ: VarOccurrence) -> HOccurrence:
    """Variable set of h, chosen row by row for each i."""
    if f_occ.n != g_occ.n:
        raise IncompatibleOccurrence("f and g have different numbers of variable pairs")
    cols: list[list[bool]] = [[], [], [], []]
    for i in range(f_occ.n):
        key = (int(f_occ.x[i]), int(f_occ.y[i]), int(g_occ.x[i]), int(g_occ.y[i]))
        row = SEMILATTICE_TABLE.get(key)
        if row is None:
            raise IncompatibleOccurrence(
                f"pair {i}: f and g must both contain or both omit x{i}/y{i}"
            )
        for c, bit in zip(cols, row):
            c.append(bool(bit))
    return HOccurrence(*(tuple(c) for c in cols))


def semilattice_term(slots: Sequence[int], op: int = 0) -> Term:
    """Left-nested product of the given variables under binary operation ``op``."""
    if not slots:
        raise ValueError("a semilattice term needs at least one variable")
    t: Term = Var(slots[0])
    for s in slots[1:]:
        t = App(op, (t, Var(s)))
    return t


# -- absolutely free signatures ----------------------------------------------------

def distinguish_variables(t: Term) -> tuple[Term, list[int]]:
    """Linear term with leaves z_0, z_1, ... left to right, and the original leaves."""
    leaves: list[int] = []

    def go(s: Term) -> Term:
        if isinstance(s, Var):
            leaves.append(s.index)
            return Var(len(leaves) - 1)
        return App(s.op, tuple(go(a) for a in s.args))

    return go(t), leaves


def h_balanced(f: Term, g: Term, n: int | None = None) -> Term:
    """Substitute into the common linear shape of f and g, leaf by leaf.

    x/x -> x_i, y/y -> y_i, x/y -> u_i, y/x -> v_i.
    """
    n = _arity_n(f, g, n)
    shape_f, leaves_f = distinguish_variables(f)
    shape_g, leaves_g = distinguish_variables(g)
    if shape_f != shape_g:
        raise ShapeMismatch("f and g are not the same term after identifying y_i with x_i")
    image = []
    for a, b in zip(leaves_f, leaves_g):
        if a // 2 != b // 2:
            raise ShapeMismatch(f"leaf x{a} in f faces x{b} in g from another pair")
        i = a // 2
        image.append({(0, 0): _x(n, i), (1, 1): _y(n, i), (0, 1): _u(i), (1, 0): _v(i)}[(a % 2, b % 2)])
    return substitute(shape_f, image)


# -- unary algebras ----------------------------------------------------------------

def _essential_vars(table: np.ndarray, size: int, k: int) -> list[int]:
    t = table.reshape((size,) * k)
    return [v for v in range(k) if (t != np.take(t, [0], axis=v)).any()]


def _single_variable(t: Term, v: int) -> Term:
    return substitute(t, {w: Var(v) for w in variables(t)})


def h_unary(alg: FiniteAlgebra, f: Term, g: Term, n: int, limits: Limits | None = None) -> Term:
    """h for an algebra whose operations have arity at most one.

    Each side depends (semantically) on at most one variable.  When the
    two sides sit on different pairs, or are constant, both are the same
    constant and f itself works.  Otherwise the dependence pattern picks
    the slot for f's unary part.
    """
    if any(op.arity > 1 for op in alg.ops):
        raise ValueError("h_unary needs operations of arity at most one")
    k = 2 * n
    ft = term_function(alg, f, k, limits).table
    gt = term_function(alg, g, k, limits).table
    ef, eg = _essential_vars(ft, alg.size, k), _essential_vars(gt, alg.size, k)
    if len(ef) > 1 or len(eg) > 1:
        raise ValueError("a term of a unary algebra depends on at most one variable")
    if not ef or not eg or ef[0] // 2 != eg[0] // 2:
        return shift_to_x_block(f, n)
    j = ef[0] // 2
    slot = {(0, 0): _x(n, j), (0, 1): _u(j), (1, 0): _v(j), (1, 1): _y(n, j)}[(ef[0] % 2, eg[0] % 2)]
    return substitute(_single_variable(f, ef[0]), {ef[0]: slot})


# -- permutable varieties ----------------------------------------------------------

def h_malcev(p: Term, f: Term, g: Term, n: int) -> Term:
    """p(f(x_i, y_i), f(x_i, u_i), g(x_i, u_i)) for a Mal'cev term p."""
    xy, xu = [], []
    for i in range(n):
        xy += [_x(n, i), _y(n, i)]
        xu += [_x(n, i), _u(i)]
    return substitute(p, [substitute(f, xy), substitute(f, xu), substitute(g, xu)])


# -- from M(n+1) down to M(n) ------------------------------------------------------

def collapse_last_pair(n: int) -> list[Term]:
    """Substitution taking a level-(n+1) h to level n: pair n reuses pair n-1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = n + 1
    sub: list[Term] = [Var(0)] * (4 * m)
    for i in range(m):
        src = min(i, n - 1)
        sub[2 * i], sub[2 * i + 1] = _u(src), _v(src)
        sub[2 * m + 2 * i], sub[2 * m + 2 * i + 1] = _x(n, src), _y(n, src)
    return sub


def pad_mn_witness(h_big: Term, n: int) -> Term:
    """Level-n h from a level-(n+1) h found for f, g with x_n, y_n added as dummies."""
    if max_var(h_big) >= 4 * (n + 1):
        raise ValueError(f"h uses more than the {4 * (n + 1)} variables of level {n + 1}")
    return substitute(h_big, collapse_last_pair(n))


# -- Hagemann-Mitschke chains ------------------------------------------------------

def hm_reduce(alg: FiniteAlgebra, chain: Sequence[Term], limits: Limits | None = None) -> list[Term]:
    """Replace p_1, p_2 of a chain by one term p, using M(2).

    With f(x,u,v,y) = p_1(x,u,y) and g(x,u,v,y) = p_2(x,v,y), an 8-ary h
    for (f, g) gives p(a,b,c) = h(a,b,c,b,a,b,b,c), and p, p_3, ... is again
    a chain.  A chain of one term (a Mal'cev term) is returned as is.
    Raises MnFails when no h exists for this (f, g).
    """
    chain = list(chain)
    if not verify_hm_chain(alg, chain):
        raise ChainInvalid("input is not a valid chain on this algebra")
    if len(chain) == 1:
        return chain
    x, u, v, y = Var(0), Var(1), Var(2), Var(3)
    f = substitute(chain[0], [x, u, y])
    g = substitute(chain[1], [x, v, y])
    try:
        h = find_h_witness(alg, 2, f, g, limits)
    except NotFound as e:
        raise MnFails("M(2) fails for the pair built from p_1, p_2; the chain cannot shrink") from e
    a, b, c = Var(0), Var(1), Var(2)
    p = substitute(h, [a, b, c, b, a, b, b, c])
    out = [p] + chain[2:]
    if not verify_hm_chain(alg, out):
        raise AssertionError("reduced chain failed verification")
    return out


def reduce_to_malcev(alg: FiniteAlgebra, chain: Sequence[Term], limits: Limits | None = None) -> Term:
    """Iterate `hm_reduce` down to a single Mal'cev term."""
    chain = list(chain)
    while len(chain) > 1:
        chain = hm_reduce(alg, chain, limits)
    if not verify_hm_chain(alg, chain):
        raise ChainInvalid("input is not a valid chain on this algebra")
    return chain[0]


__all__ = [
    "h_lattice",
    "VarOccurrence",
    "HOccurrence",
    "SEMILATTICE_TABLE",
    "h_semilattice",
    "semilattice_term",
    "distinguish_variables",
    "h_balanced",
    "h_unary",
    "h_malcev",
    "collapse_last_pair",
    "pad_mn_witness",
    "hm_reduce",
    "reduce_to_malcev",
]
