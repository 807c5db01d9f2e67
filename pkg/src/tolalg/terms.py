"""Terms over an algebra's signature and their evaluation.

Terms are immutable trees.  ``App.op`` is an index into ``alg.ops``; the
printed form uses prefix notation such as ``(m x0 x1 x2)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .algebra import FiniteAlgebra, all_tuples
from .exceptions import (
    ArityMismatch,
    ElementOutOfRange,
    UnboundVariable,
    VariableOutOfArity,
)
from .limits import Limits, check_table


@dataclass(frozen=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise VariableOutOfArity(f"negative variable index {self.index}")


@dataclass(frozen=True)
class App:
    op: int
    args: tuple = field(default=())

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))


Term = Union[Var, App]


def variables(t: Term) -> set[int]:
    out: set[int] = set()
    stack = [t]
    seen = set()
    while stack:
        s = stack.pop()
        if id(s) in seen:
            continue
        seen.add(id(s))
        if isinstance(s, Var):
            out.add(s.index)
        else:
            stack.extend(s.args)
    return out


def max_var(t: Term) -> int:
    vs = variables(t)
    return max(vs) if vs else -1


def depth(t: Term) -> int:
    if isinstance(t, Var):
        return 0
    return 1 + max((depth(a) for a in t.args), default=0)


def term_size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def substitute(t: Term, mapping: Sequence[Term] | Mapping[int, Term]) -> Term:
    """Replace each ``Var(i)`` by ``mapping[i]`` simultaneously."""
    memo: dict[int, Term] = {}

    def go(s: Term) -> Term:
        key = id(s)
        if key in memo:
            return memo[key]
        if isinstance(s, Var):
            try:
                out = mapping[s.index]
            except (IndexError, KeyError):
                raise UnboundVariable(f"no substitute for x{s.index}") from None
        else:
            out = App(s.op, tuple(go(a) for a in s.args))
        memo[key] = out
        return out

    return go(t)


def rename(t: Term, slots: Sequence[int] | Mapping[int, int]) -> Term:
    """Substitute variables by variables: ``Var(i) -> Var(slots[i])``."""
    if isinstance(slots, Mapping):
        return substitute(t, {k: Var(v) for k, v in slots.items()})
    return substitute(t, [Var(v) for v in slots])


def check_term(alg: FiniteAlgebra, t: Term) -> None:
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, App):
            if not 0 <= s.op < len(alg.ops):
                raise ArityMismatch(f"operation index {s.op} not in signature")
            if len(s.args) != alg.ops[s.op].arity:
                raise ArityMismatch(
                    f"{alg.ops[s.op].name} takes {alg.ops[s.op].arity} "
                    f"arguments, got {len(s.args)}"
                )
            stack.extend(s.args)


def eval_term(alg: FiniteAlgebra, t: Term, env: Sequence[int] | Mapping[int, int]) -> int:
    memo: dict[int, int] = {}

    def go(s: Term) -> int:
        key = id(s)
        if key in memo:
            return memo[key]
        if isinstance(s, Var):
            try:
                val = env[s.index]
            except (IndexError, KeyError):
                raise UnboundVariable(f"x{s.index} is not assigned") from None
            if not 0 <= val < alg.size:
                raise ElementOutOfRange(f"x{s.index} = {val} outside the universe")
        else:
            op = alg.ops[s.op]
            if len(s.args) != op.arity:
                raise ArityMismatch(f"{op.name} takes {op.arity} arguments")
            idx = 0
            for a in s.args:
                idx = idx * alg.size + go(a)
            val = int(op.table[idx])
        memo[key] = val
        return val

    return go(t)


def eval_vectors(alg: FiniteAlgebra, t: Term, env: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate ``t`` pointwise, variable ``i`` ranging over the array ``env[i]``.

    All arrays in ``env`` must share one shape; the result has that shape.
    """
    memo: dict[int, np.ndarray] = {}
    shape = np.shape(env[0]) if len(env) else ()

    def go(s: Term) -> np.ndarray:
        key = id(s)
        if key in memo:
            return memo[key]
        if isinstance(s, Var):
            if s.index >= len(env):
                raise UnboundVariable(f"x{s.index} is not assigned")
            val = np.asarray(env[s.index], dtype=np.int64)
        else:
            op = alg.ops[s.op]
            if len(s.args) != op.arity:
                raise ArityMismatch(f"{op.name} takes {op.arity} arguments")
            if op.arity == 0:
                val = np.full(shape, op.table[0], dtype=np.int64)
            else:
                idx = go(s.args[0])
                for a in s.args[1:]:
                    idx = idx * alg.size + go(a)
                val = op.table[idx]
        memo[key] = val
        return val

    return go(t)


@dataclass(frozen=True, eq=False)
class TermFunction:
    """A k-ary term function: its value table over A^k plus a witness term."""

    arity: int
    table: np.ndarray
    witness: Term

    def __eq__(self, other):
        if not isinstance(other, TermFunction):
            return NotImplemented
        return self.arity == other.arity and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.arity, self.table.tobytes()))


def projection_columns(size: int, k: int, limits: Limits | None = None) -> list[np.ndarray]:
    check_table(size**k, limits, f"A^{k}")
    pts = all_tuples(size, k)
    return [pts[:, i].copy() for i in range(k)]


def term_function(
    alg: FiniteAlgebra, t: Term, k: int, limits: Limits | None = None
) -> TermFunction:
    if max_var(t) >= k:
        raise VariableOutOfArity(f"term uses x{max_var(t)} but arity is {k}")
    check_term(alg, t)
    cols = projection_columns(alg.size, k, limits)
    if k == 0:
        cols = [np.zeros(1, dtype=np.int64)]
    table = np.broadcast_to(eval_vectors(alg, t, cols), (alg.size**k,)).copy()
    table.setflags(write=False)
    return TermFunction(k, table, t)


# -- prefix notation ---------------------------------------------------------

def format_term(
    t: Term,
    alg: FiniteAlgebra | Sequence[str],
    var_name: Callable[[int], str] | None = None,
) -> str:
    names = alg.names if isinstance(alg, FiniteAlgebra) else list(alg)
    var_name = var_name or (lambda i: f"x{i}")

    def go(s: Term) -> str:
        if isinstance(s, Var):
            return var_name(s.index)
        if not s.args:
            return names[s.op]
        return "(" + " ".join([names[s.op]] + [go(a) for a in s.args]) + ")"

    return go(t)


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


class TermSyntaxError(ValueError):
    def __init__(self, message: str, col: int):
        super().__init__(f"column {col}: {message}")
        self.col = col
        self.message = message


class UnknownSymbol(TermSyntaxError):
    pass


def _arity_error(message: str, col: int) -> ArityMismatch:
    err = ArityMismatch(f"column {col}: {message}")
    err.col = col
    err.message = message
    return err


def parse_term(text: str, alg: FiniteAlgebra | Sequence[str], arities=None) -> Term:
    """Parse a prefix-notation term such as ``(f x0 (m x1 x1 x2) x3 x3)``.

    Variables are written ``x<k>``; a bare symbol names a constant (0-ary)
    operation.  Raises TermSyntaxError or ArityMismatch.
    """
    if isinstance(alg, FiniteAlgebra):
        names, arities = alg.names, alg.arities
    else:
        names = list(alg)
    lookup = {n: i for i, n in enumerate(names)}
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise TermSyntaxError("unexpected character", pos + 1)
        start = m.start(m.lastindex)
        tokens.append((m.group(m.lastindex), m.lastindex, start + 1))
        pos = m.end()
    tokens.append((None, 0, len(text) + 1))
    i = 0

    def atom(tok: str, col: int) -> Term:
        if re.fullmatch(r"x\d+", tok):
            return Var(int(tok[1:]))
        if tok in lookup:
            op = lookup[tok]
            if arities is not None and arities[op] != 0:
                raise _arity_error(f"{tok} takes {arities[op]} arguments, got 0", col)
            return App(op, ())
        raise UnknownSymbol(f"unknown symbol {tok!r}", col)

    def expr() -> Term:
        nonlocal i
        tok, kind, col = tokens[i]
        if kind == 0:
            raise TermSyntaxError("unexpected end of term", col)
        if kind == 2:
            raise TermSyntaxError("unexpected ')'", col)
        i += 1
        if kind == 3:
            return atom(tok, col)
        head, hkind, hcol = tokens[i]
        if hkind != 3:
            raise TermSyntaxError(f"expected an operation symbol, got {head!r}", hcol)
        if head not in lookup:
            raise UnknownSymbol(f"unknown operation symbol {head!r}", hcol)
        i += 1
        args = []
        while tokens[i][1] != 2:
            if tokens[i][1] == 0:
                raise TermSyntaxError("missing ')'", tokens[i][2])
            args.append(expr())
        i += 1
        op = lookup[head]
        if arities is not None and arities[op] != len(args):
            raise _arity_error(f"{head} takes {arities[op]} arguments, got {len(args)}", hcol)
        return App(op, tuple(args))

    out = expr()
    if tokens[i][1] != 0:
        raise TermSyntaxError("trailing input after term", tokens[i][2])
    return out
