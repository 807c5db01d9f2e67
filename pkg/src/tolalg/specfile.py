"""Plain-text algebra files.

Example::

    # three-element algebra
    size 3
    op m 3 rows
      0 0 : 0 0 0
      0 1 : 0 1 0
      ...
    op c 1
      1 2 0
    rel tau 0,0 0,1 1,0 1,1 2,2
    term t = (m x0 (c x1) x1)

``op NAME ARITY`` is followed by indented lines holding the whole table in
row-major order.  With ``rows`` each indented line is ``PREFIX : ROW``: the
first ARITY-1 arguments, then the values for the last argument running
over 0..size-1.  ``rel`` lists pairs ``a,b`` (indented continuation lines
allowed).  ``term`` takes a prefix-notation term over the operations, with
variables ``x0, x1, ...``.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import FiniteAlgebra, all_tuples, validate_algebra
from .exceptions import AlgebraError, ArityMismatch, TolalgError
from .limits import Limits
from .relations import BinRel
from .terms import Term, TermSyntaxError, UnknownSymbol, format_term, parse_term

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_VARNAME = re.compile(r"x\d+")
_WORD = re.compile(r"\S+")


class SpecError(TolalgError, ValueError):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class SpecSyntaxError(SpecError):
    """Malformed text."""


class SpecSemanticError(SpecError):
    """Well-formed text describing an invalid algebra, relation or term."""


@dataclass
class AlgebraSpec:
    algebra: FiniteAlgebra
    relations: dict[str, BinRel] = field(default_factory=dict)
    terms: dict[str, Term] = field(default_factory=dict)


@dataclass
class _Block:
    kind: str
    name: str
    line: int
    arity: int = 0
    rows: bool = False
    values: list[int] = field(default_factory=list)
    row_map: dict[tuple[int, ...], list[int]] = field(default_factory=dict)
    pairs: list[tuple[int, int]] = field(default_factory=list)


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in _WORD.finditer(line)]


def _int(tok: str, line: int, col: int) -> int:
    if not re.fullmatch(r"\d+", tok):
        raise SpecSyntaxError(f"expected a non-negative integer, got {tok!r}", line, col)
    return int(tok)


class _Parser:
    def __init__(self, limits: Limits | None):
        self.limits = limits
        self.size: int | None = None
        self.ops: list[tuple[str, int, np.ndarray]] = []
        self.op_names: set[str] = set()
        self.relations: dict[str, BinRel] = {}
        self.term_src: list[tuple[str, str, int, int]] = []
        self.block: _Block | None = None

    def element(self, tok: str, line: int, col: int) -> int:
        v = _int(tok, line, col)
        if v >= self.size:
            raise SpecSemanticError(f"element {v} outside 0..{self.size - 1}", line, col)
        return v

    def need_size(self, line: int, col: int):
        if self.size is None:
            raise SpecSemanticError("'size' must come before operations and relations", line, col)

    def name(self, tok: str | None, line: int, col: int, taken: set[str], what: str) -> str:
        if tok is None:
            raise SpecSyntaxError(f"missing {what} name", line, col)
        if not _NAME.fullmatch(tok) or _VARNAME.fullmatch(tok):
            raise SpecSyntaxError(f"invalid {what} name {tok!r}", line, col)
        if tok in taken:
            raise SpecSemanticError(f"{what} {tok!r} defined twice", line, col)
        return tok

    def feed(self, raw: str, lineno: int):
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            return
        toks = _tokens(text)
        if text[0].isspace():
            if self.block is None:
                raise SpecSyntaxError("indented line outside an 'op' or 'rel' block", lineno, toks[0][1])
            self.continue_block(toks, lineno)
            return
        self.finish_block()
        head, col = toks[0]
        rest = toks[1:]
        if head == "size":
            self.directive_size(rest, lineno, col)
        elif head == "op":
            self.directive_op(rest, lineno, col)
        elif head == "rel":
            self.directive_rel(rest, lineno, col)
        elif head == "term":
            self.directive_term(text, rest, lineno, col)
        else:
            raise SpecSyntaxError(f"unknown directive {head!r}", lineno, col)

    def directive_size(self, rest, lineno, col):
        if self.size is not None:
            raise SpecSemanticError("'size' given twice", lineno, col)
        if len(rest) != 1:
            raise SpecSyntaxError("expected 'size N'", lineno, col)
        n = _int(rest[0][0], lineno, rest[0][1])
        if n < 1:
            raise SpecSemanticError("size must be at least 1", lineno, rest[0][1])
        self.size = n

    def directive_op(self, rest, lineno, col):
        self.need_size(lineno, col)
        name_tok = rest[0] if rest else (None, col + 3)
        name = self.name(name_tok[0], lineno, name_tok[1], self.op_names, "operation")
        if len(rest) < 2:
            raise SpecSyntaxError("expected 'op NAME ARITY [rows]'", lineno, col)
        arity = _int(rest[1][0], lineno, rest[1][1])
        rows = False
        if len(rest) == 3 and rest[2][0] == "rows":
            rows = True
            if arity == 0:
                raise SpecSemanticError("a nullary operation has no rows", lineno, rest[2][1])
        elif len(rest) > 2:
            raise SpecSyntaxError(f"unexpected {rest[2][0]!r}", lineno, rest[2][1])
        self.op_names.add(name)
        self.block = _Block("op", name, lineno, arity=arity, rows=rows)

    def directive_rel(self, rest, lineno, col):
        self.need_size(lineno, col)
        name_tok = rest[0] if rest else (None, col + 4)
        name = self.name(name_tok[0], lineno, name_tok[1], set(self.relations), "relation")
        self.block = _Block("rel", name, lineno)
        self.rel_pairs(rest[1:], lineno)

    def directive_term(self, text, rest, lineno, col):
        name_tok = rest[0] if rest else (None, col + 5)
        name = self.name(name_tok[0], lineno, name_tok[1], {t[0] for t in self.term_src}, "term")
        if len(rest) < 3 or rest[1][0] != "=":
            raise SpecSyntaxError("expected 'term NAME = TERM'", lineno, col)
        start = rest[2][1]
        self.term_src.append((name, text[start - 1 :], lineno, start))

    def rel_pairs(self, toks, lineno):
        for tok, col in toks:
            m = re.fullmatch(r"(\d+),(\d+)", tok)
            if not m:
                raise SpecSyntaxError(f"expected a pair 'a,b', got {tok!r}", lineno, col)
            a = self.element(m.group(1), lineno, col)
            b = self.element(m.group(2), lineno, col + len(m.group(1)) + 1)
            self.block.pairs.append((a, b))

    def continue_block(self, toks, lineno):
        b = self.block
        if b.kind == "rel":
            self.rel_pairs(toks, lineno)
        elif not b.rows:
            b.values.extend(self.element(t, lineno, c) for t, c in toks)
        else:
            colon = [i for i, (t, _) in enumerate(toks) if t == ":"]
            if len(colon) != 1:
                raise SpecSyntaxError("a row needs the form 'PREFIX : VALUES'", lineno, toks[0][1])
            k = colon[0]
            if k != b.arity - 1:
                raise SpecSemanticError(
                    f"row prefix has {k} entries, expected {b.arity - 1}", lineno, toks[0][1]
                )
            prefix = tuple(self.element(t, lineno, c) for t, c in toks[:k])
            vals = [self.element(t, lineno, c) for t, c in toks[k + 1 :]]
            if len(vals) != self.size:
                raise SpecSemanticError(
                    f"row has {len(vals)} values, expected {self.size}", lineno, toks[k][1]
                )
            if prefix in b.row_map:
                raise SpecSemanticError(f"row {prefix} given twice", lineno, toks[0][1])
            b.row_map[prefix] = vals

    def finish_block(self):
        b, self.block = self.block, None
        if b is None:
            return
        if b.kind == "rel":
            self.relations[b.name] = BinRel.from_pairs(self.size, b.pairs)
            return
        expected = self.size**b.arity
        if b.rows:
            prefixes = [tuple(int(v) for v in t) for t in all_tuples(self.size, b.arity - 1)]
            missing = [p for p in prefixes if p not in b.row_map]
            if missing:
                raise SpecSemanticError(f"operation {b.name!r}: row {missing[0]} missing", b.line)
            table = np.array([v for p in prefixes for v in b.row_map[p]], dtype=np.int64)
        else:
            if len(b.values) != expected:
                raise SpecSemanticError(
                    f"operation {b.name!r}: table has {len(b.values)} entries, expected {expected}",
                    b.line,
                )
            table = np.array(b.values, dtype=np.int64)
        self.ops.append((b.name, b.arity, table))

    def result(self) -> AlgebraSpec:
        self.finish_block()
        if self.size is None:
            raise SpecSemanticError("missing 'size'", 1)
        try:
            alg = validate_algebra(self.size, self.ops, self.limits)
        except AlgebraError as e:
            raise SpecSemanticError(str(e), 1) from e
        terms = {}
        for name, src, lineno, col in self.term_src:
            try:
                terms[name] = parse_term(src, alg)
            except UnknownSymbol as e:
                raise SpecSemanticError(e.message, lineno, col + e.col - 1) from e
            except TermSyntaxError as e:
                raise SpecSyntaxError(e.message, lineno, col + e.col - 1) from e
            except ArityMismatch as e:
                raise SpecSemanticError(e.message, lineno, col + e.col - 1) from e
        return AlgebraSpec(alg, dict(self.relations), terms)


def parse_algebra_spec(text: str, limits: Limits | None = None) -> AlgebraSpec:
    """Parse an algebra file; errors carry 1-based line and column."""
    p = _Parser(limits)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        p.feed(raw, lineno)
    return p.result()


def load_spec(path: str | Path, limits: Limits | None = None) -> AlgebraSpec:
    return parse_algebra_spec(Path(path).read_text(encoding="utf-8"), limits)


def serialize_spec(
    alg: FiniteAlgebra,
    relations: dict[str, BinRel] | None = None,
    terms: dict[str, Term] | None = None,
    comment: str | None = None,
) -> str:
    """Text that `parse_algebra_spec` reads back to the same algebra.

    Operations of arity two or more are written row by row.
    """
    out = []
    if comment:
        out += [f"# {line}" for line in comment.splitlines()]
    out.append(f"size {alg.size}")
    s = alg.size
    for op in alg.ops:
        if op.arity < 2:
            out.append(f"op {op.name} {op.arity}")
            out.append("  " + " ".join(str(int(v)) for v in op.table))
            continue
        out.append(f"op {op.name} {op.arity} rows")
        table = op.table.reshape(-1, s)
        for prefix, row in zip(all_tuples(s, op.arity - 1), table):
            out.append(
                "  " + " ".join(str(int(v)) for v in prefix) + " : " + " ".join(str(int(v)) for v in row)
            )
    for name, rel in (relations or {}).items():
        out.append(f"rel {name} " + " ".join(f"{a},{b}" for a, b in rel.pairs()))
    for name, t in (terms or {}).items():
        out.append(f"term {name} = {format_term(t, alg)}")
    return "\n".join(out) + "\n"


__all__ = [
    "AlgebraSpec",
    "SpecError",
    "SpecSyntaxError",
    "SpecSemanticError",
    "parse_algebra_spec",
    "load_spec",
    "serialize_spec",
]
