"""Concrete algebras used as fixtures, each with checkable expected properties."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import FiniteAlgebra, all_tuples, is_idempotent, validate_algebra
from .exceptions import ResourceExceeded
from .freealg import identity_holds
from .limits import Limits, check_table
from .malcev import (
    IdentitySystem,
    check_mn,
    find_majority_term,
    find_malcev_term,
    majority_system,
    permutability_degree,
)
from .relations import BinRel, classify
from .terms import App, Term, Var
from .tolim import refute_tolim


@dataclass(frozen=True)
class Claim:
    """One expected property; ``check`` returns True when it holds."""

    label: str
    check: Callable[["NamedFixture"], bool] = field(repr=False, compare=False)


@dataclass(frozen=True, eq=False)
class NamedFixture:
    name: str
    algebra: FiniteAlgebra
    relation: BinRel | None = None
    relation_name: str | None = None
    terms: dict[str, Term] = field(default_factory=dict)
    manifest: tuple[Claim, ...] = ()

    def verify(self) -> list[tuple[str, bool]]:
        return [(c.label, bool(c.check(self))) for c in self.manifest]


def _table(size: int, arity: int, rule: Callable[[tuple[int, ...]], int]) -> np.ndarray:
    return np.array([rule(tuple(int(v) for v in t)) for t in all_tuples(size, arity)], dtype=np.int64)


def _mn(n: int, holds: bool) -> Claim:
    word = "holds" if holds else "fails"
    return Claim(f"M({n}) {word}", lambda fx: check_mn(fx.algebra, n).holds == holds)


def _degree(expected: int | None, max_n: int = 6) -> Claim:
    def check(fx):
        res = permutability_degree(fx.algebra, max_n)
        return (res.degree if res else None) == expected

    label = f"permutability degree {expected}" if expected else f"no HM chain up to {max_n}"
    return Claim(label, check)


def _majority(exists: bool) -> Claim:
    label = "majority term exists" if exists else "no majority term"
    return Claim(label, lambda fx: (find_majority_term(fx.algebra) is not None) == exists)


# -- the 3-element algebra with a non-image tolerance ---------------------------------

def _p5_f(t):
    if t in ((1, 1, 1, 1), (1, 0, 0, 2)):
        return 1
    return 2 if t == (2, 2, 2, 2) else 0


def _p5_g(t):
    if t in ((2, 2, 2, 2), (1, 0, 0, 2)):
        return 2
    return 1 if t == (1, 1, 1, 1) else 0


def _p5_m(t):
    if len(set(t)) == 3:
        return 0
    return max(set(t), key=t.count)


def prop5_algebra() -> FiniteAlgebra:
    return validate_algebra(
        3,
        [
            ("f", 4, _table(3, 4, _p5_f)),
            ("g", 4, _table(3, 4, _p5_g)),
            ("m", 3, _table(3, 3, _p5_m)),
        ],
    )


def prop5() -> NamedFixture:
    alg = prop5_algebra()
    tau = BinRel.from_pairs(3, [(a, b) for a in range(3) for b in range(3) if {a, b} != {1, 2}])
    x = [Var(i) for i in range(4)]
    f, g = App(0, tuple(x)), App(1, tuple(x))

    def m_is_majority(fx):
        return majority_system().satisfied_by(fx.algebra, App(2, (Var(0), Var(1), Var(2))))

    def diagonal_identity(fx):
        a, b = Var(0), Var(1)
        return identity_holds(fx.algebra, App(0, (a, a, b, b)), App(1, (a, a, b, b)), 2)

    def refutation(fx):
        r = refute_tolim(fx.algebra, fx.relation, 2)
        return (
            r is not None
            and r.verify(fx.algebra, fx.relation)
            and r.assignment == ((1, 0), (0, 2))
            and r.image == (1, 2)
        )

    manifest = (
        Claim("tau is a tolerance", lambda fx: classify(fx.algebra, fx.relation).tolerance),
        Claim("tau is not a congruence", lambda fx: not classify(fx.algebra, fx.relation).congruence),
        Claim("all operations are idempotent", lambda fx: is_idempotent(fx.algebra)),
        Claim("m is a majority operation", m_is_majority),
        Claim("f(x,x,y,y) = g(x,x,y,y)", diagonal_identity),
        _mn(2, False),
        Claim("refutation at n=2: (1,0),(0,2) -> (1,2)", refutation),
    )
    return NamedFixture("prop5", alg, tau, "tau", {"f": f, "g": g}, manifest)


# -- algebras separating M(n) from M(n+1) ------------------------------------------------

def separating_algebra(n: int = 1, allow_large: bool = False, limits: Limits | None = None) -> NamedFixture:
    """Size 2n+3 with two (2n+2)-ary operations: M(n) holds, M(n+1) fails.

    f (resp. g) returns 1 (resp. 2) when its arguments cover exactly
    {1, ..., 2n+2} and 0 otherwise.  n >= 2 needs ``allow_large``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > 1 and not allow_large:
        raise ResourceExceeded(f"separating_algebra({n}) is large; pass allow_large=True")
    size, arity = 2 * n + 3, 2 * n + 2
    check_table(size**arity, limits, "separating algebra table")
    pts = all_tuples(size, arity)
    present = np.zeros((len(pts), size), dtype=bool)
    np.put_along_axis(present, pts, True, axis=1)
    covers = present[:, 1:].all(axis=1) & ~present[:, 0]
    alg = validate_algebra(
        size,
        [("f", arity, np.where(covers, 1, 0)), ("g", arity, np.where(covers, 2, 0))],
        limits,
    )
    manifest = (_mn(n, True), _mn(n + 1, False)) if n == 1 else ()
    return NamedFixture(f"separating{n}", alg, manifest=manifest)


# -- small standard algebras ----------------------------------------------------------------

def semilattice2() -> NamedFixture:
    alg = validate_algebra(2, [("meet", 2, [0, 0, 0, 1])])
    manifest = (_majority(False), _degree(None), _mn(1, True), _mn(2, True))
    return NamedFixture("semilattice2", alg, manifest=manifest)


def lattice2() -> NamedFixture:
    alg = validate_algebra(2, [("meet", 2, [0, 0, 0, 1]), ("join", 2, [0, 1, 1, 1])])
    manifest = (_majority(True), _mn(1, True), _mn(2, True))
    return NamedFixture("lattice2", alg, manifest=manifest)


def implication2() -> NamedFixture:
    alg = validate_algebra(2, [("imp", 2, [1, 1, 0, 1])])
    manifest = (
        Claim("no Mal'cev term", lambda fx: find_malcev_term(fx.algebra) is None),
        _degree(3),
        _mn(2, False),
    )
    return NamedFixture("implication2", alg, manifest=manifest)


def z2affine() -> NamedFixture:
    alg = validate_algebra(2, [("p", 3, _table(2, 3, lambda t: t[0] ^ t[1] ^ t[2]))])
    manifest = (
        Claim("Mal'cev term exists", lambda fx: find_malcev_term(fx.algebra) is not None),
        _degree(2),
        _mn(1, True),
        _mn(2, True),
    )
    return NamedFixture("z2affine", alg, manifest=manifest)


# 0 < 1 < 2 < 4 and 0 < 3 < 4
_N5_ORDER = {(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 4), (2, 4), (3, 4)}


def _n5_leq(a: int, b: int) -> bool:
    return a == b or (a, b) in _N5_ORDER


def n5() -> NamedFixture:
    els = range(5)

    def meet(t):
        lower = [c for c in els if _n5_leq(c, t[0]) and _n5_leq(c, t[1])]
        return next(c for c in lower if all(_n5_leq(d, c) for d in lower))

    def join(t):
        upper = [c for c in els if _n5_leq(t[0], c) and _n5_leq(t[1], c)]
        return next(c for c in upper if all(_n5_leq(c, d) for d in upper))

    alg = validate_algebra(5, [("meet", 2, _table(5, 2, meet)), ("join", 2, _table(5, 2, join))])
    manifest = (_majority(True), _mn(1, True))
    return NamedFixture("n5", alg, manifest=manifest)


def standard_fixtures() -> list[NamedFixture]:
    return [semilattice2(), lattice2(), implication2(), z2affine(), n5()]


def all_fixtures() -> list[NamedFixture]:
    return [prop5(), separating_algebra(1)] + standard_fixtures()


def fixture_by_name(name: str) -> NamedFixture:
    for fx in all_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(f"no fixture named {name!r}")


__all__ = [
    "Claim",
    "NamedFixture",
    "prop5",
    "prop5_algebra",
    "separating_algebra",
    "semilattice2",
    "lattice2",
    "implication2",
    "z2affine",
    "n5",
    "standard_fixtures",
    "all_fixtures",
    "fixture_by_name",
    "IdentitySystem",
]
