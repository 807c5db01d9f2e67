"""Refuting and boundedly checking the tolerance-image property.

If a tolerance tau of A were the image of a congruence, then for every pair
(f, g) agreeing on the diagonal and every choice of pairs (a_i, b_i) from tau,
the pair (f(a_i, b_i), g(a_i, b_i)) would lie in tau again.  `refute_tolim`
searches for a choice that escapes tau.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from .algebra import FiniteAlgebra
from .exceptions import NotATolerance
from .freealg import explore_free_algebra, identity_holds
from .limits import Limits, check_table, default_limits
from .malcev import MnStatus, MnVerdict, check_mn, first_escape
from .relations import BinRel, classify
from .terms import Term, Var, eval_term, substitute

Pair = tuple[int, int]


@dataclass(frozen=True)
class Refutation:
    """Evidence that ``tau`` is not the image of a congruence within V(A)."""

    n: int
    f: Term
    g: Term
    assignment: tuple[Pair, ...]
    image: Pair

    def verify(self, alg: FiniteAlgebra, tau: BinRel) -> bool:
        """Recheck by plain evaluation: diagonal identity, pairs in tau, image outside."""
        diag = [Var(i) for i in range(self.n) for _ in (0, 1)]
        if not identity_holds(alg, substitute(self.f, diag), substitute(self.g, diag), max(self.n, 1)):
            return False
        if not all(p in tau for p in self.assignment):
            return False
        env = [v for p in self.assignment for v in p]
        image = (eval_term(alg, self.f, env), eval_term(alg, self.g, env))
        return image == tuple(self.image) and image not in tau


def refute_tolim(
    alg: FiniteAlgebra, tau: BinRel, n: int, limits: Limits | None = None
) -> Refutation | None:
    """First (pair, assignment) at level n whose image leaves ``tau``.

    Pairs (f, g) come from F(2n) in the order of `candidate_pairs`; for each,
    assignments run over n-tuples of tau's pairs in lexicographic order
    (tau's pairs themselves sorted).  Pairs inside the tolerance generated
    by the (x_i, y_i) never escape, so every hit is an M(n) counterexample.
    None means no refutation at this n, which proves nothing.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not classify(alg, tau).tolerance:
        raise NotATolerance("the relation is not a tolerance of the algebra")
    limits = limits or default_limits()
    check_table(alg.size ** (2 * n), limits, f"A^{2 * n}")
    F = explore_free_algebra(alg, 2 * n, limits, max_layers=0)
    seen = 0
    while True:
        esc = first_escape(F, n, [tau], limits, start=seen)
        if esc is not None:
            break
        seen = len(F)
        if F.complete or not F.grow():
            return None
    i, j = esc.pair
    return Refutation(n, F.term(i), F.term(j), esc.assignment, esc.image)


@dataclass(frozen=True)
class LevelResult:
    n: int
    status: MnStatus
    implied: bool = False
    verdict: MnVerdict | None = field(default=None, compare=False)


@dataclass(frozen=True)
class TolImReport:
    n_max: int
    levels: tuple[LevelResult, ...]

    @property
    def first_failure(self) -> int | None:
        for lv in self.levels:
            if lv.status is MnStatus.FAILS:
                return lv.n
        return None

    @property
    def bounded_evidence(self) -> bool:
        """True when every level held: support up to n_max, never a proof."""
        return self.first_failure is None

    @property
    def summary(self) -> str:
        fail = self.first_failure
        if fail is None:
            return (
                f"all hold up to n = {self.n_max} (bounded evidence only: "
                "no finite set of levels decides the property)"
            )
        return f"M({fail}) fails, so every M(n) with n >= {fail} fails and the property fails"


def check_tolim_up_to(
    alg: FiniteAlgebra, n_max: int, limits: Limits | None = None
) -> TolImReport:
    """Run `check_mn` for n = 1..n_max.

    M(n+1) implies M(n), so once a level fails the remaining levels are
    recorded as failing without being computed (``implied=True``).
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    levels = []
    failed = False
    for n in range(1, n_max + 1):
        if failed:
            levels.append(LevelResult(n, MnStatus.FAILS, implied=True))
            continue
        v = check_mn(alg, n, limits=limits)
        levels.append(LevelResult(n, v.status, verdict=v))
        failed = not v.holds
    return TolImReport(n_max, tuple(levels))


__all__ = ["Refutation", "refute_tolim", "LevelResult", "TolImReport", "check_tolim_up_to"]
