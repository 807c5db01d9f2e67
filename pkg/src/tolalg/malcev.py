"""Deciding M(n) for V(A) and solving term conditions by subpower membership.

M(n) asks: whenever 2n-ary terms f, g agree after identifying y_i with x_i,
is there a 4n-ary h with

    f(x_i, y_i) = h(x_i, y_i ; x_i, y_i)
    g(x_i, y_i) = h(y_i, x_i ; x_i, y_i)   (i < n)?

On F = F(2n) the pairs (f, g) of the first kind form the congruence
generated by the pairs (x_i, y_i), and those admitting an h form the
tolerance generated by the same pairs.  So M(n) holds iff that congruence
lies inside that tolerance.

Term variables follow one layout throughout: f and g use ``x_i = Var(2i)``
and ``y_i = Var(2i+1)``; h uses ``u_i = Var(2i)``, ``v_i = Var(2i+1)``,
``x_i = Var(2n+2i)`` and ``y_i = Var(2n+2i+1)``.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Sequence

import numpy as np

from .algebra import FiniteAlgebra, encode
from .closure import Closure, subpower_member
from .exceptions import DiagonalIdentityFails, NotFound, ResourceExceeded, VariableOutOfArity
from .freealg import (
    FreeAlgebra,
    diagonal_classes,
    diagonal_pairs,
    diagonal_restriction,
    explore_free_algebra,
    identity_holds,
)
from .limits import Limits, WorkBudget, check_table, default_limits
from .relations import BinRel, gen_tolerance, small_tolerances, tolerance_witness
from .terms import Term, Var, check_term, eval_vectors, max_var, projection_columns, substitute, term_function

log = logging.getLogger(__name__)

Pair = tuple[int, int]


class MnStatus(Enum):
    HOLDS = "holds"
    FAILS = "fails"


@dataclass(eq=False)
class MnVerdict:
    """Outcome of `check_mn`.

    ``counterexample`` holds the index pair in F(2n) and
    ``counterexample_terms`` the corresponding (f, g).  ``witnesses`` maps
    each congruence pair (i, j) to its h when requested.  ``method`` is
    ``"exact"`` when the whole tolerance was generated on F and
    ``"search"`` when pairs were tested one at a time.  A search verdict
    may carry an `Escape`: a tolerance of A that the counterexample maps
    outside of, which certifies it independently of any closure.
    """

    n: int
    status: MnStatus
    free: FreeAlgebra
    method: str
    counterexample: Pair | None = None
    counterexample_terms: tuple[Term, Term] | None = None
    witnesses: dict[Pair, Term] | None = None
    pairs_checked: int = 0
    escape: "Escape | None" = None

    @property
    def holds(self) -> bool:
        return self.status is MnStatus.HOLDS

    def __repr__(self):
        extra = f", counterexample={self.counterexample}" if self.counterexample else ""
        return f"MnVerdict(n={self.n}, {self.status.value}, {self.method}{extra})"


# -- the 4n-ary h layout -----------------------------------------------------------

def _xy(n: int) -> list[Term]:
    return [Var(j) for j in range(2 * n)]


def _yx(n: int) -> list[Term]:
    return [Var(2 * i + d) for i in range(n) for d in (1, 0)]


def h_first_identity_side(h: Term, n: int) -> Term:
    """h(x_i, y_i ; x_i, y_i) as a 2n-ary term."""
    return substitute(h, _xy(n) + _xy(n))


def h_second_identity_side(h: Term, n: int) -> Term:
    """h(y_i, x_i ; x_i, y_i) as a 2n-ary term."""
    return substitute(h, _yx(n) + _xy(n))


def shift_to_x_block(t: Term, n: int) -> Term:
    """View a 2n-ary term as a 4n-ary h that ignores the u/v block."""
    return substitute(t, [Var(2 * n + j) for j in range(2 * n)])


def verify_mn_witness(alg: FiniteAlgebra, n: int, f: Term, g: Term, h: Term) -> bool:
    """True iff h satisfies both M(n) identities for (f, g) on ``alg``."""
    if max_var(f) >= 2 * n or max_var(g) >= 2 * n or max_var(h) >= 4 * n:
        return False
    try:
        check_term(alg, f)
        check_term(alg, g)
        check_term(alg, h)
    except ValueError:
        return False
    k = 2 * n
    return identity_holds(alg, f, h_first_identity_side(h, n), k) and identity_holds(
        alg, g, h_second_identity_side(h, n), k
    )


def _member_rows(size: int, n: int, limits: Limits) -> np.ndarray:
    proj = projection_columns(size, 2 * n, limits)
    rows = []
    for i in range(n):
        x, y = proj[2 * i], proj[2 * i + 1]
        rows.append(np.concatenate([x, y]))  # u_i
        rows.append(np.concatenate([y, x]))  # v_i
    for i in range(n):
        x, y = proj[2 * i], proj[2 * i + 1]
        rows.append(np.concatenate([x, x]))
        rows.append(np.concatenate([y, y]))
    return np.array(rows, dtype=np.int64)


def _h_for_tables(
    alg: FiniteAlgebra,
    n: int,
    f_table: np.ndarray,
    g_table: np.ndarray,
    limits: Limits,
    budget: WorkBudget | None = None,
) -> Term | None:
    gens = _member_rows(alg.size, n, limits)
    return subpower_member(alg, gens, np.concatenate([f_table, g_table]), limits, budget)


def find_h_witness(
    alg: FiniteAlgebra, n: int, f: Term, g: Term, limits: Limits | None = None
) -> Term:
    """A 4n-ary h for (f, g), or NotFound when none exists.

    Raises DiagonalIdentityFails when f and g differ after identifying
    y_i with x_i, since then no h can exist for trivial reasons.
    """
    if n < 1:
        raise ValueError("M(n) is defined for n >= 1")
    limits = limits or default_limits()
    k = 2 * n
    for t in (f, g):
        if max_var(t) >= k:
            raise VariableOutOfArity(f"term uses x{max_var(t)} but M({n}) allows {k} variables")
    check_table(alg.size**k, limits, f"A^{k}")
    ft = term_function(alg, f, k, limits).table
    gt = term_function(alg, g, k, limits).table
    if not np.array_equal(diagonal_restriction(ft, alg.size, n), diagonal_restriction(gt, alg.size, n)):
        raise DiagonalIdentityFails("f and g differ once y_i is identified with x_i")
    h = _h_for_tables(alg, n, ft, gt, limits)
    if h is None:
        raise NotFound(f"no 4n-ary h for this pair: M({n}) fails")
    if not verify_mn_witness(alg, n, f, g, h):
        raise AssertionError("membership witness failed verification")
    return h


# -- check_mn ------------------------------------------------------------------------

def check_mn(
    alg: FiniteAlgebra,
    n: int,
    witnesses: bool = False,
    limits: Limits | None = None,
) -> MnVerdict:
    """Decide M(n) for the variety generated by ``alg``.

    F(2n) is built one closure layer at a time.  After each layer the new
    congruence pairs are screened against the tolerances of A: a pair that
    some tolerance maps outside itself is certified to be a counterexample.
    If F completes without such a pair, the tolerance generated by the
    (x_i, y_i) is computed on F when F is small enough (route "exact");
    otherwise each pair is tested by subpower membership (route "search").

    Pairs are always taken in the order of `candidate_pairs`, and the
    counterexample reported is the first one each stage finds.
    """
    if n < 1:
        raise ValueError("M(n) is defined for n >= 1")
    limits = limits or default_limits()
    check_table(alg.size ** (2 * n), limits, f"A^{2 * n}")
    taus = small_tolerances(alg, limits)
    F = explore_free_algebra(alg, 2 * n, limits, max_layers=0)
    seen = 0
    while True:
        esc = first_escape(F, n, taus, limits, start=seen)
        if esc is not None:
            i, j = esc.pair
            return MnVerdict(
                n, MnStatus.FAILS, F, "search",
                counterexample=(i, j),
                counterexample_terms=(F.term(i), F.term(j)),
                escape=esc,
            )
        seen = len(F)
        if F.complete or not F.grow():
            break
    log.debug("check_mn: %r", F)
    if F.complete:
        probe = _probe_pairs(alg, F, n, limits)
        if probe is not None:
            return probe
        try:
            return _check_exact(alg, F, n, witnesses, limits)
        except ResourceExceeded as exc:
            log.debug("exact route unavailable (%s); testing pairs one by one", exc)
    return _check_search(alg, F, n, witnesses, limits)


def exact_tolerance(F: FreeAlgebra, n: int, limits: Limits, stop_size: int | None = None):
    """The tolerance of F(2n) generated by the (x_i, y_i), with derivations."""
    FA = F.as_algebra(limits)
    gens = [(F.generators[2 * i], F.generators[2 * i + 1]) for i in range(n)]
    T, dag = gen_tolerance(FA, gens, constants=F.generators, limits=limits, _stop_size=stop_size)
    return FA, gens, T, dag


def _check_exact(alg, F, n, want_witnesses, limits) -> MnVerdict:
    C = diagonal_pairs(F)
    FA, gens, T, dag = exact_tolerance(F, n, limits, stop_size=len(C))
    if len(T) < len(C):
        for i, j in candidate_pairs(F):
            if (i, j) not in T:
                return MnVerdict(
                    n, MnStatus.FAILS, F, "exact",
                    counterexample=(i, j),
                    counterexample_terms=(F.term(i), F.term(j)),
                    pairs_checked=len(C),
                )
    wit = None
    if want_witnesses:
        wit = {p: tolerance_witness(FA, gens, dag, p, constants=F.generators) for p in C}
    return MnVerdict(n, MnStatus.HOLDS, F, "exact", witnesses=wit, pairs_checked=len(C))


_PROBE_PAIRS = 16


def _probe_pairs(alg, F, n, limits) -> MnVerdict | None:
    """Membership-test a prefix of the pairs before generating the whole tolerance.

    Stops at the first pair it cannot decide, so a failure found here is
    the same first failure the exact route would report.
    """
    pair_limits = limits.with_(max_work=max(1, limits.max_work // 10))
    budget = WorkBudget(pair_limits.max_work)
    for checked, (i, j) in enumerate(candidate_pairs(F), start=1):
        if checked > _PROBE_PAIRS:
            break
        try:
            h = _h_for_tables(alg, n, F.table(i), F.table(j), pair_limits, budget)
        except ResourceExceeded:
            break
        if h is None:
            return MnVerdict(
                n, MnStatus.FAILS, F, "search",
                counterexample=(i, j),
                counterexample_terms=(F.term(i), F.term(j)),
                pairs_checked=checked,
            )
    return None


def _check_search(alg, F, n, want_witnesses, limits) -> MnVerdict:
    wit: dict[Pair, Term] | None = {} if want_witnesses else None
    checked = undecided = 0
    pair_limits = limits.with_(max_work=max(1, limits.max_work // 10))
    # one allowance for the whole search, so many cheap-looking pairs cannot add up unbounded
    budget = WorkBudget(limits.max_work)
    for i, j in candidate_pairs(F):
        if not F.complete and checked >= limits.max_pair_tests:
            break
        checked += 1
        try:
            h = _h_for_tables(alg, n, F.table(i), F.table(j), pair_limits, budget)
        except ResourceExceeded:
            if budget.exhausted:
                raise ResourceExceeded(
                    f"M({n}) search used its {limits.max_work} evaluations after "
                    f"{checked} pairs of F({2 * n}) without a counterexample"
                ) from None
            undecided += 1
            continue
        if h is None:
            return MnVerdict(
                n, MnStatus.FAILS, F, "search",
                counterexample=(i, j),
                counterexample_terms=(F.term(i), F.term(j)),
                pairs_checked=checked,
            )
        if wit is not None:
            wit[(i, j)] = h
            wit[(j, i)] = substitute(h, _yx(n) + [Var(2 * n + m) for m in range(2 * n)])
    if not F.complete:
        raise ResourceExceeded(
            f"F({2 * n}) too large to finish: no counterexample found among its "
            f"first {len(F)} elements ({checked} pairs tested)"
        )
    if undecided:
        raise ResourceExceeded(f"{undecided} pairs of F({2 * n}) could not be decided")
    if wit is not None:
        for i in range(len(F)):
            wit[(i, i)] = shift_to_x_block(F.term(i), n)
    return MnVerdict(n, MnStatus.HOLDS, F, "search", witnesses=wit, pairs_checked=checked)


_MAX_BLOCK_PAIRS = 5 * 10**7


def pair_blocks(F: FreeAlgebra, start: int = 0):
    """Congruence pairs (i, j), i < j, of F with j >= start, as sorted index arrays.

    One block per closure layer of j.  Inside a block, pairs whose two
    terms together depend on more variables come first (counting each
    term's essential variables separately), then smaller j, then smaller i.
    Because blocks follow the layers, exploring F further only appends
    blocks and never reorders earlier ones.
    """
    label, classes = _class_lists(F)
    pos = np.empty(len(F), dtype=np.int64)
    for members in classes:
        pos[members] = np.arange(len(members))
    ess = F.essential()
    for b0, b1 in F.layer_blocks(start):
        js = np.arange(b0, b1)
        counts = pos[js]
        total = int(counts.sum())
        if total == 0:
            continue
        if total > _MAX_BLOCK_PAIRS:
            raise ResourceExceeded(f"{total} congruence pairs in one layer of F")
        J = np.repeat(js, counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        I = np.empty(total, dtype=np.int64)
        for lab in np.unique(label[js]):
            sel = label[J] == lab
            I[sel] = classes[lab][offs[sel]]
        nvars = ess[I].sum(axis=1) + ess[J].sum(axis=1)
        order = np.lexsort((I, J, -nvars))
        yield I[order], J[order]


def candidate_pairs(F: FreeAlgebra, start: int = 0):
    """The pairs of `pair_blocks`, one at a time."""
    for I, J in pair_blocks(F, start):
        for i, j in zip(I.tolist(), J.tolist()):
            yield i, j


def _class_lists(F: FreeAlgebra) -> tuple[np.ndarray, list[np.ndarray]]:
    classes = diagonal_classes(F)
    label = np.empty(len(F), dtype=np.int64)
    for c, members in enumerate(classes):
        label[members] = c
    return label, classes


@dataclass(frozen=True, eq=False)
class Escape:
    """A pair (f, g) of F(2n) and tau-pairs (a_i, b_i) sending it outside tau."""

    pair: Pair
    tau: BinRel
    assignment: tuple[Pair, ...]
    image: Pair


def assignment_points(size: int, tau: BinRel, n: int, limits: Limits | None = None):
    """All n-tuples of tau's pairs in lexicographic order, and their indices in A^(2n)."""
    tau_pairs = tau.pairs()
    check_table(len(tau_pairs) ** n, limits, "tolerance assignments")
    assignments = list(product(tau_pairs, repeat=n))
    pts = np.array([encode([v for p in a for v in p], size) for a in assignments], dtype=np.int64)
    return assignments, pts.reshape(-1)


_ESCAPE_CHUNK = 1 << 22


def first_escape(
    F: FreeAlgebra,
    n: int,
    taus: Sequence[BinRel],
    limits: Limits | None = None,
    start: int = 0,
) -> Escape | None:
    """First pair of `pair_blocks` (j >= start) that some tolerance in ``taus`` refutes.

    If (f, g) lay in the tolerance generated by the (x_i, y_i), then f and g
    would be h(x,y;x,y) and h(y,x;x,y), and every tolerance would be mapped
    into itself.  An escaping assignment therefore certifies that (f, g) is
    outside.  For the first refuted pair, the earliest tolerance in ``taus``
    and then the earliest assignment are reported.
    """
    if not taus or start >= len(F):
        return None
    size = F.base.size
    prepared = []
    for tau in taus:
        assignments, pts = assignment_points(size, tau, n, limits)
        prepared.append((tau, assignments, F.tables[:, pts].astype(np.int64)))
    for I, J in pair_blocks(F, start):
        width = max(len(a) for _, a, _ in prepared)
        step = max(1, _ESCAPE_CHUNK // width)
        for c0 in range(0, len(I), step):
            Ic, Jc = I[c0:c0 + step], J[c0:c0 + step]
            hits = np.stack(
                [(~tau.matrix[vals[Ic], vals[Jc]]).any(axis=1) for tau, _, vals in prepared],
                axis=1,
            )
            rows = np.flatnonzero(hits.any(axis=1))
            if not len(rows):
                continue
            r = int(rows[0])
            t = int(np.argmax(hits[r]))
            tau, assignments, vals = prepared[t]
            i, j = int(Ic[r]), int(Jc[r])
            k = int(np.argmax(~tau.matrix[vals[i], vals[j]]))
            return Escape((i, j), tau, tuple(assignments[k]), (int(vals[i, k]), int(vals[j, k])))
    return None


# -- identity systems ----------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    """One identity ``t(pattern[0], ..., pattern[v-1]) = target``.

    Pattern and target terms are written over parameters ``Var(0..)``.
    """

    pattern: tuple[Term, ...]
    target: Term

    @property
    def params(self) -> int:
        return max([max_var(t) for t in self.pattern] + [max_var(self.target)]) + 1


@dataclass(frozen=True)
class IdentitySystem:
    """Identities on a single unknown term of the given arity."""

    arity: int
    constraints: tuple[Constraint, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            if len(c.pattern) != self.arity:
                raise ValueError(
                    f"constraint supplies {len(c.pattern)} arguments to a {self.arity}-ary term"
                )

    @classmethod
    def from_indices(cls, arity: int, rows: Sequence[tuple[Sequence[int], int]]) -> "IdentitySystem":
        """Build from variable patterns, e.g. ``[((0, 0, 1), 1)]`` for t(x,x,y) = y."""
        return cls(
            arity,
            tuple(Constraint(tuple(Var(i) for i in pat), Var(tgt)) for pat, tgt in rows),
        )

    def instance(self, t: Term, c: Constraint) -> Term:
        return substitute(t, list(c.pattern))

    def satisfied_by(self, alg: FiniteAlgebra, t: Term) -> bool:
        return all(
            identity_holds(alg, self.instance(t, c), c.target, max(c.params, 1))
            for c in self.constraints
        )


def malcev_system() -> IdentitySystem:
    return IdentitySystem.from_indices(3, [((0, 0, 1), 1), ((1, 0, 0), 1)])


def majority_system() -> IdentitySystem:
    return IdentitySystem.from_indices(3, [((0, 0, 1), 0), ((0, 1, 0), 0), ((1, 0, 0), 0)])


def _system_vectors(alg: FiniteAlgebra, system: IdentitySystem, limits: Limits):
    gens, target = [], []
    total = 0
    for c in system.constraints:
        k = max(c.params, 1)
        total += alg.size**k
        check_table(total * max(system.arity, 1), limits, "identity-system index set")
        cols = projection_columns(alg.size, k, limits)
        width = alg.size**k
        gens.append(
            np.stack(
                [np.broadcast_to(eval_vectors(alg, p, cols), (width,)) for p in c.pattern]
            ).reshape(system.arity, width)
        )
        target.append(np.broadcast_to(eval_vectors(alg, c.target, cols), (width,)))
    if not gens:
        return np.zeros((system.arity, 0), dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(gens, axis=1), np.concatenate(target)


def solve_identity_system(
    alg: FiniteAlgebra, system: IdentitySystem, limits: Limits | None = None
) -> Term | None:
    """A term satisfying every constraint of ``system``, or None if there is none.

    Each constraint contributes one coordinate per parameter tuple; the
    unknown term exists iff the target vector lies in the subalgebra of A^I
    generated by the argument vectors.  Coordinates with equal value
    vectors are merged first.
    """
    limits = limits or default_limits()
    G, t = _system_vectors(alg, system, limits)
    if G.shape[1]:
        stacked = np.unique(np.vstack([G, t[None, :]]).T, axis=0)
        if len(np.unique(stacked[:, :-1], axis=0)) < len(stacked):
            return None  # equal inputs demanding different outputs
        G, t = stacked[:, :-1].T.copy(), stacked[:, -1].copy()
    if system.arity == 0:
        cl = Closure(alg, G.shape[1], limits)
        idx = cl.run(t)
        sol = None if idx is None else cl.term(idx)
    else:
        sol = subpower_member(alg, G, t, limits)
    if sol is not None and not system.satisfied_by(alg, sol):
        raise AssertionError("identity-system solution failed verification")
    return sol


def find_malcev_term(alg: FiniteAlgebra, limits: Limits | None = None) -> Term | None:
    return solve_identity_system(alg, malcev_system(), limits)


def find_majority_term(alg: FiniteAlgebra, limits: Limits | None = None) -> Term | None:
    return solve_identity_system(alg, majority_system(), limits)


# -- Hagemann-Mitschke chains -------------------------------------------------------

def hm_chain_identities(chain: Sequence[Term]) -> list[tuple[Term, Term]]:
    """The linking identities of a chain p_1..p_m, over x = Var(0), y = Var(1).

    x = p_1(x,y,y),  p_i(x,x,y) = p_{i+1}(x,y,y),  p_m(x,x,y) = y.
    A chain of m terms witnesses (m+1)-permutability; m = 1 is a Mal'cev term.
    """
    x, y = Var(0), Var(1)
    if not chain:
        raise ValueError("a chain needs at least one term")
    out = [(x, substitute(chain[0], [x, y, y]))]
    for p, q in zip(chain, chain[1:]):
        out.append((substitute(p, [x, x, y]), substitute(q, [x, y, y])))
    out.append((substitute(chain[-1], [x, x, y]), y))
    return out


def verify_hm_chain(alg: FiniteAlgebra, chain: Sequence[Term]) -> bool:
    if not chain or any(max_var(p) > 2 for p in chain):
        return False
    return all(identity_holds(alg, s, t, 2) for s, t in hm_chain_identities(chain))


@dataclass(frozen=True)
class PermutabilityResult:
    degree: int
    chain: tuple[Term, ...]


def permutability_degree(
    alg: FiniteAlgebra, max_n: int = 6, limits: Limits | None = None
) -> PermutabilityResult | None:
    """Least n <= max_n such that V(A) is n-permutable, with a shortest chain.

    Each ternary term function t gives an edge t(x,y,y) -> t(x,x,y) between
    binary term functions; a chain is a path from the first projection to
    the second, and n is its length plus one.
    """
    if max_n < 2:
        raise ValueError("max_n must be at least 2")
    limits = limits or default_limits()
    s = alg.size
    a, b = projection_columns(s, 2, limits)
    w = s * s
    if np.array_equal(a, b):
        return PermutabilityResult(2, (Var(0),))
    cl = Closure(alg, 2 * w, limits)
    cl.add(
        np.array([np.concatenate([a, a]), np.concatenate([b, a]), np.concatenate([b, b])]),
        [0, 1, 2],
    )
    cl.run()
    rows = cl.rows
    left = [r.tobytes() for r in rows[:, :w]]
    right = [r.tobytes() for r in rows[:, w:]]
    start, goal = rows[0, :w].tobytes(), rows[2, w:].tobytes()
    edges: dict[bytes, list[int]] = {}
    for e, key in enumerate(left):
        edges.setdefault(key, []).append(e)
    via: dict[bytes, tuple[bytes, int] | None] = {start: None}
    queue = deque([start])
    while queue and goal not in via:
        node = queue.popleft()
        for e in edges.get(node, ()):
            nxt = right[e]
            if nxt not in via:
                via[nxt] = (node, e)
                queue.append(nxt)
    if goal not in via:
        return None
    path = []
    node = goal
    while via[node] is not None:
        node, e = via[node]
        path.append(e)
    path.reverse()
    if len(path) + 1 > max_n:
        return None
    chain = tuple(cl.term(e) for e in path)
    if not verify_hm_chain(alg, chain):
        raise AssertionError("chain from the closure failed verification")
    return PermutabilityResult(len(chain) + 1, chain)


__all__ = [
    "MnStatus",
    "MnVerdict",
    "check_mn",
    "candidate_pairs",
    "pair_blocks",
    "Escape",
    "assignment_points",
    "first_escape",
    "exact_tolerance",
    "find_h_witness",
    "verify_mn_witness",
    "h_first_identity_side",
    "h_second_identity_side",
    "shift_to_x_block",
    "Constraint",
    "IdentitySystem",
    "malcev_system",
    "majority_system",
    "solve_identity_system",
    "find_malcev_term",
    "find_majority_term",
    "hm_chain_identities",
    "verify_hm_chain",
    "PermutabilityResult",
    "permutability_degree",
]
