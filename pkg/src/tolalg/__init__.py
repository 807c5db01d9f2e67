"""Tolerances, congruences and the M(n) conditions for finite algebras."""
from .algebra import FiniteAlgebra, Operation, validate_algebra
from .closure import Closure, subpower_member
from .exceptions import (
    ChainInvalid,
    DiagonalIdentityFails,
    IncompatibleOccurrence,
    MnFails,
    NotATolerance,
    NotFound,
    ResourceExceeded,
    ShapeMismatch,
    TolalgError,
)
from .fixtures import NamedFixture, all_fixtures, prop5, separating_algebra, standard_fixtures
from .freealg import FreeAlgebra, diagonal_pairs, explore_free_algebra, free_algebra, identity_holds
from .limits import Limits, default_limits
from .malcev import (
    MnStatus,
    MnVerdict,
    check_mn,
    find_h_witness,
    find_majority_term,
    find_malcev_term,
    permutability_degree,
    solve_identity_system,
    verify_hm_chain,
    verify_mn_witness,
)
from .relations import BinRel, classify, gen_congruence, gen_tolerance, quotient, tolerance_witness
from .specfile import AlgebraSpec, parse_algebra_spec, serialize_spec
from .terms import App, Term, Var, eval_term, format_term, parse_term, term_function
from .tolim import Refutation, TolImReport, check_tolim_up_to, refute_tolim
from .witnesses import (
    h_balanced,
    h_lattice,
    h_malcev,
    h_semilattice,
    h_unary,
    hm_reduce,
    pad_mn_witness,
)

__version__ = "0.1.0"
