import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import algebras, random_term
from tolalg import App, Var, eval_term, format_term, parse_term, term_function, validate_algebra
from tolalg.exceptions import ArityMismatch, UnboundVariable, VariableOutOfArity
from tolalg.terms import (
    TermSyntaxError,
    UnknownSymbol,
    depth,
    eval_vectors,
    max_var,
    rename,
    substitute,
    term_size,
    variables,
)

ALG = validate_algebra(
    3,
    [
        ("m", 3, [sorted(t)[1] for t in np.ndindex(3, 3, 3)]),
        ("s", 1, [1, 2, 0]),
        ("c", 0, [2]),
    ],
)


def test_structure_helpers():
    t = App(0, (Var(0), App(1, (Var(3),)), App(2, ())))
    assert variables(t) == {0, 3}
    assert max_var(t) == 3 and max_var(App(2, ())) == -1
    assert depth(t) == 2 and term_size(t) == 5
    assert rename(t, [2, 1, 0, 0]) == App(0, (Var(2), App(1, (Var(0),)), App(2, ())))
    assert substitute(Var(1), {1: App(2, ())}) == App(2, ())


def test_eval_scalar_and_vector_agree():
    t = parse_term("(m x0 (s x1) c)", ALG)
    for a in range(3):
        for b in range(3):
            assert eval_term(ALG, t, [a, b]) == sorted([a, (b + 1) % 3, 2])[1]
    cols = [np.array([0, 1, 2]), np.array([2, 2, 0])]
    assert eval_vectors(ALG, t, cols).tolist() == [eval_term(ALG, t, [a, b]) for a, b in zip(*cols)]


def test_eval_errors():
    with pytest.raises(UnboundVariable):
        eval_term(ALG, Var(2), [0, 1])
    with pytest.raises(ArityMismatch):
        eval_term(ALG, App(1, (Var(0), Var(0))), [0])
    with pytest.raises(VariableOutOfArity):
        term_function(ALG, Var(2), 2)
    with pytest.raises(VariableOutOfArity):
        Var(-1)


def test_term_function_of_closed_term_is_constant():
    tf = term_function(ALG, App(1, (App(2, ()),)), 2)
    assert tf.table.tolist() == [0] * 9


@pytest.mark.parametrize(
    "text, error, col",
    [
        ("(m x0 x1", TermSyntaxError, 9),
        ("(q x0)", UnknownSymbol, 2),
        ("(m x0 x1)", ArityMismatch, 2),
        ("s", ArityMismatch, 1),
        ("(m x0 x1 x2) x3", TermSyntaxError, 14),
    ],
)
def test_parse_errors_report_columns(text, error, col):
    with pytest.raises(error) as info:
        parse_term(text, ALG)
    assert info.value.col == col


@given(algebras(max_size=3, max_ops=3, max_arity=3), st.integers(0, 2**32 - 1))
def test_format_parse_round_trip(alg, seed):
    t = random_term(np.random.default_rng(seed), alg.arities, 4, 4)
    assert parse_term(format_term(t, alg), alg) == t


@given(algebras(max_size=3), st.integers(0, 2**32 - 1))
def test_substitution_commutes_with_evaluation(alg, seed):
    rng = np.random.default_rng(seed)
    t = random_term(rng, alg.arities, 3, 3)
    inner = [random_term(rng, alg.arities, 2, 2) for _ in range(3)]
    env = [int(v) for v in rng.integers(0, alg.size, 2)]
    direct = eval_term(alg, substitute(t, inner), env)
    assert direct == eval_term(alg, t, [eval_term(alg, s, env) for s in inner])
