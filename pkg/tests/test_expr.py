from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbimorse.builtin_examples import KUMMER_FUNCTION, builtin_functions
from orbimorse.errors import DomainError, ExprSyntaxError, UnknownIdentifier, VariableOutOfRange
from orbimorse.expr import (BinOp, Call, Neg, Num, Pi, Pow, Var, check_invariance, evaluate,
                            gradient, hessian, parse, to_text)
from orbimorse.group_rep import AffineIsometry, generate_group

from oracles import fd_gradient, fd_hessian, rel_err


def test_kummer_parses():
    e = parse(KUMMER_FUNCTION, 4)
    assert evaluate(e, [0, 0, 0, 0]) == pytest.approx(4)
    assert evaluate(e, [0.5] * 4) == pytest.approx(-4)


def test_constant():
    e = parse("0", 3)
    assert evaluate(e, [1, 2, 3]) == 0
    assert np.all(gradient(e, [1, 2, 3]) == 0)


@pytest.mark.parametrize("text, x, value", [
    ("1 - 2 - 3", [0], -4),
    ("8 / 4 / 2", [0], 1),
    ("-x1^2", [3], -9),
    ("2^-1", [0], 0.5),
    ("(x1 + 1)^2", [1], 4),
    ("2*x1^3", [2], 16),
    ("-(-x1)", [5], 5),
    ("0.25 + .5", [0], 0.75),
    ("exp(0) + sin(pi/2) + sqrt(4) + cos(pi)", [0], 3),
])
def test_precedence_and_values(text, x, value):
    assert evaluate(parse(text, len(x)), x) == pytest.approx(value)


def test_saddle_hessian():
    e = parse("x1^2 - x2^2", 2)
    assert np.allclose(hessian(e, [0, 0]), np.diag([2, -2]))


def test_kummer_derivatives_at_special_points():
    e = parse(KUMMER_FUNCTION, 4)
    assert np.allclose(gradient(e, [0.5] * 4), 0, atol=1e-12)
    assert np.allclose(hessian(e, [0] * 4), -4 * np.pi ** 2 * np.eye(4))


@pytest.mark.parametrize("text, dim, exc", [
    ("x1 +", 1, ExprSyntaxError),
    ("(x1", 1, ExprSyntaxError),
    ("x1 x2", 2, ExprSyntaxError),
    ("x1^x2", 2, ExprSyntaxError),
    ("x1^1.5", 1, ExprSyntaxError),
    ("cos x1", 1, ExprSyntaxError),
    ("tan(x1)", 1, UnknownIdentifier),
    ("y + 1", 1, UnknownIdentifier),
    ("x3", 2, VariableOutOfRange),
    ("x0", 2, VariableOutOfRange),
    ("x1 $ 2", 1, ExprSyntaxError),
])
def test_parse_errors(text, dim, exc):
    with pytest.raises(exc):
        parse(text, dim)


def test_syntax_error_reports_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x1 + * x2", 2)
    assert info.value.position == 5


@pytest.mark.parametrize("text, x", [("1/x1", [0.0]), ("sqrt(x1)", [-1.0]), ("x1^-2", [0.0])])
def test_domain_errors(text, x):
    with pytest.raises(DomainError):
        gradient(parse(text, 1), x)


def test_sqrt_at_zero_value_only():
    e = parse("sqrt(x1)", 1)
    assert evaluate(e, [0.0]) == 0
    with pytest.raises(DomainError):
        gradient(e, [0.0])


@pytest.mark.parametrize("name", sorted(builtin_functions()))
def test_builtin_derivatives_match_finite_differences(name):
    text, dim = builtin_functions()[name]
    e = parse(text, dim)
    X = np.random.default_rng(7).uniform(-1, 1, size=(100, dim))
    for x in X:
        assert rel_err(gradient(e, x), fd_gradient(e.values, x)) <= 1e-6
        assert rel_err(hessian(e, x), fd_hessian(e.gradients, x)) <= 1e-6


def test_mixed_function_derivatives():
    e = parse("exp(x1*x2) * sin(x3) / (2 + cos(x1)) + sqrt(1 + x2^2)^3", 3)
    X = np.random.default_rng(3).uniform(-1, 1, size=(30, 3))
    for x in X:
        assert rel_err(gradient(e, x), fd_gradient(e.values, x)) <= 1e-6
        assert rel_err(hessian(e, x), fd_hessian(e.gradients, x)) <= 1e-6


def test_hessian_symmetric():
    e = parse("x1*x2^3 + sin(x1*x2)", 2)
    H = hessian(e, [0.3, -1.2])
    assert np.array_equal(H, H.T)


def test_batch_matches_pointwise():
    e = parse(KUMMER_FUNCTION, 4)
    X = np.random.default_rng(0).random((5, 4))
    jet = e.jet(X, 2)
    for k, x in enumerate(X):
        assert jet.v[k] == evaluate(e, x)
        assert np.array_equal(jet.g[k], gradient(e, x))


# -- invariance -----------------------------------------------------------

def minus_identity(n, lattice=False):
    return generate_group([AffineIsometry(-np.eye(n, dtype=int), lattice=lattice)], lattice=lattice)


def test_kummer_invariant():
    assert check_invariance(parse(KUMMER_FUNCTION, 4), minus_identity(4, True)).invariant


def test_linear_function_not_invariant():
    rep = check_invariance(parse("x1", 1), minus_identity(1))
    assert not rep.invariant
    x = rep.worst_point[0]
    assert rep.worst == pytest.approx(2 * abs(x))


def test_norm_invariant_under_rotations():
    c, s = np.cos(2 * np.pi / 7), np.sin(2 * np.pi / 7)
    G = generate_group([AffineIsometry([[c, -s], [s, c]]), AffineIsometry([[1, 0], [0, -1]])])
    assert check_invariance(parse("x1^2+x2^2", 2), G).invariant


def test_torus_requires_periodicity():
    G = minus_identity(1, True)
    assert not check_invariance(parse("x1^2", 1), G).invariant


# -- printing -------------------------------------------------------------

def nodes(dim):
    leaves = st.one_of(
        # literals are decimals, so only terminating fractions are reachable
        st.integers(0, 5000).map(lambda k: Num(Fraction(k, 100))),
        st.integers(0, dim - 1).map(Var),
        st.just(Pi()),
    )

    def extend(children):
        return st.one_of(
            children.map(Neg),
            st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: BinOp(*t)),
            st.tuples(children, st.integers(-3, 4)).map(lambda t: Pow(*t)),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "sqrt"]), children).map(lambda t: Call(*t)),
        )
    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(nodes(3))
def test_print_parse_roundtrip(node):
    assert parse(to_text(node), 3).root == node
