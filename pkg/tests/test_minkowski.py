import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow.errors import DimensionMismatch
from curveflow.minkowski import (
    CausalCharacter,
    causal_character,
    causal_character_many,
    inner,
    inner_many,
    metric_signs,
    norm,
    norm_many,
)


def test_inner_examples():
    assert inner((1, 0, 0), (1, 0, 0)) == -1.0
    assert inner((0, 1, 0), (0, 0, 1)) == 0.0
    assert inner((3, 1, 2), (1, 4, 0)) == pytest.approx(1.0)


def test_norm_examples():
    assert norm((1, 0)) == 1.0
    assert norm((1, 1)) == 0.0
    assert norm((2, 0, 0)) == 2.0


def test_causal_character_examples():
    assert causal_character((1, 0)) is CausalCharacter.TIMELIKE
    assert causal_character((1, 1)) is CausalCharacter.NULL
    assert causal_character((2, 1, 1)) is CausalCharacter.TIMELIKE
    assert causal_character((1, 2)) is CausalCharacter.SPACELIKE


def test_zero_vector_is_spacelike_not_null():
    assert causal_character((0.0, 0.0, 0.0)) is CausalCharacter.SPACELIKE


def test_null_tolerance_is_relative():
    # |<X,X>| = 2e5 * 1e-7 = 0.02 but the Euclidean scale is huge
    x = (1e4, 1e4 + 1e-7)
    assert causal_character(x, tol=1e-9) is CausalCharacter.NULL
    assert causal_character(x, tol=0.0) is CausalCharacter.SPACELIKE


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        inner((1, 0), (1, 0, 0))
    with pytest.raises(DimensionMismatch):
        norm((1.0,))


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        inner((1, np.nan), (1, 0))


def test_negative_tol_rejected():
    with pytest.raises(ValueError):
        causal_character((1, 0), tol=-1.0)


@pytest.mark.parametrize("n", range(2, 9))
def test_signature_on_basis(n):
    basis = np.eye(n)
    for i in range(n):
        for j in range(n):
            expected = (-1.0 if i == 0 else 1.0) if i == j else 0.0
            assert inner(basis[i], basis[j]) == expected
    assert metric_signs(n)[0] == -1 and np.all(metric_signs(n)[1:] == 1)


@given(
    st.integers(min_value=2, max_value=8),
    st.integers(min_value=0, max_value=2**31 - 1),
)
@settings(max_examples=50, deadline=None)
def test_bilinearity_and_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    x, y, z = rng.standard_normal((3, n))
    a, b = rng.standard_normal(2)
    lhs = inner(a * x + b * z, y)
    rhs = a * inner(x, y) + b * inner(z, y)
    scale = max(1.0, abs(lhs), abs(rhs))
    assert abs(lhs - rhs) <= 1e-12 * scale
    assert inner(x, y) == inner(y, x)


def test_norm_squared_matches_inner():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((500, 5))
    q = np.abs(inner_many(X, X))
    assert np.allclose(norm_many(X) ** 2, q, rtol=1e-12, atol=1e-300)


def test_vectorized_classification_agrees_with_scalar():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((200, 4))
    X[0] = 0.0
    X[1] = (1.0, 1.0, 0.0, 0.0)
    many = causal_character_many(X)
    for i in range(X.shape[0]):
        assert many[i] is causal_character(X[i])
