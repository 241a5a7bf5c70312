import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from depthsign.exceptions import ParameterError, ShapeError
from depthsign.linalg import elementwise, make_rng, matmul, rand_uniform, sigmoid, transpose

from oracles import matmul_loop


def test_identity_product():
    m = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(matmul(np.eye(3), m), m)


def test_hand_computed_product():
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3.0], [7.0]])


def test_matches_triple_loop(rng):
    a, b = rng.normal(size=(5, 7)), rng.normal(size=(7, 3))
    np.testing.assert_allclose(matmul(a, b), matmul_loop(a.tolist(), b.tolist()), rtol=0, atol=1e-12)


def test_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_associativity(rng):
    for _ in range(20):
        a, b, c = rng.normal(size=(4, 6)), rng.normal(size=(6, 5)), rng.normal(size=(5, 3))
        left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
        assert np.max(np.abs(left - right)) <= 1e-9 * max(1.0, np.max(np.abs(left)))


def test_elementwise():
    m = np.array([[1.0, -2.0], [0.5, 3.0]])
    np.testing.assert_array_equal(elementwise(m, lambda v: v), m)
    assert elementwise([[0.0]], sigmoid)[0, 0] == 0.5
    s = elementwise([[-1.0, 1.0]], lambda v: float(sigmoid(v)))
    assert s[0, 0] + s[0, 1] == pytest.approx(1.0, abs=1e-15)


@given(arrays(np.float64, (3, 4), elements=st.floats(-1e6, 1e6)))
def test_transpose_involution(m):
    np.testing.assert_array_equal(transpose(transpose(m)), m)


@settings(max_examples=50)
@given(arrays(np.float64, (4, 5), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (5, 2), elements=st.floats(-1e3, 1e3)))
def test_finite_in_finite_out(a, b):
    assert np.all(np.isfinite(matmul(a, b)))
    assert np.all(np.isfinite(sigmoid(a)))
    assert np.all(np.isfinite(transpose(a)))


def test_sigmoid_extremes_stay_finite():
    s = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert np.all(np.isfinite(s))
    assert s[1] == 0.5


def test_rand_uniform_deterministic():
    a = rand_uniform(make_rng(42), 6, 6, -1, 1)
    b = rand_uniform(make_rng(42), 6, 6, -1, 1)
    assert a.tobytes() == b.tobytes()


def test_rand_uniform_mean_and_range():
    x = rand_uniform(make_rng(3), 100, 100, 0.0, 1.0)
    assert x.min() >= 0.0 and x.max() < 1.0
    assert abs(x.mean() - 0.5) < 0.02


def test_rand_uniform_empty_and_bad_bounds():
    assert rand_uniform(make_rng(0), 0, 5, 0, 1).shape == (0, 5)
    with pytest.raises(ParameterError):
        rand_uniform(make_rng(0), 2, 2, 1.0, 1.0)


def test_substreams_are_independent_of_order():
    a = make_rng(9, 2).uniform(size=4)
    make_rng(9, 1).uniform(size=100)
    b = make_rng(9, 2).uniform(size=4)
    c = make_rng(9, 3).uniform(size=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seed_must_be_unsigned_64_bit():
    with pytest.raises(ParameterError):
        make_rng(-1)
    with pytest.raises(ParameterError):
        make_rng(2**64)
