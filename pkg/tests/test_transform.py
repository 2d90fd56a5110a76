import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import yj_inverse_bisect, yj_log_deriv_scalar, yj_scalar
from semitrans.exceptions import DomainError, RangeError
from semitrans.transform import (
    yj_deriv_y,
    yj_grad_theta,
    yj_inverse,
    yj_log_deriv_y,
    yj_range,
    yj_value,
)

thetas = st.floats(-2.0, 4.0, allow_nan=False)
ys = st.floats(-50.0, 50.0, allow_nan=False)


@pytest.mark.parametrize(
    "theta, y, expected",
    [
        (1.0, 2.5, 2.5),
        (0.0, math.e - 1.0, 1.0),
        (2.0, -1.5, -math.log(2.5)),
        (0.5, 3.0, 2.0),
    ],
)
def test_value_examples(theta, y, expected):
    assert yj_value(theta, y) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "theta, y, expected", [(1.0, 7.3, 1.0), (0.0, 1.0, 0.5), (2.0, -1.0, 0.5)]
)
def test_deriv_examples(theta, y, expected):
    assert yj_deriv_y(theta, y) == pytest.approx(expected, abs=1e-12)


def test_grad_theta_examples():
    for theta in (-1.5, 0.0, 0.7, 2.0, 3.3):
        assert yj_grad_theta(theta, 0.0) == 0.0
    assert yj_grad_theta(0.0, math.e - 1.0) == pytest.approx(0.5, abs=1e-9)
    assert yj_grad_theta(0.5, 3.0) == pytest.approx(1.545177, abs=1e-6)


@pytest.mark.parametrize("theta, z, expected", [(1.0, -4.2, -4.2), (0.0, 1.0, math.e - 1.0)])
def test_inverse_examples(theta, z, expected):
    assert yj_inverse(theta, z) == pytest.approx(expected, abs=1e-12)


def test_inverse_matches_bisection():
    assert yj_inverse(0.5, 2.0) == pytest.approx(3.0, abs=1e-10)
    assert yj_inverse_bisect(0.5, 2.0) == pytest.approx(3.0, abs=1e-8)


def test_inverse_out_of_range():
    # theta < 0: range bounded above by -1/theta
    with pytest.raises(RangeError, match="z\\*theta"):
        yj_inverse(-1.0, 1.5)
    # theta > 2: range bounded below by -1/(theta - 2)
    with pytest.raises(RangeError, match="2 - theta"):
        yj_inverse(3.0, -1.5)


def test_range():
    assert yj_range(1.0) == (-np.inf, np.inf)
    assert yj_range(-1.0) == (-np.inf, 1.0)
    assert yj_range(3.0) == (-1.0, np.inf)


def test_non_finite_rejected():
    for f in (yj_value, yj_deriv_y, yj_grad_theta, yj_log_deriv_y):
        with pytest.raises(DomainError):
            f(1.0, np.nan)
        with pytest.raises(DomainError):
            f(np.inf, 1.0)
    with pytest.raises(DomainError):
        yj_inverse(1.0, np.inf)


def test_vectorized_shapes():
    y = np.linspace(-3, 3, 7)
    assert yj_value(0.3, y).shape == (7,)
    assert isinstance(yj_value(0.3, 1.0), float)
    assert np.allclose(yj_inverse(0.3, yj_value(0.3, y)), y)


def test_seam_continuity():
    y_pos = np.linspace(0.0, 50.0, 101)
    y_neg = np.linspace(-50.0, -0.01, 101)
    for eps in (1e-9, -1e-9):
        assert np.allclose(yj_value(0.0 + eps, y_pos), yj_value(0.0, y_pos), atol=1e-7)
        assert np.allclose(yj_value(2.0 + eps, y_neg), yj_value(2.0, y_neg), atol=1e-7)
    # the two half-lines meet at 0
    for theta in (-2.0, 0.0, 0.5, 2.0, 4.0):
        assert abs(yj_value(theta, 1e-12) - yj_value(theta, -1e-12)) < 1e-11


@settings(max_examples=200, deadline=None)
@given(thetas, ys)
def test_matches_scalar_oracle(theta, y):
    assert yj_value(theta, y) == pytest.approx(yj_scalar(theta, y), rel=1e-9, abs=1e-9)
    assert yj_log_deriv_y(theta, y) == pytest.approx(
        yj_log_deriv_scalar(theta, y), rel=1e-12, abs=1e-12
    )


@settings(max_examples=200, deadline=None)
@given(thetas, ys, st.floats(1e-3, 10.0))
def test_strictly_increasing(theta, y, step):
    assert yj_value(theta, y + step) > yj_value(theta, y)
    assert yj_deriv_y(theta, y) > 0


@settings(max_examples=200, deadline=None)
@given(thetas, st.floats(-20.0, 20.0))
def test_round_trip(theta, y):
    z = yj_value(theta, y)
    assert yj_inverse(theta, z) == pytest.approx(y, rel=1e-8, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1.9, 3.9), st.floats(-5.0, 5.0))
def test_grad_theta_finite_difference(theta, y):
    step = 1e-6
    fd = (yj_value(theta + step, y) - yj_value(theta - step, y)) / (2 * step)
    assert yj_grad_theta(theta, y) == pytest.approx(fd, rel=1e-5, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(ys)
def test_identity_at_one(y):
    assert yj_value(1.0, y) == pytest.approx(y, abs=1e-12)
    assert yj_log_deriv_y(1.0, y) == 0.0
