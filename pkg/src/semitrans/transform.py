"""Yeo-Johnson power transformation family.

All functions broadcast over numpy arrays and return floats for scalar
input. The family is strictly increasing in ``y`` for every ``theta`` and
reduces to the identity at ``theta = 1``.
"""

import numpy as np

from .exceptions import DomainError, RangeError

__all__ = [
    "DEFAULT_THETA_INTERVAL",
    "SEAM_TOL",
    "yj_value",
    "yj_deriv_y",
    "yj_grad_theta",
    "yj_inverse",
    "yj_range",
]

DEFAULT_THETA_INTERVAL = (-2.0, 4.0)

# below this distance from 0 (resp. 2) the logarithmic branch is used
SEAM_TOL = 1e-8

# |t * L| below this switches the theta-gradient to its power series
_SERIES_TOL = 1e-2


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("Yeo-Johnson arguments must be finite")


def _out(result, *inputs):
    if all(np.ndim(a) == 0 for a in inputs):
        return float(result)
    return result


def _power_part(t, log_term):
    """``((exp(t * L) - 1) / t``, switching to ``L`` when ``t`` is tiny."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SEAM_TOL
    t_safe = np.where(small, 1.0, t)
    return np.where(small, log_term, np.expm1(t_safe * log_term) / t_safe)


def _power_part_dt(t, log_term):
    """Derivative of ``(exp(t * L) - 1) / t`` with respect to ``t``."""
    t = np.asarray(t, dtype=float)
    tl = t * log_term
    series = np.abs(tl) < _SERIES_TOL
    # sum_{k>=2} (k-1) t^(k-2) L^k / k!
    acc = np.zeros(np.broadcast(t, log_term).shape)
    term = log_term**2 / 2.0
    for k in range(2, 10):
        acc = acc + (k - 1) * term
        term = term * tl / (k + 1)
    t_safe = np.where(series, 1.0, t)
    e = np.exp(t_safe * log_term)
    direct = (t_safe * log_term * e - (e - 1.0)) / t_safe**2
    return np.where(series, acc, direct)


def yj_value(theta, y):
    """Evaluate the Yeo-Johnson transformation ``Lambda_theta(y)``.

    Parameters
    ----------
    theta : float or array_like
        Transformation parameter.
    y : float or array_like
        Response values, any real number.

    Returns
    -------
    float or ndarray
    """
    theta = np.asarray(theta, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    _check_finite(theta, y_arr)
    pos = y_arr >= 0
    with np.errstate(over="ignore", invalid="ignore"):
        lp = np.log1p(np.where(pos, y_arr, 0.0))
        ln = np.log1p(np.where(pos, 0.0, -y_arr))
        up = _power_part(theta, lp)
        lo = -_power_part(2.0 - theta, ln)
    return _out(np.where(pos, up, lo), theta, y)


def yj_deriv_y(theta, y):
    """Derivative of ``Lambda_theta(y)`` with respect to ``y``."""
    theta = np.asarray(theta, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    _check_finite(theta, y_arr)
    pos = y_arr >= 0
    with np.errstate(over="ignore"):
        lp = np.log1p(np.where(pos, y_arr, 0.0))
        ln = np.log1p(np.where(pos, 0.0, -y_arr))
        out = np.where(pos, np.exp((theta - 1.0) * lp), np.exp((1.0 - theta) * ln))
    return _out(out, theta, y)


def yj_log_deriv_y(theta, y):
    """``log Lambda'_theta(y)``, computed without forming the power."""
    theta = np.asarray(theta, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    _check_finite(theta, y_arr)
    pos = y_arr >= 0
    lp = np.log1p(np.where(pos, y_arr, 0.0))
    ln = np.log1p(np.where(pos, 0.0, -y_arr))
    return _out(np.where(pos, (theta - 1.0) * lp, (1.0 - theta) * ln), theta, y)


def yj_grad_theta(theta, y):
    """Derivative of ``Lambda_theta(y)`` with respect to ``theta``.

    The removable singularities at ``theta = 0`` (``y >= 0``) and
    ``theta = 2`` (``y < 0``) are filled by their series limits.
    """
    theta = np.asarray(theta, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    _check_finite(theta, y_arr)
    pos = y_arr >= 0
    with np.errstate(over="ignore", invalid="ignore"):
        lp = np.log1p(np.where(pos, y_arr, 0.0))
        ln = np.log1p(np.where(pos, 0.0, -y_arr))
        up = _power_part_dt(theta, lp)
        lo = _power_part_dt(2.0 - theta, ln)
    return _out(np.where(pos, up, lo), theta, y)


def yj_range(theta):
    """Open interval ``(lo, hi)`` of values attained by ``Lambda_theta``."""
    theta = float(theta)
    lo, hi = -np.inf, np.inf
    if theta < -SEAM_TOL:
        hi = -1.0 / theta
    if theta > 2.0 + SEAM_TOL:
        lo = -1.0 / (theta - 2.0)
    return lo, hi


def yj_inverse(theta, z):
    """Inverse transformation ``Lambda_theta^{-1}(z)``.

    Raises
    ------
    RangeError
        If some ``z`` lies outside the range of ``Lambda_theta``.
    """
    theta = np.asarray(theta, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    _check_finite(theta, z_arr)
    pos = z_arr >= 0
    t_up = theta
    t_lo = 2.0 - theta
    arg_up = 1.0 + np.where(pos, z_arr, 0.0) * t_up
    arg_lo = 1.0 - np.where(pos, 0.0, z_arr) * t_lo
    log_up = np.abs(t_up) < SEAM_TOL
    log_lo = np.abs(t_lo) < SEAM_TOL
    bad_up = pos & ~log_up & (arg_up <= 0)
    bad_lo = ~pos & ~log_lo & (arg_lo <= 0)
    if np.any(bad_up):
        raise RangeError(
            "z outside the range of the transformation: z*theta + 1 > 0 "
            "violated for z >= 0"
        )
    if np.any(bad_lo):
        raise RangeError(
            "z outside the range of the transformation: 1 - z*(2 - theta) > 0 "
            "violated for z < 0"
        )
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        tu = np.where(log_up, 1.0, t_up)
        tl = np.where(log_lo, 1.0, t_lo)
        up = np.where(
            log_up,
            np.expm1(np.where(pos, z_arr, 0.0)),
            np.expm1(np.log1p(np.where(pos, z_arr, 0.0) * tu) / tu),
        )
        lo = np.where(
            log_lo,
            -np.expm1(-np.where(pos, 0.0, z_arr)),
            -np.expm1(np.log1p(-np.where(pos, 0.0, z_arr) * tl) / tl),
        )
    return _out(np.where(pos, up, lo), theta, z)
