"""Kernels, local polynomial regression, variance functions and KDE.

Local polynomial fits are linear smoothers: for a fixed design ``X``,
bandwidth and degree, the estimate at ``x`` is ``w(x) @ Z``. The weight rows
are exposed through :func:`smoother_weights` so that callers fitting many
responses on one design (the profile likelihood does this for every trial
``theta``) can build the matrix once.
"""

import math
from itertools import product

import numpy as np

from .exceptions import DomainError, EvaluationError

__all__ = [
    "KERNELS",
    "kernel_eval",
    "smoother_weights",
    "LocalFit",
    "VarianceFit",
    "KernelDensity",
    "locpoly_fit",
    "cond_variance_fit",
    "kde_fit",
    "variance_floor",
    "guard_variance",
    "VARIANCE_GUARDS",
]

KERNELS = ("gaussian", "epanechnikov")

_SQRT_2PI = np.sqrt(2.0 * np.pi)

VARIANCE_FLOOR_FACTOR = 1e-4
VARIANCE_GUARDS = ("floor", "local_constant")
_COND_RIDGE = 1e12
_COND_FAIL = 1e14
_CHUNK = 512


def _check_kernel(kernel):
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def kernel_eval(kernel, u):
    """Evaluate a univariate kernel ``k(u)``.

    Parameters
    ----------
    kernel : {"gaussian", "epanechnikov"}
    u : float or array_like

    Returns
    -------
    float or ndarray
    """
    _check_kernel(kernel)
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise DomainError("kernel argument must be finite")
    if kernel == "gaussian":
        out = np.exp(-0.5 * u_arr**2) / _SQRT_2PI
    else:
        out = np.where(np.abs(u_arr) <= 1.0, 0.75 * (1.0 - u_arr**2), 0.0)
    return float(out) if np.ndim(u) == 0 else out


def _as_design(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DomainError("covariates must be a vector or an n x d matrix")
    return X


def _as_bandwidth(h, d):
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.size == 1 and d > 1:
        h = np.repeat(h, d)
    if h.shape != (d,):
        raise DomainError(f"bandwidth must have {d} entries, got {h.size}")
    if not np.all(np.isfinite(h) & (h > 0)):
        raise DomainError("bandwidths must be positive and finite")
    return h


def _exponents(d, degree):
    """Monomial exponent vectors of total degree <= ``degree``, intercept first."""
    exps = [e for e in product(range(degree + 1), repeat=d) if sum(e) <= degree]
    exps.sort(key=lambda e: (sum(e), tuple(-v for v in e)))
    return np.array(exps, dtype=int)


def _weights_block(X, points, degree, h, kernel, deriv=0):
    u = (X[None, :, :] - points[:, None, :]) / h  # (m, n, d)
    if kernel == "gaussian":
        w = np.exp(-0.5 * np.sum(u**2, axis=2))
    else:
        k = np.where(np.abs(u) <= 1.0, 1.0 - u**2, 0.0)
        w = np.prod(k, axis=2)
    exps = _exponents(X.shape[1], degree)
    if degree == 0:
        D = np.ones(w.shape + (1,))
    else:
        D = np.ones(w.shape + (len(exps),))
        for j, e in enumerate(exps):
            for c, power in enumerate(e):
                if power:
                    D[:, :, j] *= u[:, :, c] ** power
    mass = w.sum(axis=1)
    empty = mass <= 0
    if np.any(empty):
        i = int(np.flatnonzero(empty)[0])
        raise EvaluationError(
            f"all kernel weights are zero at evaluation point {points[i].tolist()}"
        )
    Dw = D * w[:, :, None]
    M = np.matmul(Dw.transpose(0, 2, 1), D)
    q = M.shape[1]
    if q == 1:
        return w / mass[:, None]
    cond = np.linalg.cond(M)
    bad = ~(cond < _COND_RIDGE)
    if np.any(bad):
        tr = np.trace(M[bad], axis1=1, axis2=2)
        M[bad] += 1e-10 * tr[:, None, None] * np.eye(q)
        cond[bad] = np.linalg.cond(M[bad])
    fallback = ~(cond < _COND_FAIL)
    if np.any(fallback):
        M[fallback] = np.eye(q)
    e1 = np.zeros((M.shape[0], q, 1))
    e1[:, deriv, 0] = 1.0
    a = np.linalg.solve(M, e1)[:, :, 0]  # (m, q)
    L = np.matmul(Dw, a[:, :, None])[:, :, 0]
    if deriv:
        # design columns are powers of (X - x)/h
        L *= math.factorial(deriv) / h[0] ** deriv
        if np.any(fallback):
            L[fallback] = np.nan
    elif np.any(fallback):
        L[fallback] = w[fallback] / mass[fallback, None]
    return L


def smoother_weights(X, points, degree=1, h=1.0, kernel="gaussian", deriv=0):
    """Linear weights of the local polynomial intercept at ``points``.

    Row ``j`` of the result holds ``w(points[j])`` so that the fit of any
    response vector ``Z`` at ``points[j]`` is ``w(points[j]) @ Z``.

    Parameters
    ----------
    X : array_like, shape (n,) or (n, d)
        Training covariates.
    points : array_like, shape (m,) or (m, d)
        Evaluation points.
    degree : int
        Polynomial degree (total degree for ``d > 1``).
    h : float or array_like of shape (d,)
        Bandwidth per coordinate.
    kernel : {"gaussian", "epanechnikov"}
        Univariate kernel; ``d > 1`` uses the product kernel.
    deriv : int
        Return weights of the ``deriv``-th derivative estimate instead of
        the intercept. Only for ``d = 1`` and ``deriv <= degree``.

    Returns
    -------
    ndarray, shape (m, n)

    Notes
    -----
    Ill-conditioned local normal equations get a ridge of ``1e-10`` times
    their trace; if that still fails the row falls back to local constant
    (Nadaraya-Watson) weights.
    """
    _check_kernel(kernel)
    X = _as_design(X)
    if X.shape[0] == 0:
        raise DomainError("empty training data")
    points = _as_design(points)
    if points.shape[1] != X.shape[1]:
        raise DomainError("evaluation points have the wrong dimension")
    h = _as_bandwidth(h, X.shape[1])
    if int(degree) != degree or degree < 0:
        raise DomainError("degree must be a non-negative integer")
    degree = int(degree)
    if deriv and (X.shape[1] != 1 or deriv > degree):
        raise DomainError("derivative weights need d = 1 and deriv <= degree")
    blocks = [
        _weights_block(X, points[s : s + _CHUNK], degree, h, kernel, deriv)
        for s in range(0, points.shape[0], _CHUNK)
    ]
    return np.concatenate(blocks, axis=0) if blocks else np.empty((0, X.shape[0]))


class LocalFit:
    """A fitted local polynomial regression, evaluable at arbitrary points.

    Instances are immutable after construction.
    """

    def __init__(self, X, Z, degree=1, h=1.0, kernel="gaussian", fitted=None):
        X = np.array(_as_design(X), dtype=float)
        Z = np.array(Z, dtype=float)
        if X.shape[0] == 0:
            raise DomainError("empty training data")
        if Z.shape != (X.shape[0],):
            raise DomainError("Z must have one value per covariate row")
        n_coef = len(_exponents(X.shape[1], int(degree)))
        if X.shape[0] <= n_coef:
            raise DomainError(
                f"need more than {n_coef} observations for degree {degree}"
            )
        _check_kernel(kernel)
        self.X = X
        self.Z = Z
        self.degree = int(degree)
        self.h = _as_bandwidth(h, X.shape[1])
        self.kernel = kernel
        self.X.setflags(write=False)
        self.Z.setflags(write=False)
        # callers that already hold the smoother matrix may pass fitted values
        self._fitted = None if fitted is None else np.asarray(fitted, dtype=float)

    @property
    def d(self):
        return self.X.shape[1]

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return x.reshape(1, 1), True
        if x.ndim == 1 and self.d == 1:
            return x[:, None], False
        if x.ndim == 1 and x.size == self.d:
            return x[None, :], True
        return _as_design(x), False

    def __call__(self, x):
        pts, single = self._points(x)
        W = smoother_weights(self.X, pts, self.degree, self.h, self.kernel)
        out = W @ self.Z
        return float(out[0]) if single else out

    @property
    def fitted(self):
        """Fitted values at the training covariates."""
        if self._fitted is None:
            W = smoother_weights(self.X, self.X, self.degree, self.h, self.kernel)
            self._fitted = W @ self.Z
        return self._fitted


def locpoly_fit(X, Z, degree=1, h=1.0, kernel="gaussian"):
    """Fit a local polynomial regression of ``Z`` on ``X``.

    The estimate at ``x`` is the intercept of the weighted least squares
    polynomial fit with weights ``K_h(X_i - x)``.
    """
    return LocalFit(X, Z, degree, h, kernel)


def variance_floor(Z):
    """Lower clamp applied to estimated conditional variances."""
    v = float(np.var(Z))
    return VARIANCE_FLOOR_FACTOR * v if v > 0 else VARIANCE_FLOOR_FACTOR


def guard_variance(v, floor, fallback=None):
    """Clamp variance estimates below at ``floor``.

    Where ``v < floor`` and ``fallback`` is given, the fallback value is used
    instead (still clamped at ``floor``).
    """
    v = np.asarray(v, dtype=float)
    if fallback is not None:
        v = np.where(v < floor, fallback, v)
    return np.maximum(v, floor)


class VarianceFit:
    """Conditional standard deviation ``sqrt(max(s(x) - m(x)^2, floor))``.

    ``fallback`` is an optional pair of local constant fits of ``Z`` and
    ``Z**2``; where ``s - m**2`` drops below the floor their variance is
    used instead (see :func:`guard_variance`).
    """

    def __init__(self, mean_fit, second_fit, floor, fallback=None):
        self.mean_fit = mean_fit
        self.second_fit = second_fit
        self.floor = float(floor)
        self.fallback = fallback

    def _fallback(self, x):
        if self.fallback is None:
            return None
        m0, s0 = self.fallback
        return np.asarray(s0(x)) - np.asarray(m0(x)) ** 2

    def variance(self, x):
        v = np.asarray(self.second_fit(x)) - np.asarray(self.mean_fit(x)) ** 2
        out = guard_variance(v, self.floor, self._fallback(x))
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, x):
        out = np.sqrt(self.variance(x))
        return float(out) if np.ndim(out) == 0 else out

    @property
    def fitted(self):
        v = self.second_fit.fitted - self.mean_fit.fitted**2
        fb = None
        if self.fallback is not None:
            m0, s0 = self.fallback
            fb = s0.fitted - m0.fitted**2
        return np.sqrt(guard_variance(v, self.floor, fb))


def cond_variance_fit(X, Z, degree=1, h=1.0, kernel="gaussian", guard="floor"):
    """Local polynomial estimates of the conditional mean and scale.

    ``s`` is the local polynomial fit of ``Z**2`` and the variance estimate
    is ``s - m**2`` clamped below at :func:`variance_floor`. With
    ``guard="local_constant"`` points where ``s - m**2`` falls below the
    floor use the local constant (Nadaraya-Watson) variance instead.

    Returns
    -------
    (LocalFit, VarianceFit)
    """
    if guard not in VARIANCE_GUARDS:
        raise DomainError(f"unknown variance guard {guard!r}; expected one of {VARIANCE_GUARDS}")
    Z = np.asarray(Z, dtype=float)
    mean_fit = LocalFit(X, Z, degree, h, kernel)
    second_fit = LocalFit(X, Z**2, degree, h, kernel)
    fallback = None
    if guard == "local_constant":
        fallback = (LocalFit(X, Z, 0, h, kernel), LocalFit(X, Z**2, 0, h, kernel))
    return mean_fit, VarianceFit(mean_fit, second_fit, variance_floor(Z), fallback)


class KernelDensity:
    """Kernel density estimate ``(1/(n g)) sum_i l((e_i - y) / g)``."""

    def __init__(self, residuals, g, kernel="gaussian"):
        residuals = np.asarray(residuals, dtype=float).ravel()
        if residuals.size < 1:
            raise DomainError("need at least one residual")
        if not (np.isfinite(g) and g > 0):
            raise DomainError(f"KDE bandwidth must be positive, got {g}")
        _check_kernel(kernel)
        self.residuals = residuals
        self.g = float(g)
        self.kernel = kernel

    def __call__(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(y_arr.shape)
        for s in range(0, y_arr.size, _CHUNK):
            u = (self.residuals[None, :] - y_arr[s : s + _CHUNK, None]) / self.g
            if self.kernel == "gaussian":
                k = np.exp(-0.5 * u * u)
                out[s : s + _CHUNK] = k.sum(axis=1) / (_SQRT_2PI * self.residuals.size * self.g)
            else:
                k = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
                out[s : s + _CHUNK] = k.sum(axis=1) / (self.residuals.size * self.g)
        return float(out[0]) if np.ndim(y) == 0 else out


def kde_fit(residuals, g, kernel="gaussian"):
    """Kernel density estimator of the residual distribution."""
    return KernelDensity(residuals, g, kernel)
