"""Data-driven bandwidth selectors.

* :func:`rsw_plugin` -- direct plug-in bandwidth for local linear regression
  (Ruppert, Sheather and Wand, 1995), computed on the raw data rather than a
  binned grid.
* :func:`sj_plugin` -- Sheather and Jones (1991) solve-the-equation bandwidth
  for Gaussian kernel density estimation.
* :func:`rot_bandwidth` -- Silverman's rule of thumb, used as a fallback.

All selectors are deterministic and scale equivariant.
"""

import logging

import numpy as np
from scipy.optimize import brentq

from .exceptions import DomainError
from .smoothing import smoother_weights

__all__ = [
    "rot_bandwidth",
    "rsw_plugin",
    "sj_plugin",
    "regression_bandwidths",
]

log = logging.getLogger(__name__)

_SQRT_PI = np.sqrt(np.pi)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _spread(values):
    values = np.asarray(values, dtype=float).ravel()
    sd = np.std(values, ddof=1) if values.size > 1 else 0.0
    q75, q25 = np.percentile(values, [75, 25])
    return sd, q75 - q25


def rot_bandwidth(values):
    """Silverman's rule ``0.9 * min(sd, IQR / 1.34) * n**(-1/5)``.

    Falls back to the standard deviation alone when the IQR is zero.

    Raises
    ------
    DomainError
        Fewer than two values, or all values equal.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        raise DomainError("rule-of-thumb bandwidth needs at least two values")
    sd, iqr = _spread(values)
    scale = min(sd, iqr / 1.34)
    if scale <= 0:
        scale = sd
    if not scale > 0:
        raise DomainError("rule-of-thumb bandwidth: degenerate sample (zero spread)")
    return 0.9 * scale * values.size ** (-0.2)


# -- Ruppert, Sheather & Wand direct plug-in --------------------------------


def _blocked_quartic(x, y, nblocks):
    """Blocked quartic fits on sorted ``x``: RSS, theta_22 and theta_24."""
    n = x.size
    size = n // nblocks
    rss = th22 = th24 = 0.0
    for j in range(nblocks):
        lo = j * size
        hi = n if j == nblocks - 1 else lo + size
        xb, yb = x[lo:hi], y[lo:hi]
        centre = 0.5 * (xb[0] + xb[-1])
        half = 0.5 * (xb[-1] - xb[0]) or 1.0
        t = (xb - centre) / half
        V = np.vander(t, 5, increasing=True)
        coef, *_ = np.linalg.lstsq(V, yb, rcond=None)
        rss += float(np.sum((yb - V @ coef) ** 2))
        c2, c3, c4 = coef[2:] / np.array([half**2, half**3, half**4])
        s = xb - centre
        m2 = 2.0 * c2 + 6.0 * c3 * s + 12.0 * c4 * s**2
        m4 = 24.0 * c4
        th22 += float(np.sum(m2**2))
        th24 += float(np.sum(m2 * m4))
    return rss, th22 / n, th24 / n


def _rsw(x, y, blockmax=5, divisor=20, trim=0.01, proptrun=0.05):
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    cut = int(np.floor(trim * x.size))
    if cut:
        x, y = x[cut:-cut], y[cut:-cut]
    n = x.size
    a, b = x[0], x[-1]
    span = b - a

    nmax = max(min(n // divisor, blockmax), 1)
    fits = {N: _blocked_quartic(x, y, N) for N in range(1, nmax + 1)}
    rss_max = fits[nmax][0]
    # constant or exactly quartic y leaves only rounding noise in the RSS
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss <= 1e-24 * n * float(np.mean(y * y)) or not rss_max > 1e-20 * tss:
        return None
    cp = {N: fits[N][0] / (rss_max / (n - 5 * nmax)) - (n - 10 * N) for N in fits}
    nopt = min(cp, key=cp.get)
    rss, _, th24 = fits[nopt]
    sigsq_q = rss / (n - 5 * nopt)
    if not (sigsq_q > 0 and th24 != 0 and np.isfinite(th24)):
        return None

    # theta_22 from a local cubic fit with a rule-of-thumb bandwidth
    gam = sigsq_q * span / (abs(th24) * n)
    c = 3.0 / (8.0 * _SQRT_PI) if th24 < 0 else 15.0 / (16.0 * _SQRT_PI)
    gam = (c * gam) ** (1.0 / 7.0)
    inner = (x >= a + proptrun * span) & (x <= b - proptrun * span)
    W2 = smoother_weights(x, x[inner], degree=3, h=gam, deriv=2)
    m2 = W2 @ y
    if not np.all(np.isfinite(m2)):
        return None
    th22 = float(np.sum(m2**2)) / n
    if not th22 > 0:
        return None

    # residual variance from a local linear fit with a direct plug-in bandwidth
    c3k = 0.5 + 2.0 * np.sqrt(2.0) - (4.0 / 3.0) * np.sqrt(3.0)
    c3k = (4.0 * c3k / _SQRT_2PI) ** (1.0 / 9.0)
    lam = c3k * (sigsq_q**2 * span / (th22 * n) ** 2) ** (1.0 / 9.0)
    L = smoother_weights(x, x, degree=1, h=lam)
    resid = y - L @ y
    denom = n - 2.0 * np.trace(L) + float(np.sum(L * L))
    sigsq = float(resid @ resid) / denom
    if not (sigsq > 0 and np.isfinite(sigsq)):
        return None
    return (sigsq * span / (2.0 * _SQRT_PI * th22 * n)) ** 0.2


def rsw_plugin(X, Z):
    """Direct plug-in bandwidth for local linear regression of ``Z`` on ``X``.

    Parameters
    ----------
    X : array_like, shape (n,) or (n, 1)
        Univariate covariate.
    Z : array_like, shape (n,)
        Responses.

    Returns
    -------
    float
        The plug-in bandwidth, or :func:`rot_bandwidth` of ``X`` when the
        plug-in estimates are degenerate (e.g. constant or exactly
        polynomial ``Z``).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise DomainError(
                "rsw_plugin handles d = 1 only; use regression_bandwidths for d > 1"
            )
        X = X[:, 0]
    Z = np.asarray(Z, dtype=float)
    if X.shape != Z.shape:
        raise DomainError("X and Z must have the same length")
    if X.size < 20:
        raise DomainError("rsw_plugin needs at least 20 observations")
    if not np.ptp(X) > 0:
        raise DomainError("rsw_plugin: covariate has zero spread")
    h = _rsw(X, Z)
    if h is None or not np.isfinite(h) or h <= 0:
        log.debug("plug-in bandwidth degenerate, using rule of thumb")
        return rot_bandwidth(X)
    return float(h)


def regression_bandwidths(X, Z, method="plugin"):
    """Bandwidth vector for regressing ``Z`` on the columns of ``X``.

    The univariate selector is applied coordinate by coordinate.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if method == "plugin":
        return np.array([rsw_plugin(X[:, j], Z) for j in range(X.shape[1])])
    if method == "rot":
        return np.array([rot_bandwidth(X[:, j]) for j in range(X.shape[1])])
    raise DomainError(f"unknown bandwidth method {method!r}")


# -- Sheather & Jones solve-the-equation ------------------------------------

_EXACT_PAIRS_MAX_N = 1000
_NBINS = 1000


def _pair_differences(x):
    """Absolute pairwise differences ``i < j`` and their multiplicities."""
    n = x.size
    if n <= _EXACT_PAIRS_MAX_N:
        i, j = np.triu_indices(n, k=1)
        return np.abs(x[i] - x[j]), np.ones(i.size)
    # linear binning, then pair counts per lag
    lo, hi = x.min(), x.max()
    delta = (hi - lo) / (_NBINS - 1)
    pos = (x - lo) / delta
    left = np.minimum(np.floor(pos).astype(int), _NBINS - 2)
    frac = pos - left
    counts = np.bincount(left, 1.0 - frac, _NBINS) + np.bincount(left + 1, frac, _NBINS)
    lags = np.correlate(counts, counts, mode="full")[_NBINS - 1 :]
    lags[0] = 0.5 * (lags[0] - np.sum(counts))
    return np.arange(_NBINS) * delta, lags


def _phi4(diffs, mult, n, h):
    u = diffs / h
    u2 = u * u
    s = np.sum(mult * (u2 * u2 - 6.0 * u2 + 3.0) * np.exp(-0.5 * u2))
    return (2.0 * s + 3.0 * n) / (n * (n - 1) * h**5 * _SQRT_2PI)


def _phi6(diffs, mult, n, h):
    u = diffs / h
    u2 = u * u
    s = np.sum(mult * (u2**3 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) * np.exp(-0.5 * u2))
    return (2.0 * s - 15.0 * n) / (n * (n - 1) * h**7 * _SQRT_2PI)


def sj_plugin(values):
    """Sheather-Jones solve-the-equation bandwidth for a Gaussian KDE.

    Parameters
    ----------
    values : array_like, shape (n,)

    Returns
    -------
    float

    Notes
    -----
    Density functionals are computed from exact pairwise differences for
    ``n <= 1000`` and from linearly binned counts otherwise.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 20:
        raise DomainError("sj_plugin needs at least 20 observations")
    if not np.all(np.isfinite(x)):
        raise DomainError("sj_plugin: non-finite values")
    sd, iqr = _spread(x)
    scale = min(sd, iqr / 1.349)
    if scale <= 0:
        scale = sd
    if not scale > 0:
        raise DomainError("sj_plugin: degenerate sample (zero spread)")

    diffs, mult = _pair_differences(x)
    a = 1.24 * scale * n ** (-1.0 / 7.0)
    b = 1.23 * scale * n ** (-1.0 / 9.0)
    c1 = 1.0 / (2.0 * _SQRT_PI * n)
    td = -_phi6(diffs, mult, n, b)
    sd_a = _phi4(diffs, mult, n, a)
    if not (td > 0 and sd_a > 0):
        log.debug("Sheather-Jones pilot functionals degenerate, using rule of thumb")
        return rot_bandwidth(x)
    alph2 = 1.357 * (sd_a / td) ** (1.0 / 7.0)

    def equation(h):
        return (c1 / _phi4(diffs, mult, n, alph2 * h ** (5.0 / 7.0))) ** 0.2 - h

    hmax = 1.144 * scale * n ** (-0.2)
    lower, upper = 0.1 * hmax, hmax
    tries = 0
    while equation(lower) * equation(upper) > 0:
        if tries > 99:
            log.debug("no Sheather-Jones root bracketed, using rule of thumb")
            return rot_bandwidth(x)
        if tries % 2:
            lower /= 1.2
        else:
            upper *= 1.2
        tries += 1
    return float(brentq(equation, lower, upper, xtol=1e-10 * lower))
