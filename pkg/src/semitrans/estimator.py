"""Profile likelihood estimation of the transformation parameter.

For a trial ``theta`` the nuisance functions are replaced by nonparametric
estimates computed from ``Z = Lambda_theta(Y)``: a local polynomial mean
``m``, a variance ``s - m**2`` (``s`` smoothing ``Z**2``) and a kernel
density of the standardized residuals. The profiled log-likelihood

    sum_i log f(e_i) + log Lambda'_theta(Y_i) - log sigma(X_i)

is maximized over a grid followed by golden-section refinement. The
homoscedastic variant fixes ``sigma = 1``.

Bandwidths are chosen once at a pilot ``theta`` (the midpoint of the search
interval) and held fixed during the search, so the smoother matrix is built
once per dataset. The density bandwidth is stored relative to the residual
standard deviation and rescaled at each ``theta``. After the search the
bandwidths are re-selected at the estimate for the final fit.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import regression_bandwidths, rot_bandwidth, sj_plugin
from .exceptions import DomainError, EstimationError, SemitransError
from .smoothing import (
    KERNELS,
    VARIANCE_GUARDS,
    KernelDensity,
    LocalFit,
    VarianceFit,
    guard_variance,
    smoother_weights,
    variance_floor,
)
from .transform import DEFAULT_THETA_INTERVAL, yj_log_deriv_y, yj_value

__all__ = [
    "VARIANTS",
    "Dataset",
    "EstimatorConfig",
    "Bandwidths",
    "FittedTransformModel",
    "ProfileObjective",
    "select_bandwidths",
    "profile_loglik",
    "golden_section_max",
    "fit",
    "empirical_error_cdf",
]

log = logging.getLogger(__name__)

VARIANTS = ("heteroscedastic", "homoscedastic")

_VARIANT_ALIASES = {
    "hetero": "heteroscedastic",
    "heteroscedastic": "heteroscedastic",
    "homo": "homoscedastic",
    "homoscedastic": "homoscedastic",
}

_MIN_N = 10
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def normalize_variant(variant):
    try:
        return _VARIANT_ALIASES[variant]
    except KeyError:
        raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@dataclass(frozen=True)
class Dataset:
    """``n`` observations of a ``d``-dimensional covariate and a response."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        Y = np.array(self.Y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[1] < 1:
            raise DomainError("X must be an n x d matrix with d >= 1")
        if X.shape[0] != Y.size:
            raise DomainError(f"X has {X.shape[0]} rows but Y has {Y.size} values")
        if Y.size < 1:
            raise DomainError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DomainError("dataset contains non-finite values")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.Y.size

    @property
    def d(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class EstimatorConfig:
    """Search policy and smoothing choices for :func:`fit`.

    ``theta_interval`` defaults to ``[-2, 4]``; this admissible set is a
    package choice, not something the model dictates.

    ``variance_guard`` decides what happens where ``s - m**2`` falls below
    the variance floor: ``"floor"`` clamps, ``"local_constant"`` substitutes
    the local constant variance estimate (then clamps).
    """

    theta_interval: tuple = DEFAULT_THETA_INTERVAL
    grid_points: int = 61
    refine_tol: float = 1e-4
    degree: int = 1
    kernel: str = "gaussian"
    density_kernel: str = "gaussian"
    variant: str = "heteroscedastic"
    density_floor: float = 1e-10
    bandwidth: str = "plugin"
    variance_guard: str = "floor"

    def __post_init__(self):
        lo, hi = (float(v) for v in self.theta_interval)
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise DomainError(f"invalid theta interval [{lo}, {hi}]")
        object.__setattr__(self, "theta_interval", (lo, hi))
        if int(self.grid_points) < 5:
            raise DomainError("grid_points must be at least 5")
        if not self.refine_tol > 0:
            raise DomainError("refine_tol must be positive")
        if int(self.degree) != self.degree or self.degree < 0:
            raise DomainError("degree must be a non-negative integer")
        if self.kernel not in KERNELS or self.density_kernel not in KERNELS:
            raise DomainError(f"kernels must be one of {KERNELS}")
        if not self.density_floor > 0:
            raise DomainError("density_floor must be positive")
        if self.bandwidth not in ("plugin", "rot"):
            raise DomainError("bandwidth must be 'plugin' or 'rot'")
        if self.variance_guard not in VARIANCE_GUARDS:
            raise DomainError(f"variance_guard must be one of {VARIANCE_GUARDS}")
        object.__setattr__(self, "variant", normalize_variant(self.variant))

    @property
    def heteroscedastic(self):
        return self.variant == "heteroscedastic"


@dataclass(frozen=True)
class Bandwidths:
    """Smoothing parameters used by the profile likelihood.

    ``h`` holds one regression bandwidth per covariate (covariate units).
    ``g`` is the residual density bandwidth in units of the residual
    standard deviation: at a given ``theta`` the KDE uses ``g * sd(e)``.
    """

    h: np.ndarray
    g: float

    def __post_init__(self):
        h = np.atleast_1d(np.array(self.h, dtype=float))
        if not np.all(np.isfinite(h) & (h > 0)):
            raise DomainError("regression bandwidths must be positive")
        if not (np.isfinite(self.g) and self.g > 0):
            raise DomainError("density bandwidth must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", float(self.g))


class ProfileObjective:
    """Profiled log-likelihood as a function of ``theta`` for fixed bandwidths.

    The local polynomial smoother matrix at the observed covariates is built
    once; each evaluation then costs two matrix-vector products and one
    ``n x n`` kernel sum.
    """

    def __init__(self, data, cfg, bw, smoother=None):
        if data.n < _MIN_N:
            raise DomainError(f"need at least {_MIN_N} observations, got {data.n}")
        self.data = data
        self.cfg = cfg
        self.bw = bw
        if smoother is None:
            smoother = smoother_weights(data.X, data.X, cfg.degree, bw.h, cfg.kernel)
        self.smoother = smoother
        self.fallback_smoother = _fallback_smoother(data, cfg, bw.h)

    def components(self, theta):
        """All intermediate quantities at ``theta`` as a dict."""
        cfg = self.cfg
        Y = self.data.Y
        Z = yj_value(theta, Y)
        if cfg.heteroscedastic:
            m, sigma = _mean_scale(Z, self.smoother, self.fallback_smoother)
            eps = (Z - m) / sigma
        else:
            m = self.smoother @ Z
            sigma = np.ones_like(Z)
            eps = Z - m
        if not np.all(np.isfinite(eps)):
            raise EstimationError(f"non-finite residuals at theta={theta:.6g}")
        scale = float(np.std(eps))
        if not scale > _spread_tol(Z):
            raise EstimationError(f"residuals have zero spread at theta={theta:.6g}")
        g = self.bw.g * scale
        dens = KernelDensity(eps, g, cfg.density_kernel)(eps)
        dens = np.maximum(dens, cfg.density_floor)
        log_jac = yj_log_deriv_y(theta, Y)
        terms = np.log(dens) + log_jac - np.log(sigma)
        return {
            "Z": Z,
            "mean": m,
            "scale": sigma,
            "residuals": eps,
            "density": dens,
            "density_bandwidth": g,
            "loglik": float(np.sum(terms)),
        }

    def __call__(self, theta):
        return self.components(theta)["loglik"]


def _spread_tol(Z):
    # residual spread at rounding level means an exact fit
    return 1e-12 * max(float(np.max(np.abs(Z))), np.finfo(float).tiny)


def _fallback_smoother(data, cfg, h):
    if cfg.heteroscedastic and cfg.variance_guard == "local_constant":
        return smoother_weights(data.X, data.X, 0, h, cfg.kernel)
    return None


def _mean_scale(Z, L, L0=None):
    """Fitted mean and guarded scale at the design points."""
    ZZ = np.column_stack((Z, Z * Z))
    fits = L @ ZZ
    m = fits[:, 0]
    fallback = None
    if L0 is not None:
        f0 = L0 @ ZZ
        fallback = f0[:, 1] - f0[:, 0] ** 2
    v = guard_variance(fits[:, 1] - m * m, variance_floor(Z), fallback)
    return m, np.sqrt(v)


def _residuals_at(data, Z, L, cfg, h):
    if cfg.heteroscedastic:
        m, sigma = _mean_scale(Z, L, _fallback_smoother(data, cfg, h))
        return (Z - m) / sigma
    return Z - L @ Z


def select_bandwidths(data, theta, cfg):
    """Data-driven bandwidths at a given ``theta``.

    ``h`` comes from the regression selector applied to
    ``(X, Lambda_theta(Y))``; ``g`` from Sheather-Jones on the residuals of
    that fit, divided by their standard deviation.
    """
    return _select(data, theta, cfg)[0]


def _select(data, theta, cfg):
    # also returns the smoother matrix so callers need not rebuild it
    Z = yj_value(theta, data.Y)
    if cfg.bandwidth == "plugin" and data.n >= 20:
        h = regression_bandwidths(data.X, Z, "plugin")
    else:
        h = regression_bandwidths(data.X, Z, "rot")
    L = smoother_weights(data.X, data.X, cfg.degree, h, cfg.kernel)
    eps = _residuals_at(data, Z, L, cfg, h)
    scale = float(np.std(eps))
    if not (scale > _spread_tol(Z) and np.isfinite(scale)):
        raise EstimationError(f"degenerate residuals at pilot theta={theta:.6g}")
    if cfg.bandwidth == "plugin" and data.n >= 20:
        g = sj_plugin(eps)
    else:
        g = rot_bandwidth(eps)
    return Bandwidths(h=h, g=g / scale), L


def profile_loglik(data, theta, cfg, bw):
    """Profiled log-likelihood at a single ``theta``."""
    lo, hi = cfg.theta_interval
    if not lo <= theta <= hi:
        raise DomainError(f"theta={theta} outside the search interval [{lo}, {hi}]")
    return ProfileObjective(data, cfg, bw)(theta)


def golden_section_max(f, a, b, tol):
    """Maximize a unimodal ``f`` on ``[a, b]`` by golden-section search.

    Returns
    -------
    (x, fx, evaluations)
        Best point found, its value, and every ``(x, f(x))`` pair visited.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    seen = []

    def ev(x):
        fx = f(x)
        seen.append((x, fx))
        return fx

    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = ev(c), ev(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = ev(d)
    x, fx = max(seen, key=lambda p: p[1])
    return x, fx, seen


@dataclass
class FittedTransformModel:
    """Result of :func:`fit`.

    ``mean_fitted`` and ``scale_fitted`` hold ``m(X_i)`` and ``sigma(X_i)``
    at the observed covariates; ``m_hat`` and ``sigma_hat`` evaluate
    anywhere. In the homoscedastic variant ``sigma_hat`` is identically one.
    """

    theta_hat: float
    m_hat: LocalFit
    sigma_hat: object
    residuals: np.ndarray
    loglik: float
    bandwidths: Bandwidths
    variant: str
    data: Dataset
    mean_fitted: np.ndarray
    scale_fitted: np.ndarray
    config: EstimatorConfig
    profile: list = field(default_factory=list)

    @property
    def n(self):
        return self.residuals.size

    def error_cdf(self, y):
        return empirical_error_cdf(self, y)


class UnitScale:
    """Constant scale function used by the homoscedastic variant."""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return 1.0
        return np.ones(x.shape[0])

    @property
    def fitted(self):
        return None


def _search(obj, cfg):
    lo, hi = cfg.theta_interval
    grid = np.linspace(lo, hi, int(cfg.grid_points))
    values = np.full(grid.size, -np.inf)
    failures = {}
    for k, t in enumerate(grid):
        try:
            v = obj(t)
        except SemitransError as exc:
            failures[float(t)] = str(exc)
            continue
        if np.isfinite(v):
            values[k] = v
        else:
            failures[float(t)] = "non-finite objective"
    if not np.any(np.isfinite(values)):
        raise EstimationError("profile likelihood failed at every grid point", failures)
    k = int(np.argmax(values))
    profile = [(float(t), float(v)) for t, v in zip(grid, values)]
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]

    def safe(t):
        try:
            v = obj(t)
        except SemitransError:
            return -np.inf
        return v if np.isfinite(v) else -np.inf

    t_ref, v_ref, seen = golden_section_max(safe, a, b, cfg.refine_tol)
    profile.extend((float(t), float(v)) for t, v in seen)
    if v_ref >= values[k]:
        return float(t_ref), profile
    return float(grid[k]), profile


def fit(data, cfg=None):
    """Estimate ``theta`` by profile likelihood and assemble the fitted model.

    Parameters
    ----------
    data : Dataset
    cfg : EstimatorConfig, optional

    Returns
    -------
    FittedTransformModel

    Raises
    ------
    EstimationError
        When the objective cannot be evaluated anywhere on the grid; its
        ``diagnostics`` attribute maps each theta to the failure.
    """
    cfg = cfg or EstimatorConfig()
    if data.n < _MIN_N:
        raise DomainError(f"need at least {_MIN_N} observations, got {data.n}")
    lo, hi = cfg.theta_interval
    profile = []
    if lo == hi:
        theta_hat = lo
    else:
        pilot = 0.5 * (lo + hi)
        bw, L = _select(data, pilot, cfg)
        theta_hat, profile = _search(ProfileObjective(data, cfg, bw, L), cfg)

    bw, L = _select(data, theta_hat, cfg)
    obj = ProfileObjective(data, cfg, bw, L)
    comp = obj.components(theta_hat)
    Z = comp["Z"]
    m_hat = LocalFit(data.X, Z, cfg.degree, bw.h, cfg.kernel, fitted=comp["mean"])
    if cfg.heteroscedastic:
        s_fitted = obj.smoother @ (Z * Z)
        second = LocalFit(data.X, Z * Z, cfg.degree, bw.h, cfg.kernel, fitted=s_fitted)
        fallback = None
        if obj.fallback_smoother is not None:
            L0 = obj.fallback_smoother
            fallback = (
                LocalFit(data.X, Z, 0, bw.h, cfg.kernel, fitted=L0 @ Z),
                LocalFit(data.X, Z * Z, 0, bw.h, cfg.kernel, fitted=L0 @ (Z * Z)),
            )
        sigma_hat = VarianceFit(m_hat, second, variance_floor(Z), fallback)
    else:
        sigma_hat = UnitScale()
    residuals = comp["residuals"]
    residuals.setflags(write=False)
    return FittedTransformModel(
        theta_hat=float(theta_hat),
        m_hat=m_hat,
        sigma_hat=sigma_hat,
        residuals=residuals,
        loglik=comp["loglik"],
        bandwidths=bw,
        variant=cfg.variant,
        data=data,
        mean_fitted=comp["mean"],
        scale_fitted=comp["scale"],
        config=cfg,
        profile=profile,
    )


def empirical_error_cdf(model, y):
    """Empirical distribution function of the fitted residuals at ``y``."""
    res = np.sort(model.residuals if hasattr(model, "residuals") else np.asarray(model))
    out = np.searchsorted(res, np.asarray(y, dtype=float), side="right") / res.size
    return float(out) if np.ndim(y) == 0 else out
