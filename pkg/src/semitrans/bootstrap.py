"""Smooth residual bootstrap for the model validity tests.

Bootstrap data are generated from the fitted model so that they satisfy the
null hypothesis by construction: covariates are resampled from the observed
ones, errors are resampled from the standardized residuals and perturbed by
a small Gaussian ``a_n * xi``, and responses are mapped back through the
inverse transformation at the estimated ``theta``. Each replicate refits the
whole pipeline before computing its statistics.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimator import Dataset, EstimatorConfig, fit, normalize_variant
from .exceptions import BootstrapError, DomainError, RangeError, SemitransError
from .testing import TestStatistics, compute_statistics
from .transform import yj_inverse, yj_range

__all__ = [
    "default_smoothing",
    "BootstrapConfig",
    "TestResult",
    "standardize_residuals",
    "bootstrap_errors",
    "draw_bootstrap_sample",
    "critical_value",
    "bootstrap_pvalue",
    "replicate_rng",
    "run_test",
]

log = logging.getLogger(__name__)

MAX_REDRAWS = 100


def default_smoothing(n):
    """``a_n = 0.5 * n**(-1/4)``."""
    return 0.5 * n ** (-0.25)


@dataclass(frozen=True)
class BootstrapConfig:
    """Settings of the bootstrap test.

    ``smoothing`` maps the sample size to the error perturbation scale
    ``a_n``. ``max_failure_rate`` is the fraction of replicates allowed to
    fail before the whole test is abandoned.
    """

    B: int = 200
    alpha: float = 0.05
    smoothing: object = default_smoothing
    variant: str = "heteroscedastic"
    seed: int = 0
    max_failure_rate: float = 0.05

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise DomainError("B must be a positive integer")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not callable(self.smoothing):
            value = float(self.smoothing)
            if value < 0:
                raise DomainError("a_n must be non-negative")
            object.__setattr__(self, "smoothing", lambda n, _v=value: _v)
        object.__setattr__(self, "variant", normalize_variant(self.variant))

    def a_n(self, n):
        value = float(self.smoothing(n))
        if value < 0:
            raise DomainError("a_n must be non-negative")
        return value


def critical_value(boot, alpha):
    """The ``floor(B * (1 - alpha))``-th order statistic of the bootstrap values.

    Order statistics are counted from the smallest, so this is the
    bootstrap estimate of the ``(1 - alpha)`` quantile.
    """
    boot = np.sort(np.asarray(boot, dtype=float))
    k = int(np.floor(boot.size * (1.0 - alpha)))
    k = min(max(k, 1), boot.size)
    return float(boot[k - 1])


def bootstrap_pvalue(boot, observed):
    """Fraction of bootstrap statistics at least as large as the observed one."""
    boot = np.asarray(boot, dtype=float)
    return float(np.mean(boot >= observed))


@dataclass
class TestResult:
    """Outcome of :func:`run_test` for both statistics."""

    __test__ = False

    observed: TestStatistics
    boot_stats: np.ndarray
    alpha: float
    critical_ks: float
    critical_cm: float
    pvalue_ks: float
    pvalue_cm: float
    reject_ks: bool
    reject_cm: bool
    theta_hat: float
    B: int
    failures: list = field(default_factory=list)
    model: object = None

    @property
    def n_failures(self):
        return len(self.failures)

    def critical(self, stat, alpha=None):
        col = {"ks": 0, "cm": 1}[stat]
        return critical_value(self.boot_stats[:, col], self.alpha if alpha is None else alpha)

    def reject(self, stat, alpha=None):
        return bool(self.observed[stat] > self.critical(stat, alpha))


def standardize_residuals(eps_hat, variant="heteroscedastic"):
    """Center and scale residuals to mean 0 and (1/n) variance 1.

    The homoscedastic variant only centers.
    """
    eps = np.asarray(eps_hat, dtype=float).ravel()
    if eps.size < 2:
        raise DomainError("need at least two residuals")
    centred = eps - eps.mean()
    if normalize_variant(variant) == "homoscedastic":
        return centred
    sd = np.sqrt(np.mean(centred**2))
    if not sd > 0:
        raise DomainError("residuals have zero variance; cannot standardize")
    out = centred / sd
    # one more pass absorbs rounding so the moments hold to ~1e-15
    out -= out.mean()
    return out / np.sqrt(np.mean(out**2))


def bootstrap_errors(standardized, a_n, size, rng):
    """Draw ``eta* + a_n * xi`` with ``eta*`` resampled from ``standardized``."""
    standardized = np.asarray(standardized, dtype=float)
    eta = standardized[rng.integers(standardized.size, size=size)]
    return eta + a_n * rng.standard_normal(size)


def draw_bootstrap_sample(model, cfg, rng, standardized=None):
    """Generate one bootstrap dataset from a fitted model.

    Parameters
    ----------
    model : FittedTransformModel
    cfg : BootstrapConfig
    rng : numpy.random.Generator
    standardized : ndarray, optional
        Precomputed standardized residuals.

    Raises
    ------
    RangeError
        When some ``Z*`` stays outside the range of the transformation
        after :data:`MAX_REDRAWS` redraws of its error.
    """
    data = model.data
    n = data.n
    if standardized is None:
        standardized = standardize_residuals(model.residuals, model.variant)
    a_n = cfg.a_n(n)
    idx = rng.integers(n, size=n)
    m = model.mean_fitted[idx]
    s = model.scale_fitted[idx] if model.variant == "heteroscedastic" else np.ones(n)
    Z = m + s * bootstrap_errors(standardized, a_n, n, rng)
    lo, hi = yj_range(model.theta_hat)
    bad = ~((Z > lo) & (Z < hi))
    tries = 0
    while np.any(bad):
        if tries >= MAX_REDRAWS:
            raise RangeError(
                f"{int(bad.sum())} bootstrap responses outside the range of the "
                f"transformation at theta={model.theta_hat:.4g} after {MAX_REDRAWS} redraws"
            )
        k = int(bad.sum())
        Z[bad] = m[bad] + s[bad] * bootstrap_errors(standardized, a_n, k, rng)
        bad = ~((Z > lo) & (Z < hi))
        tries += 1
    if tries:
        log.debug("bootstrap sample needed %d redraw rounds", tries)
    return Dataset(data.X[idx], yj_inverse(model.theta_hat, Z))


def replicate_rng(seed, b):
    """Independent generator for bootstrap replicate ``b``."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (b,))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(b,))
    return np.random.default_rng(ss)


def _replicate(model, est_cfg, boot_cfg, standardized, b):
    rng = replicate_rng(boot_cfg.seed, b)
    try:
        sample = draw_bootstrap_sample(model, boot_cfg, rng, standardized)
        refit = fit(sample, est_cfg)
        stats = compute_statistics(sample.X, refit.residuals)
    except SemitransError as exc:
        return b, None, f"{type(exc).__name__}: {exc}"
    return b, stats, None


def run_test(data, est_cfg=None, boot_cfg=None, threads=1, model=None):
    """Bootstrap test of the transformation model.

    Parameters
    ----------
    data : Dataset
    est_cfg : EstimatorConfig, optional
        Its variant is overridden by ``boot_cfg.variant``.
    boot_cfg : BootstrapConfig, optional
    threads : int
        Worker threads for the replicates. Results do not depend on it.
    model : FittedTransformModel, optional
        Reuse an existing fit of ``data`` instead of refitting.

    Returns
    -------
    TestResult

    Raises
    ------
    BootstrapError
        If more than ``boot_cfg.max_failure_rate`` of the replicates fail.
    """
    boot_cfg = boot_cfg or BootstrapConfig()
    est_cfg = replace(est_cfg or EstimatorConfig(), variant=boot_cfg.variant)
    if model is None:
        model = fit(data, est_cfg)
    observed = compute_statistics(data.X, model.residuals)
    standardized = standardize_residuals(model.residuals, est_cfg.variant)

    def job(b):
        return _replicate(model, est_cfg, boot_cfg, standardized, b)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(boot_cfg.B)))
    else:
        results = [job(b) for b in range(boot_cfg.B)]

    failures = [(b, msg) for b, _, msg in results if msg is not None]
    if len(failures) > boot_cfg.max_failure_rate * boot_cfg.B:
        raise BootstrapError(
            f"{len(failures)} of {boot_cfg.B} bootstrap replicates failed; "
            f"first: {failures[0][1]}",
            failures,
        )
    boot = np.array([[s.ks, s.cm] for _, s, msg in results if msg is None])
    crit_ks = critical_value(boot[:, 0], boot_cfg.alpha)
    crit_cm = critical_value(boot[:, 1], boot_cfg.alpha)
    return TestResult(
        observed=observed,
        boot_stats=boot,
        alpha=boot_cfg.alpha,
        critical_ks=crit_ks,
        critical_cm=crit_cm,
        pvalue_ks=bootstrap_pvalue(boot[:, 0], observed.ks),
        pvalue_cm=bootstrap_pvalue(boot[:, 1], observed.cm),
        reject_ks=bool(observed.ks > crit_ks),
        reject_cm=bool(observed.cm > crit_cm),
        theta_hat=model.theta_hat,
        B=boot_cfg.B,
        failures=failures,
        model=model,
    )
