"""Data generators and the Monte Carlo experiment runner.

All generators share the regression ``m(x) = exp(x) + 1.5`` on
``X ~ U[0, 1]`` and the log transformation (``theta_0 = 0``):

* ``htm1``: ``sigma(x) = 1 + a (x - 1)`` with standard normal errors.
* ``modelA``: ``sigma(x) = x``; errors are standard normal for ``x > 0.5``
  and a standardized skew-t for ``x <= 0.5``.
* ``modelB``: as model A with a standardized chi-square instead.

Tables:

* 1 -- bias and MSE of ``theta_hat`` under ``htm1``.
* 2 -- rejection rates of the homoscedastic test under ``htm1``.
* 3, 4 -- rejection rates of the heteroscedastic test under models A, B.
"""

import csv
import json
import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from .bootstrap import BootstrapConfig, run_test
from .estimator import Dataset, EstimatorConfig, fit
from .exceptions import DomainError, SemitransError
from .smoothing import LocalFit
from .transform import yj_inverse, yj_value

__all__ = [
    "SimSpec",
    "regression_mean",
    "gen_htm1",
    "skewt_moments",
    "skewt_sample",
    "gen_modelA",
    "gen_modelB",
    "generate",
    "table_cells",
    "ExperimentResult",
    "run_experiment",
    "export_fit_curve",
]

log = logging.getLogger(__name__)

MODELS = ("htm1", "modelA", "modelB")
# stands in for an infinite degrees-of-freedom parameter
INFINITE_DOF = 1e6
TABLE_ALPHAS = (0.05, 0.1)


def regression_mean(x):
    return np.exp(x) + 1.5


@dataclass(frozen=True)
class SimSpec:
    """One data-generating setting."""

    model: str = "htm1"
    n: int = 100
    a: float = 0.0
    alpha_skew: float = 0.0
    nu: float = INFINITE_DOF
    eta: float = INFINITE_DOF
    replications: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError("replications must be a positive integer")
        if self.model == "htm1":
            _check_a(self.a)
        if self.model == "modelA" and not self.nu > 2:
            raise DomainError(f"nu must exceed 2, got {self.nu}")
        if self.model == "modelB" and not self.eta >= 2:
            raise DomainError(f"eta must be at least 2, got {self.eta}")

    def generate(self, rng):
        return generate(self, rng)


def _check_a(a):
    # sigma(0) = 1 - a; a = 1 only touches zero at the endpoint
    if not (np.isfinite(a) and a <= 1):
        raise DomainError(f"a={a} makes sigma(x) = 1 + a (x - 1) negative on [0, 1]")


def gen_htm1(n, a, rng):
    """Sample ``Lambda_0(Y) = exp(X) + 1.5 + (1 + a (X - 1)) eps``.

    ``a = 1`` is allowed: ``sigma`` then vanishes only at the single point
    ``x = 0``, which has probability zero.

    Raises
    ------
    DomainError
        If ``a > 1`` (or non-finite), so that ``sigma`` is negative near 0.
    """
    _check_a(a)
    x = rng.uniform(size=n)
    eps = rng.standard_normal(n)
    z = regression_mean(x) + (1.0 + a * (x - 1.0)) * eps
    return Dataset(x, yj_inverse(0.0, z))


def skewt_moments(alpha_skew, nu):
    """Mean and variance of the standard skew-t ``ST(0, 1, alpha, nu)``.

    With ``delta = alpha / sqrt(1 + alpha**2)`` and
    ``b = sqrt(nu / pi) Gamma((nu - 1) / 2) / Gamma(nu / 2)`` the mean is
    ``b delta`` and the variance ``nu / (nu - 2) - (b delta)**2``.
    """
    if not nu > 2:
        raise DomainError(f"skew-t variance needs nu > 2, got {nu}")
    delta = alpha_skew / math.sqrt(1.0 + alpha_skew**2)
    b = math.sqrt(nu / math.pi) * math.exp(gammaln((nu - 1.0) / 2.0) - gammaln(nu / 2.0))
    mean = b * delta
    return mean, nu / (nu - 2.0) - mean**2


def skewt_sample(alpha_skew, nu, rng, size=None):
    """Draw from ``ST(0, 1, alpha, nu)``.

    A skew-normal ``delta |U0| + sqrt(1 - delta**2) U1`` divided by
    ``sqrt(chi2_nu / nu)``.
    """
    if not nu > 2:
        raise DomainError(f"nu must exceed 2, got {nu}")
    delta = alpha_skew / math.sqrt(1.0 + alpha_skew**2)
    u0 = np.abs(rng.standard_normal(size))
    u1 = rng.standard_normal(size)
    sn = delta * u0 + math.sqrt(1.0 - delta**2) * u1
    return sn / np.sqrt(rng.chisquare(nu, size) / nu)


def _split_errors(n, rng, draw_left):
    x = rng.uniform(size=n)
    eps = rng.standard_normal(n)
    left = x <= 0.5
    eps[left] = draw_left(int(left.sum()))
    z = regression_mean(x) + x * eps
    return Dataset(x, yj_inverse(0.0, z))


def gen_modelA(n, alpha_skew, nu, rng):
    """Model A: standardized skew-t errors for ``x <= 0.5``, ``sigma(x) = x``."""
    mean, var = skewt_moments(alpha_skew, nu)
    sd = math.sqrt(var)
    return _split_errors(n, rng, lambda k: (skewt_sample(alpha_skew, nu, rng, k) - mean) / sd)


def gen_modelB(n, eta, rng):
    """Model B: ``(W - eta) / sqrt(2 eta)``, ``W ~ chi2(eta)``, for ``x <= 0.5``."""
    if not eta >= 2:
        raise DomainError(f"eta must be at least 2, got {eta}")
    scale = math.sqrt(2.0 * eta)
    return _split_errors(n, rng, lambda k: (rng.chisquare(eta, k) - eta) / scale)


def generate(spec, rng):
    if spec.model == "htm1":
        return gen_htm1(spec.n, spec.a, rng)
    if spec.model == "modelA":
        return gen_modelA(spec.n, spec.alpha_skew, spec.nu, rng)
    return gen_modelB(spec.n, spec.eta, rng)


# -- experiment runner ---------------------------------------------------------


def table_cells(table, n=None, replications=200, seed=0):
    """The settings of one simulation table as a list of :class:`SimSpec`.

    ``n`` restricts the sample sizes (an int or a sequence).
    """
    table = int(table)
    sizes = {1: (100, 200, 400), 2: (100, 200), 3: (100, 200), 4: (100, 200)}
    if table not in sizes:
        raise DomainError(f"table must be 1, 2, 3 or 4, got {table}")
    ns = sizes[table] if n is None else tuple(np.atleast_1d(n).astype(int).tolist())
    kw = dict(replications=replications, seed=seed)
    if table == 1:
        return [SimSpec("htm1", n=k, a=a, **kw) for a in (0.5, 0.75, 1.0) for k in ns]
    if table == 2:
        return [SimSpec("htm1", n=k, a=a, **kw) for a in (0.0, 0.5, 0.75, 1.0) for k in ns]
    if table == 3:
        params = ((100.0, 2.1), (0.0, 2.1), (0.0, 5.0), (0.0, INFINITE_DOF))
        return [
            SimSpec("modelA", n=k, alpha_skew=s, nu=v, a=1.0, **kw) for s, v in params for k in ns
        ]
    etas = (2.0, 3.0, 5.0, 10.0, INFINITE_DOF)
    return [SimSpec("modelB", n=k, eta=e, a=1.0, **kw) for e in etas for k in ns]


def _cell_key(spec):
    if spec.model == "htm1":
        return f"htm1|n={int(spec.n)}|a={float(spec.a)!r}"
    if spec.model == "modelA":
        return f"modelA|n={int(spec.n)}|skew={float(spec.alpha_skew)!r}|nu={float(spec.nu)!r}"
    return f"modelB|n={int(spec.n)}|eta={float(spec.eta)!r}"


def replication_seeds(spec, rep):
    """Data and bootstrap seed sequences of replication ``rep`` of a cell.

    Derived from the master seed, a hash of the cell settings and the
    replication index only.
    """
    key = zlib.crc32(_cell_key(spec).encode())
    base = np.random.SeedSequence(int(spec.seed), spawn_key=(key, int(rep)))
    data_ss, boot_ss = base.spawn(2)
    return data_ss, int(boot_ss.generate_state(1, np.uint64)[0])


@dataclass
class ExperimentResult:
    """Per-cell summary rows of one simulation table."""

    table: int
    rows: list
    config: dict = field(default_factory=dict)

    @property
    def columns(self):
        return list(self.rows[0]) if self.rows else []

    def to_dict(self):
        return {"table": self.table, "config": self.config, "rows": self.rows}

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)


def _estimate_once(spec, rep, est_cfg):
    data_ss, _ = replication_seeds(spec, rep)
    data = generate(spec, np.random.default_rng(data_ss))
    return fit(data, est_cfg).theta_hat


def _test_once(spec, rep, est_cfg, boot_cfg, alphas):
    data_ss, boot_seed = replication_seeds(spec, rep)
    data = generate(spec, np.random.default_rng(data_ss))
    res = run_test(data, est_cfg, replace(boot_cfg, seed=boot_seed))
    out = {}
    for alpha in alphas:
        for stat in ("ks", "cm"):
            out[(stat, alpha)] = res.reject(stat, alpha)
    return out


def _map(fn, items, threads):
    def safe(item):
        try:
            return fn(item)
        except SemitransError as exc:
            log.info("replication %s failed: %s", item, exc)
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(safe, items))
    return [safe(item) for item in items]


def _spec_columns(spec):
    row = {"model": spec.model, "n": spec.n}
    if spec.model == "htm1":
        row["a"] = spec.a
    elif spec.model == "modelA":
        row["alpha_skew"] = spec.alpha_skew
        row["nu"] = spec.nu
    else:
        row["eta"] = spec.eta
    return row


def run_experiment(
    table,
    replications=200,
    B=200,
    n=None,
    seed=0,
    threads=1,
    alphas=TABLE_ALPHAS,
    cells=None,
    est_cfg=None,
    smoothing=None,
):
    """Monte Carlo reproduction of one simulation table.

    Parameters
    ----------
    table : {1, 2, 3, 4}
    replications : int
        Samples per cell.
    B : int
        Bootstrap replicates per test (tables 2-4).
    n : int or sequence of int, optional
        Restrict the sample sizes.
    seed : int
        Master seed; every replication derives its own streams from it.
    threads : int
        Worker threads across replications. Results do not depend on it.
    alphas : sequence of float
        Levels at which rejection rates are reported (tables 2-4).
    cells : list of SimSpec, optional
        Custom settings replacing the table defaults. Their replication
        count and seed are overridden by the arguments above.
    est_cfg : EstimatorConfig, optional
        Estimator settings; the variant is set by the table (heteroscedastic
        for tables 1, 3 and 4, homoscedastic for table 2).
    smoothing : float or callable, optional
        Bootstrap error perturbation ``a_n``; default ``0.5 n**(-1/4)``.

    Returns
    -------
    ExperimentResult
        Table 1 rows carry ``mean`` and ``mse`` of ``theta_hat``; tables 2-4
        carry rejection rates ``ks_<alpha>`` and ``cm_<alpha>``. Every row has
        ``replications`` and ``failures`` (replications that raised).
    """
    table = int(table)
    if cells is None:
        cells = table_cells(table, n=n, replications=replications, seed=seed)
    else:
        cells = [replace(c, replications=replications, seed=seed) for c in cells]
    variant = "homoscedastic" if table == 2 else "heteroscedastic"
    est_cfg = replace(est_cfg or EstimatorConfig(), variant=variant)
    boot_kw = {"B": B, "variant": variant}
    if smoothing is not None:
        boot_kw["smoothing"] = smoothing
    boot_cfg = BootstrapConfig(**boot_kw)

    rows = []
    for spec in cells:
        reps = range(spec.replications)
        row = _spec_columns(spec)
        row["replications"] = spec.replications
        if table == 1:
            est = _map(lambda r: _estimate_once(spec, r, est_cfg), reps, threads)
            theta = np.array([t for t in est if t is not None])
            row["failures"] = len(est) - theta.size
            # deviations from the true value theta_0 = 0
            row["mean"] = float(theta.mean()) if theta.size else float("nan")
            row["mse"] = float(np.mean(theta**2)) if theta.size else float("nan")
        else:
            out = _map(lambda r: _test_once(spec, r, est_cfg, boot_cfg, alphas), reps, threads)
            ok = [o for o in out if o is not None]
            row["failures"] = len(out) - len(ok)
            for alpha in alphas:
                for stat in ("ks", "cm"):
                    rate = np.mean([o[(stat, alpha)] for o in ok]) if ok else float("nan")
                    row[f"{stat}_{alpha:g}"] = float(rate)
        log.info("table %d cell %s done", table, row)
        rows.append(row)

    config = {
        "table": table,
        "replications": replications,
        "B": B if table != 1 else None,
        "seed": seed,
        "alphas": list(alphas),
        "variant": variant,
        "estimator": {k: v for k, v in asdict(est_cfg).items()},
    }
    return ExperimentResult(table=table, rows=rows, config=config)


def export_fit_curve(model, data=None, theta=None, grid=200):
    """Scatter and fitted-curve rows for plotting ``Lambda_theta(Y)`` against ``X``.

    Parameters
    ----------
    model : FittedTransformModel
    data : Dataset, optional
        Defaults to the data the model was fitted on.
    theta : float, optional
        Transformation parameter; defaults to ``model.theta_hat``. At any
        other value the mean is re-smoothed with the model's bandwidths.
    grid : int
        Number of points of the dense curve (``d = 1`` only).

    Returns
    -------
    list of dict
        Rows with keys ``kind`` (``"point"`` or ``"curve"``), ``x`` (or
        ``x1``..``xd``), ``z`` (blank for curve rows) and ``fitted``.
    """
    data = model.data if data is None else data
    theta = model.theta_hat if theta is None else float(theta)
    if theta == model.theta_hat and data is model.data:
        mean = model.m_hat
    else:
        cfg = model.config
        Z = yj_value(theta, data.Y)
        mean = LocalFit(data.X, Z, cfg.degree, model.bandwidths.h, cfg.kernel)
    Z = yj_value(theta, data.Y)
    fitted = mean(data.X)
    names = ["x"] if data.d == 1 else [f"x{j + 1}" for j in range(data.d)]
    rows = []
    for i in range(data.n):
        row = {"kind": "point"}
        row.update(zip(names, data.X[i].tolist()))
        row["z"] = float(Z[i])
        row["fitted"] = float(fitted[i])
        rows.append(row)
    if data.d == 1 and grid > 0:
        xs = np.linspace(data.X[:, 0].min(), data.X[:, 0].max(), int(grid))
        for x, f in zip(xs, mean(xs)):
            rows.append({"kind": "curve", "x": float(x), "z": "", "fitted": float(f)})
    return rows
