"""Independence empirical process of covariates and residuals.

The process compares the joint empirical distribution function of
``(X_i, e_i)`` with the product of the marginal ones. Its Kolmogorov-Smirnov
and Cramer-von Mises functionals are the test statistics.

Both functionals are evaluated on the grid ``{X_i} x {e_j}``. The difference
of step functions only changes at observed values, so for ``d = 1`` the grid
gives the exact supremum and integral. For ``d > 1`` the grid uses the
observed covariate vectors rather than the full coordinate lattice.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["TestStatistics", "joint_ecdf", "ecdf_difference_counts", "compute_statistics"]


@dataclass(frozen=True)
class TestStatistics:
    """Kolmogorov-Smirnov and Cramer-von Mises statistics of one sample."""

    __test__ = False  # keep pytest from collecting this class

    ks: float
    cm: float
    n: int

    def __getitem__(self, name):
        return getattr(self, name)


def _inputs(X, eps):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    eps = np.asarray(eps, dtype=float).ravel()
    if X.shape[0] != eps.size:
        raise ValueError("X and residuals must have the same number of rows")
    return X, eps


def joint_ecdf(X, eps, x, y):
    """Joint empirical distribution function of covariates and residuals.

    ``X_i <= x`` is taken componentwise.
    """
    X, eps = _inputs(X, eps)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    below = np.all(X <= x, axis=1) & (eps <= y)
    return float(np.mean(below))


def ecdf_difference_counts(X, eps):
    """Integer matrix ``n**2 * D(X_i, e_j)``.

    ``D`` is the joint empirical distribution function minus the product
    of the marginals. Working in counts keeps the result exact.
    """
    X, eps = _inputs(X, eps)
    n = eps.size
    # below_x[k, i] = X_k <= X_i componentwise; below_e[k, j] = e_k <= e_j
    below_x = np.all(X[:, None, :] <= X[None, :, :], axis=2).astype(float)
    below_e = (eps[:, None] <= eps[None, :]).astype(float)
    joint = np.rint(below_x.T @ below_e).astype(np.int64)
    cx = below_x.sum(axis=0).astype(np.int64)
    ce = below_e.sum(axis=0).astype(np.int64)
    return n * joint - np.outer(cx, ce)


def compute_statistics(X, eps):
    """KS and CM statistics of the estimated independence process.

    ``ks = sqrt(n) * max |D|`` and ``cm = n * mean(D**2)`` where the mean
    runs over all ``n**2`` pairs ``(X_i, e_j)``, i.e. integration against
    the product of the two marginal empirical measures.

    Returns
    -------
    TestStatistics
    """
    X, eps = _inputs(X, eps)
    n = eps.size
    if n == 0:
        raise ValueError("need at least one observation")
    counts = ecdf_difference_counts(X, eps)
    n2 = float(n) * n
    ks = np.sqrt(n) * np.max(np.abs(counts)) / n2
    sq = counts.astype(float) ** 2
    cm = float(np.sum(sq)) / (n2 * n2 * n)
    return TestStatistics(ks=float(ks), cm=cm, n=n)
