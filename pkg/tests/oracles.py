"""Slow reference implementations used as test oracles.

Everything here is written with explicit loops and scalar math, sharing no
code with the package beyond the public data types.
"""

import math

import numpy as np


def yj_scalar(theta, y):
    if y >= 0:
        # below 1e-12 the power branch agrees with the log branch to
        # rounding and subnormal theta would underflow
        if abs(theta) < 1e-12:
            return math.log1p(y)
        return math.expm1(theta * math.log1p(y)) / theta
    if abs(2.0 - theta) < 1e-12:
        return -math.log1p(-y)
    return -math.expm1((2.0 - theta) * math.log1p(-y)) / (2.0 - theta)


def yj_log_deriv_scalar(theta, y):
    if y >= 0:
        return (theta - 1.0) * math.log1p(y)
    return (1.0 - theta) * math.log1p(-y)


def yj_inverse_bisect(theta, z, lo=-1e6, hi=1e6, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if yj_scalar(theta, mid) < z:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gauss(u):
    return math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def epan(u):
    return 0.75 * (1.0 - u * u) if abs(u) <= 1.0 else 0.0


def wls_local_poly(X, Z, x, degree, h, kernel="gaussian"):
    """Local polynomial intercept at ``x`` by weighted least squares.

    ``d = 1`` only. Uses raw powers of ``X_i - x`` and ``lstsq`` on the
    square-root weighted system.
    """
    k = gauss if kernel == "gaussian" else epan
    n = len(Z)
    rows, rhs = [], []
    for i in range(n):
        w = k((X[i] - x) / h) / h
        sw = math.sqrt(w)
        rows.append([sw * (X[i] - x) ** p for p in range(degree + 1)])
        rhs.append(sw * Z[i])
    beta, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return float(beta[0])


def kde_loop(residuals, g, y):
    total = 0.0
    for e in residuals:
        total += gauss((e - y) / g)
    return total / (len(residuals) * g)


def profile_loglik_loop(X, Y, theta, h, g_rel, heteroscedastic=True, degree=1):
    """Profiled log-likelihood at ``theta`` with everything done by hand."""
    n = len(Y)
    Z = [yj_scalar(theta, y) for y in Y]
    m = [wls_local_poly(X, Z, x, degree, h) for x in X]
    if heteroscedastic:
        Z2 = [z * z for z in Z]
        s = [wls_local_poly(X, Z2, x, degree, h) for x in X]
        zbar = sum(Z) / n
        floor = 1e-4 * sum((z - zbar) ** 2 for z in Z) / n
        sig = [math.sqrt(max(s[i] - m[i] ** 2, floor)) for i in range(n)]
    else:
        sig = [1.0] * n
    eps = [(Z[i] - m[i]) / sig[i] for i in range(n)]
    ebar = sum(eps) / n
    sd = math.sqrt(sum((e - ebar) ** 2 for e in eps) / n)
    g = g_rel * sd
    total = 0.0
    for i in range(n):
        f = max(kde_loop(eps, g, eps[i]), 1e-10)
        total += math.log(f) + yj_log_deriv_scalar(theta, Y[i])
        if heteroscedastic:
            total -= math.log(sig[i])
    return total


def independence_stats_loop(X, eps):
    """KS and CM statistics by a triple loop over the evaluation grid."""
    X = np.atleast_2d(np.asarray(X, dtype=float).T).T
    n = len(eps)
    ks = 0.0
    cm = 0.0
    for i in range(n):
        fx = sum(all(X[k] <= X[i]) for k in range(n)) / n
        for j in range(n):
            fe = sum(eps[k] <= eps[j] for k in range(n)) / n
            joint = sum(all(X[k] <= X[i]) and eps[k] <= eps[j] for k in range(n)) / n
            D = joint - fx * fe
            ks = max(ks, abs(D))
            cm += D * D
    return math.sqrt(n) * ks, cm / n


def sj_bisect(values, iters=200):
    """Sheather-Jones solve-the-equation bandwidth by bisection.

    Density functionals are full ``n x n`` sums of Gaussian derivatives
    (diagonal included), pilot constants as in the usual normal-reference
    construction.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    q75, q25 = np.percentile(x, [75, 25])
    scale = min(np.std(x, ddof=1), (q75 - q25) / 1.349)
    diffs = (x[:, None] - x[None, :]).ravel()
    root2pi = math.sqrt(2.0 * math.pi)

    def phi4(h):
        d = (diffs / h) ** 2
        s = np.sum(np.exp(-d / 2) * (d * d - 6 * d + 3))
        return s / (n * (n - 1) * h**5 * root2pi)

    def phi6(h):
        d = (diffs / h) ** 2
        s = np.sum(np.exp(-d / 2) * (d**3 - 15 * d * d + 45 * d - 15))
        return s / (n * (n - 1) * h**7 * root2pi)

    a = 1.24 * scale * n ** (-1 / 7)
    b = 1.23 * scale * n ** (-1 / 9)
    ratio = phi4(a) / -phi6(b)
    c1 = 1.0 / (2.0 * math.sqrt(math.pi) * n)

    def eq(h):
        return (c1 / phi4(1.357 * ratio ** (1 / 7) * h ** (5 / 7))) ** 0.2 - h

    hmax = 1.144 * scale * n ** (-0.2)
    lo, hi = 0.1 * hmax, hmax
    while eq(hi) > 0:
        hi *= 1.2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if eq(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
