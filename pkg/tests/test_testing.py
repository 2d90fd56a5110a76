import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import independence_stats_loop
from semitrans.estimator import EstimatorConfig, fit
from semitrans.simulation import gen_htm1
from semitrans.testing import TestStatistics, compute_statistics, joint_ecdf


def test_joint_ecdf_examples():
    X = np.array([0.0, 1.0])
    eps = np.array([-1.0, 1.0])
    assert joint_ecdf(X, eps, 5.0, 5.0) == 1.0
    assert joint_ecdf(X, eps, -5.0, -5.0) == 0.0
    assert joint_ecdf(X, eps, 0.0, -1.0) == 0.5


def test_joint_ecdf_componentwise():
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    eps = np.array([0.0, 0.0])
    assert joint_ecdf(X, eps, [1.0, 0.5], 0.0) == 0.5
    assert joint_ecdf(X, eps, [1.0, 1.0], 0.0) == 1.0


def test_statistics_examples():
    assert compute_statistics([3.0], [0.5]) == TestStatistics(0.0, 0.0, 1)
    s = compute_statistics([0.0, 1.0], [-1.0, 1.0])
    assert s.ks == pytest.approx(math.sqrt(2) / 4, abs=1e-12)
    assert s.cm == pytest.approx(1 / 32, abs=1e-15)
    assert s["ks"] == s.ks and s.n == 2


def test_statistics_affine_covariate():
    rng = np.random.default_rng(31)
    X, eps = rng.uniform(size=40), rng.standard_normal(40)
    assert compute_statistics(10 * X + 3, eps) == compute_statistics(X, eps)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 25), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_matches_triple_loop(n, d, seed):
    rng = np.random.default_rng(seed)
    # few distinct values so that ties are exercised
    X = rng.integers(0, 4, (n, d)).astype(float)
    eps = rng.integers(0, 5, n).astype(float)
    ours = compute_statistics(X, eps)
    ks, cm = independence_stats_loop(X, eps)
    assert ours.ks == pytest.approx(ks, abs=1e-12)
    assert ours.cm == pytest.approx(cm, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    arrays(float, 15, elements=st.floats(-10, 10)),
    arrays(float, 15, elements=st.floats(-10, 10)),
    st.randoms(use_true_random=False),
)
def test_rank_invariance_and_permutation(X, eps, r):
    base = compute_statistics(X, eps)
    # strictly increasing relabelling of the distinct covariate values
    levels, codes = np.unique(X, return_inverse=True)
    new_levels = np.cumsum(np.exp(np.linspace(-3, 3, levels.size))) - 50.0
    assert compute_statistics(new_levels[codes], eps) == base
    perm = list(range(15))
    r.shuffle(perm)
    assert compute_statistics(X[perm], eps[perm]) == base
    assert 0 <= base.ks <= math.sqrt(15)
    assert 0 <= base.cm <= 15


def test_power_ordering_homoscedastic():
    cfg = EstimatorConfig(variant="homoscedastic")
    means = {}
    for a in (0.0, 1.0):
        cms = []
        for seed in range(50):
            data = gen_htm1(100, a, np.random.default_rng(300 + seed))
            cms.append(compute_statistics(data.X, fit(data, cfg).residuals).cm)
        means[a] = np.mean(cms)
    assert means[1.0] > means[0.0]
