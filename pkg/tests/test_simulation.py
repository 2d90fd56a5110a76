import numpy as np
import pytest
from scipy import stats

from semitrans.estimator import Dataset, EstimatorConfig, fit
from semitrans.exceptions import DomainError
from semitrans.simulation import (
    INFINITE_DOF,
    SimSpec,
    export_fit_curve,
    gen_htm1,
    gen_modelA,
    gen_modelB,
    regression_mean,
    replication_seeds,
    run_experiment,
    skewt_moments,
    skewt_sample,
    table_cells,
)
from semitrans.transform import yj_value


def rng(seed):
    return np.random.default_rng(seed)


def errors_left(data):
    """Recover the errors of model A/B observations with ``x <= 0.5``."""
    x = data.X[:, 0]
    eps = (yj_value(0.0, data.Y) - regression_mean(x)) / x
    return eps[x <= 0.5]


def test_htm1_conditional_variance():
    data = gen_htm1(100_000, 0.5, rng(51))
    x, z = data.X[:, 0], yj_value(0.0, data.Y)
    assert np.var(z[x <= 0.1]) == pytest.approx(0.3025, abs=0.02)
    home = gen_htm1(100_000, 0.0, rng(52))
    x, z = home.X[:, 0], yj_value(0.0, home.Y)
    for lo in (0.0, 0.5, 0.9):
        sel = (x >= lo) & (x < lo + 0.1)
        assert np.var(z[sel] - regression_mean(x[sel])) == pytest.approx(1.0, abs=0.03)


def test_htm1_sigma_at_one():
    # near x = 1 the conditional scale is 1 whatever a is
    for a in (0.0, 0.5, 1.0):
        d = gen_htm1(20_000, a, rng(53))
        x, z = d.X[:, 0], yj_value(0.0, d.Y)
        sel = x > 0.99
        assert np.var(z[sel] - regression_mean(x[sel])) == pytest.approx(1.0, abs=0.15)


def test_htm1_rejects_negative_scale():
    with pytest.raises(DomainError):
        gen_htm1(10, 1.5, rng(0))
    with pytest.raises(DomainError):
        SimSpec("htm1", a=2.0)


def test_model_b_standardized():
    eps = errors_left(gen_modelB(2_000_000, 2.0, rng(54)))
    assert eps.size > 900_000
    assert abs(eps.mean()) < 0.01
    assert abs(eps.var() - 1.0) < 0.02
    big = errors_left(gen_modelB(2_000_000, INFINITE_DOF, rng(55)))
    assert abs(stats.skew(big)) < 0.01


def test_model_a_symmetric_without_skew():
    eps = errors_left(gen_modelA(2_000_000, 0.0, 5.0, rng(56)))
    assert abs(stats.skew(eps)) < 0.02
    assert abs(eps.mean()) < 0.02 and abs(eps.var() - 1.0) < 0.02


def test_model_a_right_half_normal():
    d = gen_modelA(200_000, 100.0, 2.1, rng(57))
    x = d.X[:, 0]
    eps = ((yj_value(0.0, d.Y) - regression_mean(x)) / x)[x > 0.5]
    assert stats.kstest(eps, "norm").statistic < 0.01


def test_skewt_moments():
    assert skewt_moments(0.0, 5.0) == pytest.approx((0.0, 5.0 / 3.0))
    mean, var = skewt_moments(100.0, 5.0)
    draws = skewt_sample(100.0, 5.0, rng(58), 1_000_000)
    assert draws.mean() == pytest.approx(mean, abs=0.02)
    assert draws.var() == pytest.approx(var, abs=0.02)
    with pytest.raises(DomainError):
        skewt_moments(0.0, 2.0)
    with pytest.raises(DomainError):
        skewt_sample(0.0, 1.5, rng(0), 3)


def test_skewt_normal_limit():
    draws = skewt_sample(0.0, INFINITE_DOF, rng(59), 100_000)
    assert stats.kstest(draws, "norm").statistic < 0.01


def test_parameter_bounds():
    with pytest.raises(DomainError):
        SimSpec("modelA", nu=2.0)
    with pytest.raises(DomainError):
        SimSpec("modelB", eta=1.5)
    with pytest.raises(DomainError):
        gen_modelB(10, 1.0, rng(0))
    with pytest.raises(DomainError):
        SimSpec("other")


def test_table_cells():
    assert len(table_cells(1)) == 9
    assert len(table_cells(2)) == 8
    assert len(table_cells(3)) == 8
    assert len(table_cells(4)) == 10
    assert {c.n for c in table_cells(2, n=200)} == {200}
    with pytest.raises(DomainError):
        table_cells(5)


def test_replication_seeds_by_index():
    spec = SimSpec("htm1", n=100, a=1, seed=3)
    same = SimSpec("htm1", n=100, a=1.0, seed=3)
    d1, b1 = replication_seeds(spec, 4)
    d2, b2 = replication_seeds(same, 4)
    assert b1 == b2 and d1.generate_state(2).tolist() == d2.generate_state(2).tolist()
    assert replication_seeds(spec, 5)[1] != b1


def test_single_replication_table():
    cell = SimSpec("htm1", n=100, a=0.5)
    res = run_experiment(1, replications=1, cells=[cell], seed=9)
    data_ss, _ = replication_seeds(SimSpec("htm1", n=100, a=0.5, replications=1, seed=9), 0)
    theta = fit(gen_htm1(100, 0.5, np.random.default_rng(data_ss))).theta_hat
    row = res.rows[0]
    assert row["mean"] == theta and row["mse"] == theta**2
    assert row["replications"] == 1 and row["failures"] == 0


def test_experiment_deterministic_across_threads(tmp_path):
    kw = dict(replications=4, n=100, seed=2, cells=[SimSpec("htm1", n=100, a=0.75)])
    r1 = run_experiment(1, threads=1, **kw)
    r2 = run_experiment(1, threads=3, **kw)
    assert r1.rows == r2.rows
    r1.to_csv(tmp_path / "t1.csv")
    r1.to_json(tmp_path / "t1.json")
    lines = (tmp_path / "t1.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["model", "n", "a"] and len(lines) == 2


def test_rejection_table_layout():
    cell = SimSpec("modelB", n=60, eta=2.0)
    res = run_experiment(4, replications=2, B=5, cells=[cell], est_cfg=EstimatorConfig(grid_points=11))
    row = res.rows[0]
    for key in ("ks_0.05", "cm_0.05", "ks_0.1", "cm_0.1"):
        assert 0.0 <= row[key] <= 1.0
    assert res.config["variant"] == "heteroscedastic"


def test_export_fit_curve():
    data = gen_htm1(80, 0.5, rng(60))
    model = fit(data)
    rows = export_fit_curve(model, grid=50)
    points = [r for r in rows if r["kind"] == "point"]
    curve = [r for r in rows if r["kind"] == "curve"]
    assert len(points) == data.n and len(curve) == 50
    assert np.allclose([r["fitted"] for r in points], model.m_hat.fitted)
    assert np.allclose([r["fitted"] for r in curve], model.m_hat(np.array([r["x"] for r in curve])))


def test_export_fit_curve_affine():
    model = fit(gen_htm1(80, 0.5, rng(61)))
    x = np.linspace(0, 1, 40)
    rows = export_fit_curve(model, Dataset(x, 2 * x + 1), theta=1.0, grid=30)
    for r in rows:
        assert r["fitted"] == pytest.approx(2 * r["x"] + 1, abs=1e-8)
