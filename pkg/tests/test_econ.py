import numpy as np
import pandas as pd
import pytest

from capspace.econ import (
    CollinearityError,
    ConvergenceError,
    DesignMatrix,
    GROWTH_SPECS,
    add_derived_columns,
    growth_regression,
    ordered_logit,
    ols_hc1,
    significance_stars,
    vif,
)


def design(x, y, names=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != len(y):
        x = x.T
    names = tuple(names or (f"x{i}" for i in range(x.shape[1])))
    ids = tuple(f"obs{i}" for i in range(len(y)))
    return DesignMatrix(ids=ids, names=names, x=x, y=np.asarray(y, dtype=float))


def test_ols_exact_fit():
    x = np.arange(5.0)
    res = ols_hc1(design(x, 2 * x + 1))
    np.testing.assert_allclose(res.coefficients, [2.0, 1.0], atol=1e-10)
    assert res.r_squared == pytest.approx(1.0)
    np.testing.assert_allclose(res.se, 0.0, atol=1e-8)


def test_ols_hc1_three_point_oracle():
    # x=(0,1,2), y=(0,1,3): slope 3/2, intercept -1/6,
    # sandwich gives var(slope)=1/24, var(intercept)=7/72
    res = ols_hc1(design([0.0, 1.0, 2.0], [0.0, 1.0, 3.0]))
    np.testing.assert_allclose(res.coefficients, [1.5, -1 / 6], atol=1e-10)
    np.testing.assert_allclose(res.se, [np.sqrt(1 / 24), np.sqrt(7 / 72)], atol=1e-10)


def test_ols_residuals_orthogonal():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((40, 3))
    y = x @ [1.0, -2.0, 0.5] + rng.standard_normal(40)
    res = ols_hc1(design(x, y))
    xd = np.hstack([x, np.ones((40, 1))])
    resid = y - xd @ res.coefficients
    assert np.max(np.abs(xd.T @ resid)) <= 1e-8 * np.linalg.norm(y)


def test_ols_hc1_equals_classical_under_constant_residuals():
    # alternating +-c residuals orthogonal to the design
    x = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    e = np.array([1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0]) * 0.3
    y = 2 * x + e
    res = ols_hc1(design(x, y))
    n, k = 8, 2
    xd = np.hstack([x[:, None], np.ones((8, 1))])
    resid = y - xd @ res.coefficients
    s2 = resid @ resid / (n - k)
    classical = np.sqrt(np.diag(s2 * np.linalg.inv(xd.T @ xd)))
    # constant-magnitude residuals: HC1 = classical * sqrt((n-k)/n) * sqrt(n/(n-k))
    np.testing.assert_allclose(res.se, classical, rtol=1e-10)


def test_ols_collinear_named():
    x = np.column_stack([np.arange(6.0), 2 * np.arange(6.0)])
    with pytest.raises(CollinearityError, match="x1"):
        ols_hc1(design(x, np.arange(6.0)))


def test_ols_permutation_null():
    rng = np.random.default_rng(1)
    hits = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        x = r.standard_normal(500)
        y = r.standard_normal(500)
        res = ols_hc1(design(x, y))
        if abs(res.t_values[0]) < 1.96:
            hits += 1
    assert hits >= 93
    _ = rng


def test_vif_orthogonal_is_one():
    x = np.kron(np.eye(2), np.ones(4)).T  # orthogonal after centering? use designed data
    rng = np.random.default_rng(2)
    a = rng.standard_normal(200)
    b = rng.standard_normal(200)
    b -= a * (a @ b) / (a @ a)  # make exactly orthogonal, also to intercept
    a -= a.mean()
    b -= b.mean()
    v = vif(np.column_stack([a, b]))
    np.testing.assert_allclose(v, 1.0, atol=0.02)
    _ = x


def test_vif_duplicate_infinite():
    a = np.arange(10.0)
    v = vif(np.column_stack([a, a]))
    assert np.isinf(v).all()


def test_vif_near_duplicate_large():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(300)
    b = a + rng.standard_normal(300) * 0.01
    v = vif(np.column_stack([a, b]))
    assert np.all(v > 10)


def simulate_ologit(rng, n=500, beta=1.0):
    x = rng.standard_normal(n)
    latent = beta * x + rng.logistic(size=n)
    cuts = np.quantile(latent, [0.33, 0.66])
    y = np.digitize(latent, cuts).astype(float)
    return x, y


def test_ordered_logit_recovers_effect():
    rng = np.random.default_rng(0)
    x, y = simulate_ologit(rng, n=2000, beta=1.5)
    res = ordered_logit(design(x, y))
    assert res.coefficients[0] == pytest.approx(1.5, abs=0.25)
    assert np.all(np.diff(res.thresholds) > 0)
    assert res.lr_chi2 > 0
    assert 0 < res.pseudo_r_squared < 1


def test_ordered_logit_2x2_closed_form():
    # binary x, binary y; MLE matches the contingency-table log odds
    x = np.array([0.0] * 40 + [1.0] * 60)
    y = np.array([0.0] * 30 + [1.0] * 10 + [0.0] * 15 + [1.0] * 45)
    res = ordered_logit(design(x, y))
    alpha = np.log(30 / 10)
    beta = alpha + np.log(45 / 15)
    assert res.thresholds[0] == pytest.approx(alpha, abs=1e-6)
    assert res.coefficients[0] == pytest.approx(beta, abs=1e-6)


def test_ordered_logit_separation_error():
    x = np.arange(40.0)
    y = (x > 19.5).astype(float)
    with pytest.raises(ConvergenceError, match="separation"):
        ordered_logit(design(x, y))


def test_ordered_logit_null_independence():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(500)
        y = rng.integers(0, 3, 500).astype(float)
        res = ordered_logit(design(x, y))
        if res.pseudo_r_squared < 0.02 and res.lr_p > 0.05:
            hits += 1
    assert hits >= 90


def test_stars():
    assert significance_stars(0.005) == "***"
    assert significance_stars(0.02) == "**"
    assert significance_stars(0.07) == "*"
    assert significance_stars(0.5) == ""


def make_panel(n=120, seed=0):
    rng = np.random.default_rng(seed)
    eci = rng.standard_normal(n)
    k1 = 0.6 * eci + 0.4 * rng.standard_normal(n)
    log_gdp = 9 + 0.65 * eci + rng.standard_normal(n) * 0.5
    growth = 0.4 * eci - 0.5 * log_gdp + rng.standard_normal(n) + 6
    return pd.DataFrame(
        {
            "eci": eci,
            "k1": k1,
            "log_gdp_per_capita": log_gdp,
            "investment_gdp_ratio": rng.uniform(10, 40, n),
            "export_gdp_ratio": rng.uniform(10, 90, n),
            "population": rng.uniform(1, 300, n),
            "growth": growth,
        },
        index=[f"c{i}" for i in range(n)],
    )


def test_growth_specs_column_lists():
    assert GROWTH_SPECS[1] == ["eci", "log_gdp_per_capita"]
    assert "population" not in GROWTH_SPECS[2]  # dropped for collinearity
    assert "population" in GROWTH_SPECS[4]
    for cols in GROWTH_SPECS.values():
        assert "diversity" not in cols


def test_growth_regression_runs_all_specs():
    panel = make_panel()
    for spec in (1, 2, 3, 4):
        res = growth_regression(panel, spec)
        assert res.n == len(panel)
        assert res.names[-1] == "const"
    with pytest.raises(ValueError, match="unknown spec"):
        growth_regression(panel, 9)


def test_add_derived_columns_centered():
    panel = add_derived_columns(make_panel())
    assert "sq_log_gdp_per_capita" in panel
    assert "eci_squared" in panel
    centered = panel["log_gdp_per_capita"] - panel["log_gdp_per_capita"].mean()
    np.testing.assert_allclose(panel["sq_log_gdp_per_capita"], centered**2)
