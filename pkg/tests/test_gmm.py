import numpy as np
import pytest

from capspace.gmm import fit_gmm, gmm_ks_test, select_n_by_aic


def test_em_loglik_monotone():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(-2, 1, 300), rng.normal(2, 1, 300)])
    fit = fit_gmm(x, 2, seed=1)
    trace = np.array(fit.loglik_trace)
    assert np.all(np.diff(trace) >= -1e-10)


def test_components_sorted_by_mean():
    rng = np.random.default_rng(1)
    x = np.concatenate([rng.normal(3, 0.5, 200), rng.normal(-3, 0.5, 200)])
    fit = fit_gmm(x, 2, seed=0)
    assert fit.means[0] < fit.means[1]
    assert fit.weights.sum() == pytest.approx(1.0)


def test_mixture_mean_matches_sample():
    rng = np.random.default_rng(2)
    x = np.concatenate([rng.normal(-1, 0.7, 500), rng.normal(2, 0.7, 500)])
    fit = fit_gmm(x, 2, seed=0)
    assert fit.mixture_mean == pytest.approx(x.mean(), abs=1e-6)


def test_aic_parameter_count():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 1, 400)
    fit = fit_gmm(x, 1, seed=0)
    # k = 3n - 1 = 2 for one component
    assert fit.aic == pytest.approx(2 * 2 - 2 * fit.log_likelihood)


def test_aic_selects_correct_n():
    rng = np.random.default_rng(4)
    uni = rng.normal(0, 1, 2000)
    bi = np.concatenate([rng.normal(-5, 1, 1000), rng.normal(5, 1, 1000)])
    assert select_n_by_aic(uni, 3, seed=0)[0] == 1
    assert select_n_by_aic(bi, 3, seed=0)[0] == 2


def test_ks_pvalue_high_for_true_model():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(-2, 1, 400), rng.normal(2, 1, 400)])
    fit = fit_gmm(x, 2, seed=0)
    assert gmm_ks_test(fit, x) > 0.05


def test_sampling_roundtrip():
    rng = np.random.default_rng(6)
    x = np.concatenate([rng.normal(-3, 0.5, 500), rng.normal(3, 0.5, 500)])
    fit = fit_gmm(x, 2, seed=0)
    draws = fit.sample(5000, np.random.default_rng(7))
    assert draws.mean() == pytest.approx(fit.mixture_mean, abs=0.1)


def test_input_validation():
    with pytest.raises(ValueError):
        fit_gmm(np.array([1.0, 2.0]), 0, seed=0)
    with pytest.raises(ValueError):
        fit_gmm(np.array([1.0, 2.0, 3.0]), 2, seed=0)
