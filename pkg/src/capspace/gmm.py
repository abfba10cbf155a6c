"""One-dimensional Gaussian mixture fitting by EM, with AIC model selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

_EM_TOL = 1e-8
_EM_MAX_ITER = 500
_SIGMA_FLOOR = 1e-6
_N_RESTARTS = 5


class ComponentCollapseError(RuntimeError):
    """A mixture component collapsed onto a point mass during EM."""


@dataclass(frozen=True)
class GmmFit:
    n: int
    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    log_likelihood: float
    aic: float
    bic: float
    loglik_trace: tuple[float, ...] = field(default=(), repr=False)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        return (self.weights * stats.norm.pdf(x, self.means, self.sds)).sum(axis=-1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        return (self.weights * stats.norm.cdf(x, self.means, self.sds)).sum(axis=-1)

    def sample(self, size: int, rng) -> np.ndarray:
        comp = rng.choice(self.n, size=size, p=self.weights)
        return rng.normal(self.means[comp], self.sds[comp])

    @property
    def mixture_mean(self) -> float:
        return float(self.weights @ self.means)


def _kmeanspp_init(x: np.ndarray, n: int, rng) -> np.ndarray:
    """k-means++ seeding for component means."""
    centers = [x[rng.integers(x.size)]]
    for _ in range(n - 1):
        d2 = np.min((x[:, None] - np.array(centers)) ** 2, axis=1)
        total = d2.sum()
        if total == 0:
            centers.append(x[rng.integers(x.size)])
        else:
            centers.append(x[rng.choice(x.size, p=d2 / total)])
    return np.array(centers)


def _em(x: np.ndarray, mu0: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float]]:
    n = mu0.size
    w = np.full(n, 1.0 / n)
    mu = mu0.copy()
    sd = np.full(n, max(x.std(), _SIGMA_FLOOR))
    trace: list[float] = []
    prev_ll = -np.inf
    for _ in range(_EM_MAX_ITER):
        log_comp = np.log(w) + stats.norm.logpdf(x[:, None], mu, sd)
        log_norm = np.logaddexp.reduce(log_comp, axis=1)
        ll = float(log_norm.sum())
        trace.append(ll)
        resp = np.exp(log_comp - log_norm[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-12):
            raise ComponentCollapseError("empty component")
        w = nk / x.size
        mu = (resp * x[:, None]).sum(axis=0) / nk
        sd = np.sqrt((resp * (x[:, None] - mu) ** 2).sum(axis=0) / nk)
        if np.any(sd < _SIGMA_FLOOR):
            raise ComponentCollapseError(f"sigma collapsed below {_SIGMA_FLOOR}")
        if ll - prev_ll < _EM_TOL and np.isfinite(prev_ll):
            break
        prev_ll = ll
    return w, mu, sd, trace


def fit_gmm(values: np.ndarray, n: int, seed: int) -> GmmFit:
    """Fit an n-component univariate Gaussian mixture by EM.

    Initialization is k-means++ over several restarts; the restart with the
    highest final log-likelihood wins. Collapsing components trigger fresh
    restarts before giving up.
    """
    x = np.asarray(values, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if x.size < 2 * n:
        raise ValueError(f"need at least {2 * n} values for n={n}")
    rng = np.random.default_rng(seed)
    best = None
    failures = 0
    attempts = 0
    while attempts < _N_RESTARTS:
        try:
            w, mu, sd, trace = _em(x, _kmeanspp_init(x, n, rng), rng)
        except ComponentCollapseError:
            failures += 1
            if failures >= 5:
                if best is None:
                    raise
                break
            continue
        attempts += 1
        if best is None or trace[-1] > best[3][-1]:
            best = (w, mu, sd, trace)
    w, mu, sd, trace = best
    order = np.argsort(mu)
    w, mu, sd = w[order], mu[order], sd[order]
    ll = trace[-1]
    k = 3 * n - 1
    return GmmFit(
        n=n,
        weights=w,
        means=mu,
        sds=sd,
        log_likelihood=ll,
        aic=2 * k - 2 * ll,
        bic=k * np.log(x.size) - 2 * ll,
        loglik_trace=tuple(trace),
    )


def select_n_by_aic(
    values: np.ndarray, n_max: int, seed: int
) -> tuple[int, dict[int, float]]:
    """Choose the component count minimizing AIC; also returns the AIC table."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    table: dict[int, float] = {}
    for n in range(1, n_max + 1):
        try:
            table[n] = fit_gmm(values, n, seed).aic
        except (ComponentCollapseError, ValueError):
            table[n] = np.inf
    best = min(table, key=table.get)
    return best, table


def gmm_ks_test(fit: GmmFit, values: np.ndarray) -> float:
    """One-sample KS p-value of the data against the analytic mixture CDF."""
    result = stats.kstest(np.asarray(values, dtype=float), fit.cdf)
    return float(result.pvalue)
