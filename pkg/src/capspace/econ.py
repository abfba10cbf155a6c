"""Regression toolkit: OLS with robust errors, VIF, and ordered logit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

# each growth spec's exact predictor list; diversity (and population in the
# ECI spec) are dropped where they caused multicollinearity
GROWTH_SPECS = {
    1: ["eci", "log_gdp_per_capita"],
    2: ["eci", "log_gdp_per_capita", "investment_gdp_ratio", "export_gdp_ratio"],
    3: ["k1", "log_gdp_per_capita"],
    4: [
        "k1",
        "log_gdp_per_capita",
        "investment_gdp_ratio",
        "population",
        "export_gdp_ratio",
    ],
}
LOGIT_PREDICTORS = [
    "log_gdp_per_capita",
    "sq_log_gdp_per_capita",
    "population",
    "investment_gdp_ratio",
    "export_gdp_ratio",
    "eci",
    "eci_squared",
]


class CollinearityError(ValueError):
    """Design matrix is rank deficient."""


class ConvergenceError(RuntimeError):
    """Iterative MLE failed to converge (possible perfect separation)."""


@dataclass(frozen=True)
class DesignMatrix:
    """Complete-case design: named predictor columns plus a response."""

    ids: tuple[str, ...]
    names: tuple[str, ...]
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape != (len(self.ids), len(self.names)):
            raise ValueError("x shape must match ids and names")
        if self.y.shape != (len(self.ids),):
            raise ValueError("y must align with ids")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("missing or non-finite values in design")

    @classmethod
    def from_frame(cls, df: pd.DataFrame, names: list[str], response: str) -> "DesignMatrix":
        sub = df[names + [response]].dropna()
        return cls(
            ids=tuple(str(i) for i in sub.index),
            names=tuple(names),
            x=sub[names].to_numpy(dtype=float),
            y=sub[response].to_numpy(dtype=float),
        )


@dataclass(frozen=True)
class OlsResult:
    names: tuple[str, ...]  # includes "const" last
    coefficients: np.ndarray
    se: np.ndarray  # HC1
    r_squared: float
    adj_r_squared: float
    aic: float
    n: int

    @property
    def t_values(self) -> np.ndarray:
        return self.coefficients / self.se

    @property
    def p_values(self) -> np.ndarray:
        df = self.n - self.coefficients.size
        return 2 * stats.t.sf(np.abs(self.t_values), df)


def _check_rank(x: np.ndarray, names) -> None:
    rank = np.linalg.matrix_rank(x)
    if rank < x.shape[1]:
        # name columns that add no rank when appended incrementally
        bad = []
        cols = x[:, :1]
        for j in range(1, x.shape[1]):
            cand = np.hstack([cols, x[:, j : j + 1]])
            if np.linalg.matrix_rank(cand) == np.linalg.matrix_rank(cols):
                bad.append(names[j])
            else:
                cols = cand
        raise CollinearityError(f"collinear columns: {bad or list(names)}")


def ols_hc1(design: DesignMatrix) -> OlsResult:
    """OLS with an intercept and heteroskedasticity-robust (HC1) errors."""
    n, k_pred = design.x.shape
    x = np.hstack([design.x, np.ones((n, 1))])
    names = design.names + ("const",)
    k = x.shape[1]
    if n <= k:
        raise ValueError("need more observations than parameters")
    _check_rank(x, names)

    xtx_inv = np.linalg.inv(x.T @ x)
    beta = xtx_inv @ x.T @ design.y
    resid = design.y - x @ beta
    meat = x.T @ (resid[:, None] ** 2 * x)
    cov = (n / (n - k)) * xtx_inv @ meat @ xtx_inv
    se = np.sqrt(np.diag(cov))

    tss = np.sum((design.y - design.y.mean()) ** 2)
    rss = float(resid @ resid)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj = 1.0 - (1 - r2) * (n - 1) / (n - k) if tss > 0 else 1.0
    # Gaussian likelihood with the MLE variance rss/n
    sigma2 = max(rss / n, 1e-300)
    ll = -0.5 * n * (np.log(2 * np.pi * sigma2) + 1)
    aic = 2 * (k + 1) - 2 * ll
    return OlsResult(
        names=names,
        coefficients=beta,
        se=se,
        r_squared=float(r2),
        adj_r_squared=float(adj),
        aic=float(aic),
        n=n,
    )


def vif(x: np.ndarray, names=None) -> np.ndarray:
    """Variance inflation factor of each column regressed on the others
    (with intercept); perfect collinearity maps to +inf."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("need at least two predictors")
    n, k = x.shape
    out = np.empty(k)
    for j in range(k):
        others = np.hstack([np.delete(x, j, axis=1), np.ones((n, 1))])
        beta, *_ = np.linalg.lstsq(others, x[:, j], rcond=None)
        resid = x[:, j] - others @ beta
        tss = np.sum((x[:, j] - x[:, j].mean()) ** 2)
        rss = float(resid @ resid)
        if tss == 0 or rss / tss < 1e-12:
            out[j] = np.inf
        else:
            out[j] = tss / rss
    return out


@dataclass(frozen=True)
class OrderedLogitResult:
    names: tuple[str, ...]
    coefficients: np.ndarray
    thresholds: np.ndarray  # strictly increasing
    se: np.ndarray  # robust, coefficients then thresholds
    log_likelihood: float
    ll_null: float
    pseudo_r_squared: float  # McFadden
    lr_chi2: float
    lr_p: float
    aic: float
    n: int
    n_categories: int
    iterations: int

    @property
    def p_values(self) -> np.ndarray:
        k = self.coefficients.size
        z = self.coefficients / self.se[:k]
        return 2 * stats.norm.sf(np.abs(z))


def _ologit_unpack(theta: np.ndarray, k: int, n_cat: int):
    """theta = (beta, first threshold, log gaps) -> (beta, ascending thresholds)."""
    beta = theta[:k]
    alpha = np.empty(n_cat - 1)
    alpha[0] = theta[k]
    if n_cat > 2:
        alpha[1:] = alpha[0] + np.cumsum(np.exp(theta[k + 1 :]))
    return beta, alpha


def _ologit_ll_grad(theta, x, y, n_cat):
    """Log-likelihood, per-observation gradients, and total gradient."""
    n, k = x.shape
    beta, alpha = _ologit_unpack(theta, k, n_cat)
    eta = x @ beta
    hi = np.where(y == n_cat - 1, np.inf, alpha[np.minimum(y, n_cat - 2)] - eta)
    lo = np.where(y == 0, -np.inf, alpha[np.maximum(y - 1, 0)] - eta)
    f_hi = stats.logistic.cdf(hi)
    f_lo = stats.logistic.cdf(lo)
    p = np.clip(f_hi - f_lo, 1e-300, 1.0)
    ll = float(np.sum(np.log(p)))

    d_hi = stats.logistic.pdf(hi)
    d_lo = stats.logistic.pdf(lo)
    grads = np.zeros((n, theta.size))
    grads[:, :k] = (-(d_hi - d_lo) / p)[:, None] * x
    # contributions to the raw thresholds, then chain rule to (a1, log gaps)
    d_alpha = np.zeros((n, n_cat - 1))
    upper = y < n_cat - 1
    lower = y > 0
    d_alpha[upper, y[upper]] += d_hi[upper] / p[upper]
    d_alpha[lower, y[lower] - 1] -= d_lo[lower] / p[lower]
    jac = np.zeros((n_cat - 1, n_cat - 1))  # d alpha_j / d theta_thresh
    jac[:, 0] = 1.0
    for m in range(1, n_cat - 1):
        jac[m:, m] = np.exp(theta[k + m])
    grads[:, k:] = d_alpha @ jac
    return ll, grads, grads.sum(axis=0)


def _numeric_hessian(theta, x, y, n_cat, h=1e-5):
    p = theta.size
    hess = np.zeros((p, p))
    for j in range(p):
        tp = theta.copy()
        tp[j] += h
        tm = theta.copy()
        tm[j] -= h
        _, _, gp = _ologit_ll_grad(tp, x, y, n_cat)
        _, _, gm = _ologit_ll_grad(tm, x, y, n_cat)
        hess[:, j] = (gp - gm) / (2 * h)
    return (hess + hess.T) / 2


def ordered_logit(
    design: DesignMatrix, max_iter: int = 200, tol: float = 1e-8
) -> OrderedLogitResult:
    """Proportional-odds model by Newton-Raphson with backtracking line search.

    Thresholds stay ordered by construction: the first is free and the gaps
    are exponentials of free parameters. Robust standard errors use the
    outer-product-of-gradients sandwich with an n/(n-p) correction.
    """
    x = design.x
    n, k = x.shape
    cats = np.unique(design.y)
    y = np.searchsorted(cats, design.y)
    n_cat = cats.size
    if n_cat < 2:
        raise ValueError("need at least two observed categories")
    if n <= k + n_cat:
        raise ValueError("too few observations for the parameter count")
    _check_rank(np.hstack([x, np.ones((n, 1))]), design.names + ("const",))

    # start at the intercept-only solution: thresholds from cumulative shares
    props = np.bincount(y, minlength=n_cat) / n
    cum = np.clip(np.cumsum(props)[:-1], 1e-6, 1 - 1e-6)
    alpha0 = np.log(cum / (1 - cum))
    theta = np.zeros(k + n_cat - 1)
    theta[k] = alpha0[0]
    if n_cat > 2:
        theta[k + 1 :] = np.log(np.maximum(np.diff(alpha0), 1e-6))

    ll, _, grad = _ologit_ll_grad(theta, x, y, n_cat)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        hess = _numeric_hessian(theta, x, y, n_cat)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = grad.copy()  # fall back to steepest ascent
        if step @ grad < 0:
            step = grad.copy()
        # backtracking keeps the likelihood non-decreasing
        scale = 1.0
        for _ in range(50):
            cand = theta + scale * step
            cand_ll, _, cand_grad = _ologit_ll_grad(cand, x, y, n_cat)
            if np.isfinite(cand_ll) and cand_ll >= ll:
                break
            scale /= 2
        else:
            break
        improved = cand_ll - ll
        theta, ll, grad = cand, cand_ll, cand_grad
        if improved < tol and np.max(np.abs(grad)) < 1e-5:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"ordered logit did not converge in {max_iter} iterations "
            f"(|grad|={np.max(np.abs(grad)):.2e}, |beta|={np.max(np.abs(theta[:k])):.2f}); "
            "possible perfect separation"
        )

    beta, alpha = _ologit_unpack(theta, k, n_cat)
    _, grads, _ = _ologit_ll_grad(theta, x, y, n_cat)
    hess = _numeric_hessian(theta, x, y, n_cat)
    p_tot = theta.size
    try:
        h_inv = np.linalg.inv(-hess)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("singular Hessian at the optimum") from exc
    opg = grads.T @ grads
    cov_theta = (n / (n - p_tot)) * h_inv @ opg @ h_inv
    # report thresholds in natural units: delta method through the gap map
    jac = np.eye(p_tot)
    jj = np.zeros((n_cat - 1, n_cat - 1))
    jj[:, 0] = 1.0
    for m in range(1, n_cat - 1):
        jj[m:, m] = np.exp(theta[k + m])
    jac[k:, k:] = jj
    cov = jac @ cov_theta @ jac.T
    se = np.sqrt(np.diag(cov))

    ll_null = float(np.sum(np.bincount(y) * np.log(props[props > 0])))
    lr = max(2 * (ll - ll_null), 0.0)
    lr_p = float(stats.chi2.sf(lr, k))
    return OrderedLogitResult(
        names=design.names,
        coefficients=beta,
        thresholds=alpha,
        se=se,
        log_likelihood=ll,
        ll_null=ll_null,
        pseudo_r_squared=float(1 - ll / ll_null),
        lr_chi2=float(lr),
        lr_p=lr_p,
        aic=float(2 * p_tot - 2 * ll),
        n=n,
        n_categories=n_cat,
        iterations=it,
    )


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def add_derived_columns(panel: pd.DataFrame) -> pd.DataFrame:
    """Squared terms used by the ordinal specifications (centered log GDP)."""
    panel = panel.copy()
    if "log_gdp_per_capita" in panel:
        centered = panel["log_gdp_per_capita"] - panel["log_gdp_per_capita"].mean()
        panel["sq_log_gdp_per_capita"] = centered**2
    if "eci" in panel:
        panel["eci_squared"] = panel["eci"] ** 2
    return panel


def growth_regression(panel: pd.DataFrame, spec: int, response: str = "growth") -> OlsResult:
    """Run one of the four enumerated growth specifications."""
    if spec not in GROWTH_SPECS:
        raise ValueError(f"unknown spec {spec}; choose from {sorted(GROWTH_SPECS)}")
    design = DesignMatrix.from_frame(panel, GROWTH_SPECS[spec], response)
    return ols_hc1(design)


def elasticity_logit(panel: pd.DataFrame, response: str) -> OrderedLogitResult:
    """Ordinal logit of an inferred production elasticity on the development proxies."""
    panel = add_derived_columns(panel)
    design = DesignMatrix.from_frame(panel, LOGIT_PREDICTORS, response)
    return ordered_logit(design)


def regression_report(panel: pd.DataFrame, response: str = "growth") -> dict:
    """All four growth regressions plus the elasticity logits when available."""
    out: dict = {"growth": {}, "logit": {}}
    for spec in sorted(GROWTH_SPECS):
        try:
            res = growth_regression(panel, spec, response)
        except (KeyError, ValueError) as exc:
            out["growth"][spec] = {"error": str(exc)}
            continue
        out["growth"][spec] = tidy_ols(res)
    for target in ("rho", "nu"):
        if target not in panel.columns:
            continue
        try:
            res = elasticity_logit(panel, target)
        except (ValueError, ConvergenceError) as exc:
            out["logit"][target] = {"error": str(exc)}
            continue
        out["logit"][target] = tidy_ologit(res)
    return out


def tidy_ols(res: OlsResult) -> dict:
    rows = []
    for name, b, s, p in zip(res.names, res.coefficients, res.se, res.p_values):
        rows.append(
            {"term": name, "coef": float(b), "se": float(s), "p": float(p),
             "stars": significance_stars(float(p))}
        )
    return {
        "terms": rows,
        "r_squared": res.r_squared,
        "adj_r_squared": res.adj_r_squared,
        "aic": res.aic,
        "n": res.n,
    }


def tidy_ologit(res: OrderedLogitResult) -> dict:
    rows = []
    for name, b, s, p in zip(res.names, res.coefficients, res.se, res.p_values):
        rows.append(
            {"term": name, "coef": float(b), "se": float(s), "p": float(p),
             "stars": significance_stars(float(p))}
        )
    return {
        "terms": rows,
        "thresholds": [float(a) for a in res.thresholds],
        "pseudo_r_squared": res.pseudo_r_squared,
        "pseudo_r_squared_type": "mcfadden",
        "lr_chi2": res.lr_chi2,
        "lr_p": res.lr_p,
        "aic": res.aic,
        "n": res.n,
    }
