"""CMA-ES calibration of the capability-space block parameters."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .capability import (
    BlockParams,
    build_capability_space,
    generate_catalog,
    simulated_product_space,
)
from .gmm import GmmFit
from .product_space import (
    ProximityNetwork,
    adaptive_threshold,
    eigenvector_centrality,
    ks_two_sample,
    pci_proximity_correlation,
    pearson,
)

log = logging.getLogger(__name__)

# search box from the block-parameter table: between/cross proximities are
# small, within proximities large
DEFAULT_BOUNDS = np.array(
    [
        (0.01, 0.1),  # periphery between
        (0.8, 0.99),  # periphery within
        (0.01, 0.1),  # periphery -> core
        (0.01, 0.1),  # core between
        (0.8, 0.99),  # core within
        (0.01, 0.1),  # core -> periphery
    ]
)
DEFAULT_INITIAL = np.array([0.05, 0.9, 0.05, 0.05, 0.9, 0.05])


@dataclass
class CmaConfig:
    bounds: np.ndarray = field(default_factory=lambda: DEFAULT_BOUNDS.copy())
    initial: np.ndarray = field(default_factory=lambda: DEFAULT_INITIAL.copy())
    population: int = 20
    generations: int = 50
    seed: int = 0
    sigma0: float = 0.3  # in units of the box width

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        self.initial = np.asarray(self.initial, dtype=float)
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ValueError("bounds must satisfy low < high")
        if np.any(self.initial < self.bounds[:, 0]) or np.any(
            self.initial > self.bounds[:, 1]
        ):
            raise ValueError("initial point outside bounds")


@dataclass
class CmaResult:
    best: np.ndarray
    best_fitness: float
    trace: list[float]  # best-so-far per generation, non-increasing
    evaluations: int


def cma_es(objective, config: CmaConfig) -> CmaResult:
    """Box-constrained (mu/mu_w, lambda)-CMA-ES minimization.

    The search runs in the unit cube (bounds mapped affinely); sampled
    candidates are clipped coordinate-wise onto the box. ``objective`` is
    called as ``objective(x, generation, index)`` so stochastic objectives
    can derive per-candidate seeds; non-finite returns are treated as the
    worst fitness in their generation. Deterministic given the seed.
    """
    bounds = config.bounds
    lo, width = bounds[:, 0], bounds[:, 1] - bounds[:, 0]
    n = bounds.shape[0]
    lam = config.population
    mu = lam // 2
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mu_eff = 1.0 / np.sum(w**2)

    c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, np.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
    c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
    chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

    rng = np.random.default_rng(config.seed)
    m = (config.initial - lo) / width
    sigma = config.sigma0
    cov = np.eye(n)
    p_sigma = np.zeros(n)
    p_c = np.zeros(n)

    best_x = config.initial.copy()
    best_f = np.inf
    trace: list[float] = []
    evals = 0

    for gen in range(config.generations):
        evals_d, evals_b = np.linalg.eigh(cov)
        evals_d = np.sqrt(np.maximum(evals_d, 1e-20))
        inv_sqrt = evals_b @ np.diag(1 / evals_d) @ evals_b.T

        zs = rng.standard_normal((lam, n))
        ys = zs * evals_d @ evals_b.T
        xs = np.clip(m + sigma * ys, 0.0, 1.0)
        ys = (xs - m) / sigma  # repaired steps consistent with clipped samples

        fitness = np.empty(lam)
        for i in range(lam):
            f = objective(lo + width * xs[i], gen, i)
            fitness[i] = f if np.isfinite(f) else np.inf
            evals += 1
        worst_finite = np.max(fitness[np.isfinite(fitness)], initial=0.0)
        fitness[~np.isfinite(fitness)] = worst_finite + 1.0

        order = np.argsort(fitness, kind="stable")
        if fitness[order[0]] < best_f:
            best_f = float(fitness[order[0]])
            best_x = lo + width * xs[order[0]]
        trace.append(best_f)

        sel = ys[order[:mu]]
        y_w = w @ sel
        m = np.clip(m + sigma * y_w, 0.0, 1.0)

        p_sigma = (1 - c_sigma) * p_sigma + np.sqrt(
            c_sigma * (2 - c_sigma) * mu_eff
        ) * (inv_sqrt @ y_w)
        h_sigma = float(
            np.linalg.norm(p_sigma)
            / np.sqrt(1 - (1 - c_sigma) ** (2 * (gen + 1)))
            < (1.4 + 2 / (n + 1)) * chi_n
        )
        p_c = (1 - c_c) * p_c + h_sigma * np.sqrt(c_c * (2 - c_c) * mu_eff) * y_w

        rank_mu = sum(wi * np.outer(yi, yi) for wi, yi in zip(w, sel))
        cov = (
            (1 - c_1 - c_mu) * cov
            + c_1 * (np.outer(p_c, p_c) + (1 - h_sigma) * c_c * (2 - c_c) * cov)
            + c_mu * rank_mu
        )
        sigma *= np.exp((c_sigma / d_sigma) * (np.linalg.norm(p_sigma) / chi_n - 1))
        sigma = min(sigma, 1.0)

    return CmaResult(best=best_x, best_fitness=best_f, trace=trace, evaluations=evals)


@dataclass
class ModelConfig:
    """Fixed generative-model settings used during calibration."""

    n_products: int = 1000
    cap_max: int = 100
    block_size: int = 25
    mode: str = "constant"
    kappa: float = 1000.0
    pci_range: tuple[float, float] | None = None


@dataclass
class CalibrationResult:
    params: BlockParams
    best_ks: float
    trace: list[float]
    comparison: dict | None = None


def repair_ordering(v: np.ndarray) -> np.ndarray:
    """Swap between/within entries when clipping broke the ordering."""
    v = v.copy()
    if v[0] > v[1]:
        log.info("repairing periphery ordering: swapping %.3f and %.3f", v[0], v[1])
        v[0], v[1] = v[1], v[0]
    if v[3] > v[4]:
        log.info("repairing core ordering: swapping %.3f and %.3f", v[3], v[4])
        v[3], v[4] = v[4], v[3]
    return v


def _candidate_seed(run_seed: int, gen: int, idx: int) -> int:
    return int(np.random.SeedSequence([run_seed, gen, idx]).generate_state(1)[0])


def simulate_weights(
    params: BlockParams,
    gmm: GmmFit,
    pci_mean: float,
    model: ModelConfig,
    seed: int,
) -> np.ndarray:
    """Positive edge weights of one simulated Product Space."""
    net = simulate_network(params, gmm, pci_mean, model, seed)
    return net.edge_weights()


def simulate_network(
    params: BlockParams,
    gmm: GmmFit,
    pci_mean: float,
    model: ModelConfig,
    seed: int,
) -> ProximityNetwork:
    space = build_capability_space(
        gmm,
        pci_mean,
        params,
        block_size=model.block_size,
        mode=model.mode,
        kappa=model.kappa,
        seed=seed,
    )
    catalog = generate_catalog(
        space, gmm, model.n_products, model.cap_max, seed=seed + 1,
        pci_range=model.pci_range,
    )
    return simulated_product_space(catalog, space)


def calibrate_block_params(
    empirical: ProximityNetwork,
    gmm: GmmFit,
    pci_mean: float,
    model: ModelConfig | None = None,
    config: CmaConfig | None = None,
    with_comparison: bool = True,
) -> CalibrationResult:
    """Fit the six block parameters so the simulated weight distribution
    matches the empirical one (two-sample KS distance objective)."""
    model = model or ModelConfig()
    config = config or CmaConfig()
    emp_weights = empirical.edge_weights()

    def objective(x, gen, idx):
        try:
            params = BlockParams.from_vector(repair_ordering(x))
        except ValueError:
            return np.inf
        sim = simulate_weights(
            params, gmm, pci_mean, model, _candidate_seed(config.seed, gen, idx)
        )
        if sim.size == 0:
            return np.inf
        d, _ = ks_two_sample(emp_weights, sim)
        return d

    result = cma_es(objective, config)
    params = BlockParams.from_vector(repair_ordering(result.best))

    comparison = None
    if with_comparison:
        comparison = compare_networks(
            empirical, params, gmm, pci_mean, model, seed=config.seed
        )
    return CalibrationResult(
        params=params,
        best_ks=result.best_fitness,
        trace=result.trace,
        comparison=comparison,
    )


def compare_networks(
    empirical: ProximityNetwork,
    params: BlockParams,
    gmm: GmmFit,
    pci_mean: float,
    model: ModelConfig,
    seed: int = 0,
) -> dict:
    """Empirical-vs-simulated topology comparison after adaptive thresholding."""
    from .community import best_pci_partition, leiden_partition, modularity

    sim = simulate_network(params, gmm, pci_mean, model, seed=_candidate_seed(seed, -1, 0))
    sim = adaptive_threshold(empirical, sim)

    out: dict = {}
    for name, net in (("empirical", empirical), ("simulated", sim)):
        pci = net.pci
        part = leiden_partition(net, seed=seed)
        _, q_pci = best_pci_partition(net, pci)
        centrality = eigenvector_centrality(net)
        out[name] = {
            "leiden_modularity": modularity(net, part),
            "pci_modularity": q_pci,
            "pci_centrality_r": pearson(pci, centrality),
            "dpci_proximity_r": pci_proximity_correlation(net, pci),
        }
    for stat in ("weight", "degree", "centrality"):
        emp = _stat_values(empirical, stat)
        simv = _stat_values(sim, stat)
        d, p = ks_two_sample(emp, simv)
        out[f"{stat}_ks"] = {"d": d, "p": p}
    return out


def _stat_values(net: ProximityNetwork, stat: str) -> np.ndarray:
    if stat == "weight":
        return net.edge_weights()
    if stat == "degree":
        return net.degrees().astype(float)
    if stat == "centrality":
        return eigenvector_centrality(net)
    raise ValueError(stat)
