"""The proximity network between products and its topology statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .ingest import SpecializationMatrix


@dataclass(frozen=True)
class ProximityNetwork:
    """Symmetric product-product proximity matrix.

    The diagonal is held at zero and excluded from all edge statistics;
    zero-weight pairs are treated as absent edges.
    """

    phi: np.ndarray
    products: tuple[str, ...] = ()
    pci: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValueError("phi must be square")
        if not np.array_equal(phi, phi.T):
            raise ValueError("phi must be symmetric")
        if phi.min() < 0 or phi.max() > 1:
            raise ValueError("phi entries must lie in [0, 1]")
        phi = phi.copy()
        np.fill_diagonal(phi, 0.0)
        object.__setattr__(self, "phi", phi)
        phi.setflags(write=False)
        if not self.products:
            object.__setattr__(
                self, "products", tuple(f"p{i}" for i in range(phi.shape[0]))
            )

    @property
    def n_nodes(self) -> int:
        return self.phi.shape[0]

    def edge_weights(self) -> np.ndarray:
        """Positive weights over unordered distinct pairs, ascending index order."""
        iu = np.triu_indices(self.n_nodes, k=1)
        w = self.phi[iu]
        return w[w > 0]

    def degrees(self) -> np.ndarray:
        return (self.phi > 0).sum(axis=1)


def proximity_matrix(s: SpecializationMatrix) -> ProximityNetwork:
    """Minimum conditional co-specialization probability between products."""
    m = s.m.astype(float)
    co = m.T @ m
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = co / s.ubiquity[:, None]  # P(i | j) in row j
    phi = np.minimum(cond, cond.T)
    np.fill_diagonal(phi, 0.0)
    return ProximityNetwork(phi=phi, products=s.products)


def density_omega(s: SpecializationMatrix, net: ProximityNetwork) -> np.ndarray:
    """Average proximity from each country's basket to each product (D^-1 M Phi)."""
    if s.m.shape[1] != net.n_nodes:
        raise ValueError("specialization matrix and network indices misaligned")
    m = s.m.astype(float)
    return (m @ net.phi) / s.diversity[:, None]


def graph_density(net: ProximityNetwork) -> float:
    p = net.n_nodes
    if p < 2:
        raise ValueError("need at least 2 nodes")
    iu = np.triu_indices(p, k=1)
    n_edges = int((net.phi[iu] > 0).sum())
    return 2.0 * n_edges / (p * (p - 1))


def transitivity(net: ProximityNetwork) -> float:
    """Global clustering coefficient on the unweighted skeleton."""
    a = (net.phi > 0).astype(float)
    deg = a.sum(axis=1)
    triangles = np.trace(a @ a @ a) / 6.0
    triplets = (deg * (deg - 1)).sum() / 2.0
    if triplets == 0:
        return 0.0
    return float(3.0 * triangles / triplets)


def eigenvector_centrality(
    net: ProximityNetwork, tol: float = 1e-10, max_iter: int = 10_000
) -> np.ndarray:
    """Leading eigenvector of the weighted adjacency, scaled so max = 1."""
    phi = net.phi
    n = net.n_nodes
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        # The +x shift keeps iteration convergent on bipartite-like graphs
        # (spectrum symmetric about 0) without changing the eigenvectors.
        nx = phi @ x + x
        norm = np.linalg.norm(nx)
        if norm == 0:
            return np.zeros(n)
        nx /= norm
        residual = np.linalg.norm(nx - x)
        x = nx
        if residual < tol:
            break
    else:
        raise RuntimeError(
            f"eigenvector centrality did not converge (residual {residual:.2e})"
        )
    x = np.abs(x)
    return x / x.max()


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    median: float
    mode: float
    iqr: float
    skew: float
    kurtosis: float
    mode_method: str


def summary_stats(values: np.ndarray) -> DistributionSummary:
    """Moments, quantiles (linear interpolation), and a mode estimate.

    Mode uses exact counts for integer-valued data, otherwise the midpoint of
    the tallest Freedman-Diaconis histogram bin. Skew/kurtosis of a constant
    vector are 0 by convention.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty input")
    q25, q75 = np.percentile(v, [25, 75])
    if np.all(v == v[0]):
        skew = kurt = 0.0
    else:
        skew = float(stats.skew(v))
        kurt = float(stats.kurtosis(v))  # Fisher (excess)
    if np.all(v == np.round(v)):
        vals, counts = np.unique(v, return_counts=True)
        mode = float(vals[np.argmax(counts)])
        mode_method = "exact-count"
    else:
        counts, edges = np.histogram(v, bins="fd")
        k = int(np.argmax(counts))
        mode = float((edges[k] + edges[k + 1]) / 2)
        mode_method = "histogram"
    return DistributionSummary(
        mean=float(v.mean()),
        median=float(np.median(v)),
        mode=mode,
        iqr=float(q75 - q25),
        skew=skew,
        kurtosis=kurt,
        mode_method=mode_method,
    )


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sample KS statistic with asymptotic Kolmogorov p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    data = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, data, side="right") / a.size
    cdf_b = np.searchsorted(b, data, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    n_eff = a.size * b.size / (a.size + b.size)
    p = float(special.kolmogorov(np.sqrt(n_eff) * d))
    return d, p


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("inputs must have equal length >= 2")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("constant input")
    return float(np.corrcoef(x, y)[0, 1])


def pci_proximity_correlation(net: ProximityNetwork, pci: np.ndarray) -> float:
    """Pearson R between |PCI_i - PCI_j| and proximity over positive pairs."""
    iu = np.triu_indices(net.n_nodes, k=1)
    w = net.phi[iu]
    mask = w > 0
    dpci = np.abs(pci[iu[0]] - pci[iu[1]])
    return pearson(dpci[mask], w[mask])


def adaptive_threshold(
    empirical: ProximityNetwork, simulated: ProximityNetwork
) -> ProximityNetwork:
    """Drop the same fraction of lowest-weight simulated edges as the empirical
    network has zero-weight pairs. Ties are broken by stable index order."""
    p = empirical.n_nodes
    iu = np.triu_indices(p, k=1)
    q = float((empirical.phi[iu] == 0).mean())

    phi = simulated.phi.copy()
    su = np.triu_indices(simulated.n_nodes, k=1)
    weights = phi[su]
    pos = np.nonzero(weights > 0)[0]
    n_remove = int(round(q * pos.size))
    if n_remove > 0:
        order = np.argsort(weights[pos], kind="stable")
        cut = pos[order[:n_remove]]
        phi[su[0][cut], su[1][cut]] = 0.0
        phi[su[1][cut], su[0][cut]] = 0.0
    return ProximityNetwork(phi=phi, products=simulated.products, pci=simulated.pci)


@dataclass
class NetworkReport:
    n_nodes: int
    density: float
    transitivity: float
    leiden_modularity: float
    pci_modularity: float
    pci_best_bins: int
    pci_centrality_r: float
    dpci_proximity_r: float
    weight_summary: DistributionSummary = field(repr=False)
    degree_summary: DistributionSummary = field(repr=False)
    centrality_summary: DistributionSummary = field(repr=False)

    def to_dict(self) -> dict:
        d = {
            "n_nodes": self.n_nodes,
            "density": self.density,
            "transitivity": self.transitivity,
            "leiden_modularity": self.leiden_modularity,
            "pci_modularity": self.pci_modularity,
            "pci_best_bins": self.pci_best_bins,
            "pci_centrality_r": self.pci_centrality_r,
            "dpci_proximity_r": self.dpci_proximity_r,
        }
        for name, summ in (
            ("weight", self.weight_summary),
            ("degree", self.degree_summary),
            ("centrality", self.centrality_summary),
        ):
            d[name] = {
                "mean": summ.mean,
                "median": summ.median,
                "mode": summ.mode,
                "iqr": summ.iqr,
                "skew": summ.skew,
                "kurtosis": summ.kurtosis,
            }
        return d


def network_report(net: ProximityNetwork, pci: np.ndarray, seed: int = 0) -> NetworkReport:
    """Full topology report for one network, given aligned PCI values."""
    from .community import leiden_partition, modularity, best_pci_partition

    part = leiden_partition(net, seed=seed)
    q_leiden = modularity(net, part)
    best_n, q_pci = best_pci_partition(net, pci)
    centrality = eigenvector_centrality(net)
    return NetworkReport(
        n_nodes=net.n_nodes,
        density=graph_density(net),
        transitivity=transitivity(net),
        leiden_modularity=q_leiden,
        pci_modularity=q_pci,
        pci_best_bins=best_n,
        pci_centrality_r=pearson(pci, centrality),
        dpci_proximity_r=pci_proximity_correlation(net, pci),
        weight_summary=summary_stats(net.edge_weights()),
        degree_summary=summary_stats(net.degrees()),
        centrality_summary=summary_stats(centrality),
    )
