import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capspace.product_space import (
    ProximityNetwork,
    adaptive_threshold,
    density_omega,
    eigenvector_centrality,
    graph_density,
    ks_two_sample,
    network_report,
    pci_proximity_correlation,
    pearson,
    proximity_matrix,
    summary_stats,
    transitivity,
)

from conftest import random_specialization


def brute_force_proximity(m):
    n_p = m.shape[1]
    phi = np.zeros((n_p, n_p))
    for i in range(n_p):
        for j in range(n_p):
            if i == j:
                continue
            both = int(np.sum(m[:, i] * m[:, j]))
            phi[i, j] = min(both / m[:, j].sum(), both / m[:, i].sum())
    return phi


def test_proximity_fixture(fx_m):
    net = proximity_matrix(fx_m)
    assert net.phi[0, 1] == pytest.approx(0.5)
    assert net.phi[0, 0] == 0.0


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_proximity_matches_brute_force(seed):
    s = random_specialization(seed, max_countries=12, max_products=10)
    net = proximity_matrix(s)
    np.testing.assert_allclose(net.phi, brute_force_proximity(s.m), atol=1e-12)


def test_network_validation():
    with pytest.raises(ValueError, match="symmetric"):
        ProximityNetwork(phi=np.array([[0.0, 0.2], [0.3, 0.0]]))
    with pytest.raises(ValueError, match="square"):
        ProximityNetwork(phi=np.zeros((2, 3)))
    with pytest.raises(ValueError, match="0, 1"):
        ProximityNetwork(phi=np.array([[0.0, 1.5], [1.5, 0.0]]))


def test_density_omega(fx_m):
    net = proximity_matrix(fx_m)
    omega = density_omega(fx_m, net)
    # country 2 exports only p2; its density on p1 is phi(p1,p2)/1
    assert omega[1, 0] == pytest.approx(0.5)


def test_graph_density_triangle():
    phi = np.array([[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
    net = ProximityNetwork(phi=phi)
    assert graph_density(net) == 1.0
    assert transitivity(net) == pytest.approx(1.0)


def test_transitivity_path_graph():
    phi = np.zeros((3, 3))
    phi[0, 1] = phi[1, 0] = 0.5
    phi[1, 2] = phi[2, 1] = 0.5
    net = ProximityNetwork(phi=phi)
    assert transitivity(net) == 0.0


def test_star_centrality():
    # star: hub 0, three leaves; leaf centrality = hub / sqrt(3)
    phi = np.zeros((4, 4))
    for leaf in (1, 2, 3):
        phi[0, leaf] = phi[leaf, 0] = 1.0
    c = eigenvector_centrality(ProximityNetwork(phi=phi))
    assert c[0] == pytest.approx(1.0)
    np.testing.assert_allclose(c[1:], 1 / np.sqrt(3), atol=1e-8)


def test_summary_stats_integer_mode():
    s = summary_stats(np.array([1.0, 2.0, 2.0, 3.0]))
    assert s.mode == 2.0
    assert s.mode_method == "exact-count"
    assert s.mean == 2.0


def test_summary_stats_constant():
    s = summary_stats(np.full(5, 2.5))
    assert s.skew == 0.0 and s.kurtosis == 0.0


def test_ks_identical_and_disjoint():
    a = np.arange(10.0)
    d, p = ks_two_sample(a, a)
    assert d == 0.0 and p == pytest.approx(1.0)
    d2, _ = ks_two_sample(a, a + 100.0)
    assert d2 == 1.0


def test_pearson_constant_errors():
    with pytest.raises(ValueError, match="constant"):
        pearson(np.ones(5), np.arange(5.0))


def test_pci_proximity_negative_on_assortative():
    # proximity decays with complexity distance -> negative correlation
    pci = np.linspace(-2, 2, 6)
    phi = np.exp(-np.abs(pci[:, None] - pci[None, :]))
    np.fill_diagonal(phi, 0.0)
    net = ProximityNetwork(phi=phi)
    assert pci_proximity_correlation(net, pci) < -0.9


def test_adaptive_threshold_removes_matching_fraction():
    rng = np.random.default_rng(0)
    n = 12
    emp = rng.random((n, n))
    emp = (emp + emp.T) / 2
    iu = np.triu_indices(n, 1)
    zero_out = rng.choice(iu[0].size, size=22, replace=False)
    emp[iu[0][zero_out], iu[1][zero_out]] = 0.0
    emp[iu[1][zero_out], iu[0][zero_out]] = 0.0
    np.fill_diagonal(emp, 0.0)
    empirical = ProximityNetwork(phi=np.clip(emp, 0, 1))

    sim = rng.uniform(0.05, 1.0, (n, n))
    sim = (sim + sim.T) / 2
    np.fill_diagonal(sim, 0.0)
    simulated = ProximityNetwork(phi=sim)

    out = adaptive_threshold(empirical, simulated)
    q = (empirical.phi[iu] == 0).mean()
    expected_removed = round(q * simulated.edge_weights().size)
    assert simulated.edge_weights().size - out.edge_weights().size == expected_removed
    # removed edges are the weakest ones
    if out.edge_weights().size:
        assert out.edge_weights().min() >= np.sort(simulated.edge_weights())[expected_removed - 1]


def test_network_report_runs():
    rng = np.random.default_rng(3)
    phi = rng.uniform(0, 1, (15, 15))
    phi = (phi + phi.T) / 2
    np.fill_diagonal(phi, 0.0)
    net = ProximityNetwork(phi=phi)
    pci = rng.standard_normal(15)
    rep = network_report(net, pci, seed=0)
    assert 0 <= rep.density <= 1
    assert rep.n_nodes == 15
    d = rep.to_dict()
    assert set(d) >= {"density", "transitivity", "leiden_modularity", "weight"}
