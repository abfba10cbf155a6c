import numpy as np
import pytest

from capspace.complexity import DisconnectedError, eci_pci
from capspace.ingest import SpecializationMatrix


def random_specialization(seed, max_countries=50, max_products=80, shape=None):
    """Random pruned binary specialization matrix (not necessarily connected)."""
    rng = np.random.default_rng(seed)
    if shape is None:
        n_c = rng.integers(3, max_countries + 1)
        n_p = rng.integers(3, max_products + 1)
    else:
        n_c, n_p = shape
    for _ in range(200):
        m = (rng.random((n_c, n_p)) < rng.uniform(0.2, 0.7)).astype(np.int8)
        if m.sum(axis=1).min() > 0 and m.sum(axis=0).min() > 0:
            return SpecializationMatrix(
                countries=tuple(f"c{i}" for i in range(n_c)),
                products=tuple(f"p{j}" for j in range(n_p)),
                m=m,
            )
    raise RuntimeError("could not draw a pruned matrix")


def random_connected_specialization(seed, shape):
    """Random pruned matrix on which eci_pci runs without a connectivity error."""
    for attempt in range(100):
        s = random_specialization(seed * 1000 + attempt, shape=shape)
        try:
            eci_pci(s)
        except DisconnectedError:
            continue
        return s
    raise RuntimeError("could not draw a connected matrix")


@pytest.fixture
def fx_m():
    return SpecializationMatrix(
        countries=("c1", "c2"), products=("p1", "p2"), m=np.array([[1, 1], [0, 1]])
    )


@pytest.fixture
def fx_m3():
    return SpecializationMatrix(
        countries=("c1", "c2", "c3"),
        products=("p1", "p2", "p3"),
        m=np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]]),
    )


@pytest.fixture
def toy_gmm():
    from capspace.gmm import GmmFit

    return GmmFit(
        n=2,
        weights=np.array([0.6, 0.4]),
        means=np.array([-1.0, 1.5]),
        sds=np.array([0.5, 0.5]),
        log_likelihood=0.0,
        aic=0.0,
        bic=0.0,
    )


@pytest.fixture
def toy_space(toy_gmm):
    from capspace.capability import BlockParams, build_capability_space

    params = BlockParams(0.05, 0.9, 0.05, 0.05, 0.9, 0.05)
    return build_capability_space(toy_gmm, 0.0, params, block_size=10, seed=0)
