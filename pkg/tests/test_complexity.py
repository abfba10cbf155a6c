import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capspace.complexity import (
    DisconnectedError,
    EmptyMarginError,
    eci_pci,
    m_hat,
    m_tilde,
    method_of_reflections,
)
from capspace.ingest import SpecializationMatrix

from conftest import random_connected_specialization, random_specialization


def test_m_tilde_fixture(fx_m):
    np.testing.assert_allclose(m_tilde(fx_m), [[0.75, 0.25], [0.5, 0.5]], atol=1e-15)


def test_reflections_fixture(fx_m):
    s1 = method_of_reflections(fx_m, 1)
    np.testing.assert_allclose(s1.k_c, [1.5, 2.0])
    s2 = method_of_reflections(fx_m, 2)
    np.testing.assert_allclose(s2.k_c, [1.75, 1.5])


def test_eci_fixture(fx_m):
    res = eci_pci(fx_m)
    np.testing.assert_allclose(res.eci, [1.0, -1.0], atol=1e-10)
    assert res.second_eigenvalue_c == pytest.approx(0.25, abs=1e-10)
    assert not res.degenerate


def test_degenerate_flag(fx_m3):
    # symmetric 3-cycle design: the second eigenvalue is a repeated pair
    res = eci_pci(fx_m3)
    assert res.degenerate


def test_empty_margin_rejected():
    s = SpecializationMatrix(
        countries=("a", "b"), products=("x", "y"), m=np.array([[1, 1], [0, 0]])
    )
    with pytest.raises(EmptyMarginError):
        m_tilde(s)


def test_disconnected_rejected():
    s = SpecializationMatrix(
        countries=("a", "b"), products=("x", "y"), m=np.eye(2, dtype=np.int8)
    )
    with pytest.raises(DisconnectedError):
        eci_pci(s)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=50, deadline=None)
def test_row_stochastic(seed):
    s = random_specialization(seed)
    for op in (m_tilde(s), m_hat(s)):
        np.testing.assert_allclose(op.sum(axis=1), 1.0, atol=1e-12)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_reflections_even_iterations_match_operator(seed):
    s = random_specialization(seed)
    state = method_of_reflections(s, 2)
    direct = m_tilde(s) @ s.diversity.astype(float)
    np.testing.assert_allclose(state.k_c, direct, rtol=1e-10)


def _dense_second(op, z=True):
    lam, vec = np.linalg.eig(op)
    order = np.argsort(-lam.real)
    v = vec[:, order[1]].real
    if z:
        v = (v - v.mean()) / v.std()
    return lam.real[order[1]], v


@pytest.mark.parametrize("seed", range(20))
def test_eigen_oracle_dense(seed):
    s = random_connected_specialization(seed, shape=(6, 6))
    res = eci_pci(s)
    if res.degenerate:
        pytest.skip("degenerate spectrum; eigenvector not unique")
    lam, v = _dense_second(m_tilde(s))
    assert res.second_eigenvalue_c == pytest.approx(lam, abs=1e-8)
    sign = 1.0 if v @ res.eci > 0 else -1.0
    np.testing.assert_allclose(res.eci, sign * v, atol=1e-8)


def test_eci_mean_zero_unit_sd(fx_m3):
    s = random_connected_specialization(42, shape=(8, 9))
    res = eci_pci(s)
    for v in (res.eci, res.pci):
        assert abs(v.mean()) < 1e-10
        assert v.std() == pytest.approx(1.0, abs=1e-10)  # population sd


def test_eci_sign_follows_diversity():
    s = random_connected_specialization(7, shape=(10, 12))
    res = eci_pci(s)
    div = s.diversity.astype(float)
    assert np.dot(res.eci, div - div.mean()) >= 0
