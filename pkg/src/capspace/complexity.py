"""ECI/PCI via the Method of Reflections and its eigenvector steady state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import SpecializationMatrix

_POWER_TOL = 1e-12
_POWER_MAX_ITER = 10_000
_DEGENERACY_TOL = 1e-9


class DisconnectedError(ValueError):
    """The bipartite specialization graph splits into disconnected components."""


class EmptyMarginError(ValueError):
    """A zero diversity/ubiquity row or column is present; prune first."""


@dataclass(frozen=True)
class ReflectionState:
    iteration: int
    k_c: np.ndarray
    k_p: np.ndarray


@dataclass(frozen=True)
class ComplexityResult:
    eci: np.ndarray
    pci: np.ndarray
    second_eigenvalue_c: float
    second_eigenvalue_p: float
    degenerate: bool
    sign_orientation: str = "diversity-positive"


def _check_pruned(s: SpecializationMatrix) -> None:
    if np.any(s.diversity == 0) or np.any(s.ubiquity == 0):
        raise EmptyMarginError(
            "specialization matrix has empty rows/columns; call .pruned() first"
        )


def m_tilde(s: SpecializationMatrix) -> np.ndarray:
    """Country-side reflection operator D^-1 M U^-1 M^T (row-stochastic)."""
    _check_pruned(s)
    m = s.m.astype(float)
    return (m / s.diversity[:, None]) @ (m.T / s.ubiquity[:, None])


def m_hat(s: SpecializationMatrix) -> np.ndarray:
    """Product-side reflection operator U^-1 M^T D^-1 M (row-stochastic)."""
    _check_pruned(s)
    m = s.m.astype(float)
    return (m.T / s.ubiquity[:, None]) @ (m / s.diversity[:, None])


def method_of_reflections(s: SpecializationMatrix, n_iter: int) -> ReflectionState:
    """Alternating country/product averages, starting from diversity/ubiquity."""
    _check_pruned(s)
    if n_iter < 0:
        raise ValueError("n_iter must be non-negative")
    m = s.m.astype(float)
    k_c = s.diversity.astype(float)
    k_p = s.ubiquity.astype(float)
    for _ in range(n_iter):
        k_c, k_p = (m @ k_p) / s.diversity, (m.T @ k_c) / s.ubiquity
    return ReflectionState(iteration=n_iter, k_c=k_c, k_p=k_p)


def _zscore(v: np.ndarray) -> np.ndarray:
    return (v - v.mean()) / v.std()


def _second_eigenpair(op: np.ndarray, weights: np.ndarray, seed: int):
    """Second-largest eigenpair of a row-stochastic reflection operator.

    ``op`` is self-adjoint under the inner product weighted by ``weights``
    (diversity or ubiquity), so the dominant ones-eigenvector can be projected
    out exactly in that inner product. Power iteration with deflation,
    tolerance 1e-12. Returns (eigenvalue, eigenvector, next_eigenvalue).
    """
    n = op.shape[0]
    w = weights.astype(float)
    ones = np.ones(n)
    w_ones = w @ ones

    def deflate(v, basis):
        for b in basis:
            v = v - (w * b) @ v / ((w * b) @ b) * b
        return v

    def power(basis):
        rng = np.random.default_rng(seed)
        v = deflate(rng.standard_normal(n), basis)
        v /= np.linalg.norm(v)
        for _ in range(_POWER_MAX_ITER):
            nv = deflate(op @ v, basis)
            norm = np.linalg.norm(nv)
            if norm == 0:
                return 0.0, v
            nv /= norm
            sign = 1.0 if nv @ v >= 0 else -1.0
            if np.linalg.norm(nv - sign * v) < _POWER_TOL:
                v = nv
                break
            v = nv
        lam = v @ (op @ v)
        return float(lam), v

    _ = w_ones
    lam2, v2 = power([ones])
    lam3, _v3 = power([ones, v2])
    return lam2, v2, lam3


def eci_pci(s: SpecializationMatrix, seed: int = 0) -> ComplexityResult:
    """Second-eigenvector complexity scores, z-scored and diversity-oriented.

    ECI is signed so it correlates non-negatively with diversity; PCI so it
    correlates non-negatively with the M-weighted country scores.
    """
    _check_pruned(s)
    if len(s.countries) < 2 or len(s.products) < 2:
        raise ValueError("need at least 2 countries and 2 products")
    _check_connected(s)

    mt = m_tilde(s)
    mh = m_hat(s)
    lam_c, v_c, lam3_c = _second_eigenpair(mt, s.diversity, seed)
    lam_p, v_p, lam3_p = _second_eigenpair(mh, s.ubiquity, seed)

    degenerate = (abs(lam_c - lam3_c) < _DEGENERACY_TOL) or (
        abs(lam_p - lam3_p) < _DEGENERACY_TOL
    )

    eci = _zscore(v_c)
    div = s.diversity.astype(float)
    if np.dot(eci, div - div.mean()) < 0:
        eci = -eci

    pci = _zscore(v_p)
    proj = s.m.T @ eci
    if np.dot(pci, proj - proj.mean()) < 0:
        pci = -pci

    return ComplexityResult(
        eci=eci,
        pci=pci,
        second_eigenvalue_c=float(lam_c),
        second_eigenvalue_p=float(lam_p),
        degenerate=bool(degenerate),
    )


def _check_connected(s: SpecializationMatrix) -> None:
    """Reject bipartite graphs that split into disconnected components."""
    n_c, n_p = s.m.shape
    seen_c = np.zeros(n_c, dtype=bool)
    seen_p = np.zeros(n_p, dtype=bool)
    stack = [("c", 0)]
    seen_c[0] = True
    while stack:
        kind, i = stack.pop()
        if kind == "c":
            for j in np.nonzero(s.m[i])[0]:
                if not seen_p[j]:
                    seen_p[j] = True
                    stack.append(("p", j))
        else:
            for j in np.nonzero(s.m[:, i])[0]:
                if not seen_c[j]:
                    seen_c[j] = True
                    stack.append(("c", j))
    if not (seen_c.all() and seen_p.all()):
        raise DisconnectedError(
            "bipartite graph is disconnected; compute per component"
        )
