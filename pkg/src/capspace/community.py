"""Weighted modularity and community detection for proximity networks."""

from __future__ import annotations

import numpy as np

from .product_space import ProximityNetwork


def _relabel(labels: np.ndarray) -> np.ndarray:
    """Make community ids contiguous from 0, preserving first-appearance order."""
    _, inv = np.unique(labels, return_inverse=True)
    order = {}
    out = np.empty_like(inv)
    for i, c in enumerate(inv):
        if c not in order:
            order[c] = len(order)
        out[i] = order[c]
    return out


def modularity(net: ProximityNetwork, partition: np.ndarray) -> float:
    """Weighted modularity of a partition (Newman's definition)."""
    phi = net.phi
    partition = np.asarray(partition)
    if partition.shape[0] != net.n_nodes:
        raise ValueError("partition length must equal node count")
    two_m = phi.sum()
    if two_m == 0:
        return 0.0
    strengths = phi.sum(axis=1)
    q = 0.0
    for c in np.unique(partition):
        idx = partition == c
        q += phi[np.ix_(idx, idx)].sum() / two_m
        q -= (strengths[idx].sum() / two_m) ** 2
    return float(q)


def _local_move(phi: np.ndarray, strengths: np.ndarray, labels: np.ndarray, rng) -> bool:
    """Queue-based local moving phase; returns True if any node moved."""
    n = phi.shape[0]
    two_m = phi.sum()
    comm_strength = np.bincount(labels, weights=strengths, minlength=labels.max() + 1)
    queue = list(rng.permutation(n))
    in_queue = np.ones(n, dtype=bool)
    moved_any = False
    while queue:
        i = queue.pop(0)
        in_queue[i] = False
        old = labels[i]
        w = phi[i]
        link = np.bincount(labels, weights=w, minlength=comm_strength.size)
        link[old] -= phi[i, i]  # a self-loop moves with the node; not a tie to old
        comm_strength[old] -= strengths[i]
        # gain of joining community c with node i detached
        gains = link - strengths[i] * comm_strength / two_m
        best = int(np.argmax(gains))
        if gains[best] <= gains[old] + 1e-12:
            best = old
        labels[i] = best
        comm_strength[best] += strengths[i]
        if best != old:
            moved_any = True
            neighbors = np.nonzero(w > 0)[0]
            for j in neighbors:
                if labels[j] != best and not in_queue[j]:
                    queue.append(int(j))
                    in_queue[j] = True
    return moved_any


def _refine(phi: np.ndarray, strengths: np.ndarray, labels: np.ndarray, rng) -> np.ndarray:
    """Split each community into well-connected sub-communities by greedy merging."""
    n = phi.shape[0]
    two_m = phi.sum()
    refined = np.arange(n)
    sub_strength = strengths.copy()
    for c in np.unique(labels):
        members = np.nonzero(labels == c)[0]
        for i in rng.permutation(members):
            if refined[i] != i:
                continue  # only still-singleton nodes initiate merges
            link = np.bincount(refined[members], weights=phi[i][members], minlength=n)
            link[i] = 0.0
            gains = link - strengths[i] * sub_strength / two_m
            gains[link == 0] = -np.inf
            best = int(np.argmax(gains))
            if gains[best] > 0:
                sub_strength[best] += strengths[i]
                refined[i] = best
    return _relabel(refined)


def leiden_partition(net: ProximityNetwork, seed: int = 0, max_iter: int = 10) -> np.ndarray:
    """Leiden-style modularity maximization: local move, refinement, aggregation.

    Deterministic for a given seed; returns contiguous community ids.
    """
    rng = np.random.default_rng(seed)
    phi = net.phi.copy()
    n = net.n_nodes
    labels = np.arange(n)
    node_map = np.arange(n)  # original node -> current aggregate node

    for _ in range(max_iter):
        strengths = phi.sum(axis=1)
        if phi.sum() == 0:
            break
        moved = _local_move(phi, strengths, labels, rng)
        labels = _relabel(labels)
        if labels.max() == 0 or not moved:
            break
        refined = _refine(phi, strengths, labels, rng)
        if refined.max() + 1 == phi.shape[0]:
            break  # refinement left all singletons; aggregation is a no-op
        # aggregate on the refined partition; communities constrain the next pass
        k = refined.max() + 1
        agg = np.zeros((k, phi.shape[0]))
        agg[refined, np.arange(phi.shape[0])] = 1.0
        phi = agg @ phi @ agg.T  # diagonal self-loops carry internal weight
        new_labels = np.zeros(k, dtype=int)
        for sub in range(k):
            new_labels[sub] = labels[np.nonzero(refined == sub)[0][0]]
        labels = _relabel(new_labels)
        node_map = refined[node_map]

    final = labels[node_map]
    return _relabel(final)


def pci_bin_partition(pci: np.ndarray, n_bins: int) -> np.ndarray:
    """Equal-width bins over [min(pci), max(pci)] as a community partition."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    pci = np.asarray(pci, dtype=float)
    lo, hi = pci.min(), pci.max()
    if hi == lo:
        return np.zeros(pci.size, dtype=int)
    bins = np.minimum((pci - lo) / (hi - lo) * n_bins, n_bins - 1).astype(int)
    return _relabel(bins)


def best_pci_partition(
    net: ProximityNetwork, pci: np.ndarray, n_max: int = 20
) -> tuple[int, float]:
    """Scan bin counts 1..n_max and return (best_n, max modularity)."""
    best_n, best_q = 1, -np.inf
    for n in range(1, n_max + 1):
        q = modularity(net, pci_bin_partition(pci, n))
        if q > best_q:
            best_n, best_q = n, q
    return best_n, float(best_q)
