"""Block-structured capability space, product generation, and CES production."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .gmm import GmmFit
from .product_space import ProximityNetwork

CORE = "core"
PERIPHERY = "periphery"


@dataclass(frozen=True)
class BlockParams:
    """The six block-pair proximity scalars of the capability space."""

    periphery_between: float
    periphery_within: float
    periphery_to_core: float
    core_between: float
    core_within: float
    core_to_periphery: float

    def __post_init__(self):
        for name, v in self.as_dict().items():
            if not (0 < v <= 1):
                raise ValueError(f"{name}={v} outside (0, 1]")
        if self.periphery_between > self.periphery_within:
            raise ValueError("periphery between-block proximity exceeds within-block")
        if self.core_between > self.core_within:
            raise ValueError("core between-block proximity exceeds within-block")

    def as_dict(self) -> dict[str, float]:
        return {
            "periphery_between": self.periphery_between,
            "periphery_within": self.periphery_within,
            "periphery_to_core": self.periphery_to_core,
            "core_between": self.core_between,
            "core_within": self.core_within,
            "core_to_periphery": self.core_to_periphery,
        }

    @classmethod
    def from_vector(cls, v) -> "BlockParams":
        pb, pw, pc, cb, cw, cp = (float(x) for x in v)
        return cls(pb, pw, pc, cb, cw, cp)

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                self.periphery_between,
                self.periphery_within,
                self.periphery_to_core,
                self.core_between,
                self.core_within,
                self.core_to_periphery,
            ]
        )


@dataclass(frozen=True)
class Block:
    kind: str  # CORE or PERIPHERY
    start: int
    stop: int
    component: int  # index into the source mixture, mean-ascending order

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class BlockLayout:
    blocks: tuple[Block, ...]

    @property
    def n_capabilities(self) -> int:
        return self.blocks[-1].stop

    def block_of(self, capability: int) -> int:
        for i, b in enumerate(self.blocks):
            if b.start <= capability < b.stop:
                return i
        raise IndexError(capability)


@dataclass(frozen=True)
class CapabilitySpace:
    """Capability-capability relatedness matrix with block layout.

    ``phi_c`` has unit diagonal; in beta mode off-diagonal entries are drawn
    independently per ordered pair, so the matrix may be asymmetric.
    """

    phi_c: np.ndarray
    layout: BlockLayout
    params: BlockParams
    mode: str
    kappa: float
    seed: int

    def __post_init__(self):
        self.phi_c.setflags(write=False)

    @property
    def n_capabilities(self) -> int:
        return self.phi_c.shape[0]


def build_capability_space(
    gmm: GmmFit,
    pci_mean: float,
    params: BlockParams,
    block_size: int,
    mode: str = "constant",
    kappa: float = 1000.0,
    seed: int = 0,
) -> CapabilitySpace:
    """Assemble the block matrix from a PCI mixture fit.

    One block per mixture component, ordered by component mean (periphery to
    core); a component is core when its mean exceeds the overall PCI mean.
    Beta mode replaces each constant entry with a Beta draw of matching mean.
    """
    if mode not in ("constant", "beta"):
        raise ValueError(f"unknown mode {mode!r}")
    if kappa <= 0:
        raise ValueError("kappa must be positive")

    blocks = []
    for i, mu in enumerate(gmm.means):  # means sorted ascending at fit time
        kind = CORE if mu > pci_mean else PERIPHERY
        blocks.append(Block(kind=kind, start=i * block_size, stop=(i + 1) * block_size, component=i))
    layout = BlockLayout(blocks=tuple(blocks))
    n_a = layout.n_capabilities

    mu_matrix = np.empty((n_a, n_a))
    for bi in layout.blocks:
        for bj in layout.blocks:
            if bi is bj:
                v = params.core_within if bi.kind == CORE else params.periphery_within
            elif bi.kind == bj.kind:
                v = params.core_between if bi.kind == CORE else params.periphery_between
            elif bi.kind == PERIPHERY:
                v = params.periphery_to_core
            else:
                v = params.core_to_periphery
            mu_matrix[bi.start : bi.stop, bj.start : bj.stop] = v

    if mode == "constant":
        phi = mu_matrix
    else:
        rng = np.random.default_rng(seed)
        alpha = kappa * mu_matrix
        beta = kappa * (1 - mu_matrix)
        phi = rng.beta(alpha, beta)
    np.fill_diagonal(phi, 1.0)
    return CapabilitySpace(
        phi_c=phi, layout=layout, params=params, mode=mode, kappa=kappa, seed=seed
    )


@dataclass(frozen=True)
class Product:
    capabilities: tuple[int, ...]
    k0: int
    origin_block: int
    k_scaled: float = float("nan")

    def __post_init__(self):
        if self.k0 != len(set(self.capabilities)) or self.k0 < 1:
            raise ValueError("capabilities must be distinct and non-empty")


@dataclass(frozen=True)
class ProductCatalog:
    """Generated products sorted ascending by capability count."""

    products: tuple[Product, ...]
    k_min: int
    k_max: int
    pci_min: float
    pci_max: float
    # flattened capability indices for vectorized production, aligned to products
    flat_caps: np.ndarray = field(repr=False, default=None)
    offsets: np.ndarray = field(repr=False, default=None)
    k0: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        flat = np.concatenate([np.asarray(p.capabilities) for p in self.products])
        k0 = np.array([p.k0 for p in self.products])
        offsets = np.concatenate([[0], np.cumsum(k0)[:-1]])
        object.__setattr__(self, "flat_caps", flat)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "k0", k0)

    @property
    def k_scaled(self) -> np.ndarray:
        return np.array([p.k_scaled for p in self.products])

    def __len__(self) -> int:
        return len(self.products)


def _default_pci_range(gmm: GmmFit) -> tuple[float, float]:
    lo = float(np.min(gmm.means - 3 * gmm.sds))
    hi = float(np.max(gmm.means + 3 * gmm.sds))
    return lo, hi


def _k_from_gaussian(g: float, pci_min: float, pci_max: float, cap_max: int) -> int:
    """Map a PCI-unit draw linearly onto an integer capability count."""
    if pci_max == pci_min:
        frac = 0.5
    else:
        frac = (g - pci_min) / (pci_max - pci_min)
    k = float(np.round(1 + frac * (cap_max - 1)))  # round half to even
    return int(np.clip(k, 1, cap_max))


def generate_product(
    space: CapabilitySpace,
    gmm: GmmFit,
    cap_max: int,
    rng,
    pci_range: tuple[float, float] | None = None,
) -> Product:
    """Draw one product: block by mixture weight, size from its Gaussian,
    then preferential attachment by average proximity to the current set."""
    if cap_max > space.n_capabilities:
        raise ValueError("cap_max exceeds number of capabilities")
    pci_min, pci_max = pci_range if pci_range is not None else _default_pci_range(gmm)

    block_idx = int(rng.choice(gmm.n, p=gmm.weights))
    block = space.layout.blocks[block_idx]
    g = rng.normal(gmm.means[block_idx], gmm.sds[block_idx])
    k = _k_from_gaussian(g, pci_min, pci_max, cap_max)

    first = int(rng.integers(block.start, block.stop))
    chosen = [first]
    in_set = np.zeros(space.n_capabilities, dtype=bool)
    in_set[first] = True
    prox_sum = space.phi_c[first].copy()
    while len(chosen) < k:
        probs = np.where(in_set, 0.0, prox_sum)
        total = probs.sum()
        probs = probs / total
        nxt = int(rng.choice(space.n_capabilities, p=probs))
        chosen.append(nxt)
        in_set[nxt] = True
        prox_sum += space.phi_c[nxt]
    return Product(capabilities=tuple(sorted(chosen)), k0=k, origin_block=block_idx)


def generate_catalog(
    space: CapabilitySpace,
    gmm: GmmFit,
    n_products: int,
    cap_max: int,
    seed: int,
    pci_range: tuple[float, float] | None = None,
) -> ProductCatalog:
    """Generate ``n_products`` independent products, sorted ascending by size,
    with complexity rescaled onto the PCI range."""
    if n_products < 1:
        raise ValueError("need at least one product")
    pci_min, pci_max = pci_range if pci_range is not None else _default_pci_range(gmm)
    rng = np.random.default_rng(seed)
    products = [
        generate_product(space, gmm, cap_max, rng, (pci_min, pci_max))
        for _ in range(n_products)
    ]
    products.sort(key=lambda p: p.k0)
    k0s = np.array([p.k0 for p in products])
    k_min, k_max = int(k0s.min()), int(k0s.max())
    scaled = _scale_to_pci(k0s, k_min, k_max, pci_min, pci_max)
    products = [
        Product(
            capabilities=p.capabilities,
            k0=p.k0,
            origin_block=p.origin_block,
            k_scaled=float(s),
        )
        for p, s in zip(products, scaled)
    ]
    return ProductCatalog(
        products=tuple(products),
        k_min=k_min,
        k_max=k_max,
        pci_min=pci_min,
        pci_max=pci_max,
    )


def _scale_to_pci(k0, k_min, k_max, pci_min, pci_max):
    k0 = np.asarray(k0, dtype=float)
    if k_max == k_min:
        return np.full(k0.shape, (pci_min + pci_max) / 2)
    return pci_min + (k0 - k_min) / (k_max - k_min) * (pci_max - pci_min)


def set_proximity_avg(space: CapabilitySpace, a1, a2) -> float:
    """Average pairwise relatedness between two capability sets."""
    a1 = np.asarray(sorted(a1), dtype=int)
    a2 = np.asarray(sorted(a2), dtype=int)
    if a1.size == 0 or a2.size == 0:
        raise ValueError("capability sets must be non-empty")
    return float(space.phi_c[np.ix_(a1, a2)].mean())


def set_proximity_max(space: CapabilitySpace, a1, a2, symmetric: bool = True) -> float:
    """Best-match relatedness: mean over a1 of the max proximity into a2.

    With ``symmetric=True`` the minimum of both directions is returned, which
    keeps identical sets at proximity 1.
    """
    a1 = np.asarray(sorted(a1), dtype=int)
    a2 = np.asarray(sorted(a2), dtype=int)
    if a1.size == 0 or a2.size == 0:
        raise ValueError("capability sets must be non-empty")
    forward = float(space.phi_c[np.ix_(a1, a2)].max(axis=1).mean())
    if not symmetric:
        return forward
    backward = float(space.phi_c[np.ix_(a2, a1)].max(axis=1).mean())
    return min(forward, backward)


def simulated_product_space(catalog: ProductCatalog, space: CapabilitySpace) -> ProximityNetwork:
    """Pairwise average set proximity between all generated products.

    In beta mode the stored relatedness matrix may be asymmetric; the two
    directed averages are averaged so the network stays symmetric.
    """
    n_p = len(catalog)
    n_a = space.n_capabilities
    b = np.zeros((n_p, n_a))
    b[np.repeat(np.arange(n_p), catalog.k0), catalog.flat_caps] = 1.0
    s = b @ space.phi_c @ b.T
    s = (s + s.T) / 2
    phi = s / np.outer(catalog.k0, catalog.k0)
    np.fill_diagonal(phi, 0.0)
    return ProximityNetwork(phi=np.clip(phi, 0.0, 1.0), pci=catalog.k_scaled)


def capability_k1(catalog: ProductCatalog, n_capabilities: int) -> np.ndarray:
    """Mean size of the products using each capability (NaN when unused)."""
    counts = np.zeros(n_capabilities)
    sums = np.zeros(n_capabilities)
    np.add.at(counts, catalog.flat_caps, 1.0)
    np.add.at(sums, catalog.flat_caps, np.repeat(catalog.k0, catalog.k0).astype(float))
    with np.errstate(invalid="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def set_k1(catalog: ProductCatalog, capabilities, n_capabilities: int) -> float:
    """First-order complexity of a capability set: mean capability complexity.

    Capabilities used by no product are excluded with a warning.
    """
    k1 = capability_k1(catalog, n_capabilities)
    caps = np.asarray(sorted(capabilities), dtype=int)
    vals = k1[caps]
    used = ~np.isnan(vals)
    if not used.all():
        warnings.warn(
            f"excluding {int((~used).sum())} capabilities unused by any product",
            stacklevel=2,
        )
    if not used.any():
        raise ValueError("no capability in the set is used by any product")
    return float(vals[used].mean())


def capability_density(space: CapabilitySpace, c_set) -> np.ndarray:
    """Per-capability input: average relatedness of the country set to each
    capability (the density analogue on the capability space)."""
    idx = np.asarray(sorted(c_set), dtype=int)
    if idx.size == 0:
        raise ValueError("capability set must be non-empty")
    return space.phi_c[idx].mean(axis=0)


def ces_output(
    space: CapabilitySpace,
    c_set,
    product: Product,
    rho: float,
    nu: float,
    alpha: float = 1.0,
) -> float:
    """CES aggregate of the country's per-capability inputs for one product.

    rho=0 is the geometric-mean (Cobb-Douglas) limit; rho=-inf the Leontief
    minimum. Any zero input with rho <= 0 gives zero output by continuity.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if not (rho <= 1):
        raise ValueError("rho must be <= 1")
    dens = capability_density(space, c_set)
    inputs = dens[np.asarray(product.capabilities, dtype=int)]
    return float(_ces_from_inputs(inputs[None, :], np.array([len(inputs)]), rho, nu, alpha)[0])


def _ces_from_inputs(inputs, k0, rho, nu, alpha):
    """CES over a padded 2-D array of inputs (one product per row)."""
    out = np.empty(inputs.shape[0])
    for i in range(inputs.shape[0]):
        phi = inputs[i, : k0[i]]
        if np.any(phi <= 0) and rho <= 0:
            out[i] = 0.0
            continue
        if np.isneginf(rho):
            out[i] = alpha * np.min(phi) ** nu
        elif rho == 0:
            out[i] = alpha * np.exp(nu * np.mean(np.log(phi)))
        else:
            # log-space evaluation keeps large negative rho from overflowing
            lse = logsumexp(rho * np.log(phi)) - np.log(phi.size)
            out[i] = alpha * np.exp(nu / rho * lse)
    return out


def catalog_outputs(
    space: CapabilitySpace,
    c_set,
    catalog: ProductCatalog,
    rho: float,
    nu: float,
    alpha: float = 1.0,
) -> np.ndarray:
    """Vectorized CES output for every product in the catalog."""
    dens = capability_density(space, c_set)
    flat = dens[catalog.flat_caps]
    k0 = catalog.k0
    ends = catalog.offsets + k0

    if np.any(flat <= 0) and rho <= 0:
        # rare; fall back to the per-product path which handles zeros
        padded = np.zeros((len(catalog), int(k0.max())))
        for i, p in enumerate(catalog.products):
            padded[i, : p.k0] = dens[np.asarray(p.capabilities)]
        return _ces_from_inputs(padded, k0, rho, nu, alpha)

    if np.isneginf(rho):
        mins = np.minimum.reduceat(flat, catalog.offsets)
        return alpha * mins**nu
    log_flat = np.log(flat)
    if rho == 0:
        mean_log = np.add.reduceat(log_flat, catalog.offsets) / k0
        return alpha * np.exp(nu * mean_log)
    terms = rho * log_flat
    m = np.maximum.reduceat(terms, catalog.offsets)
    rep_m = np.repeat(m, k0)
    sums = np.add.reduceat(np.exp(terms - rep_m), catalog.offsets)
    lse = m + np.log(sums) - np.log(k0)
    _ = ends
    return alpha * np.exp(nu / rho * lse)


def export_shares(
    space: CapabilitySpace,
    c_set,
    catalog: ProductCatalog,
    rho: float,
    nu: float,
) -> np.ndarray:
    """Predicted share of each catalog product in the country's production."""
    q = catalog_outputs(space, c_set, catalog, rho, nu)
    total = q.sum()
    if total <= 0:
        raise ValueError("country disconnected from capability space (all outputs zero)")
    return q / total
