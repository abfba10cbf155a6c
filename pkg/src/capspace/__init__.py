"""Economic complexity from capabilities: ECI/PCI, the Product Space, a
block-structured capability model, calibration, inference, and regressions."""

from .capability import (
    BlockParams,
    CapabilitySpace,
    Product,
    ProductCatalog,
    build_capability_space,
    capability_k1,
    catalog_outputs,
    ces_output,
    export_shares,
    generate_catalog,
    set_k1,
    simulated_product_space,
)
from .calibrate import CmaConfig, ModelConfig, calibrate_block_params, cma_es
from .community import leiden_partition, modularity
from .complexity import ComplexityResult, eci_pci, method_of_reflections
from .econ import growth_regression, ordered_logit, ols_hc1, vif
from .gmm import GmmFit, fit_gmm, select_n_by_aic
from .inference import (
    anneal_capabilities,
    infer_capabilities,
    isj_bandwidth,
    kl_divergence,
    target_vector,
)
from .ingest import (
    ExportTable,
    SpecializationMatrix,
    binarize,
    compute_rca,
    parse_trade_csv,
)
from .product_space import (
    ProximityNetwork,
    adaptive_threshold,
    density_omega,
    graph_density,
    ks_two_sample,
    network_report,
    proximity_matrix,
    transitivity,
)

__version__ = "0.1.0"

__all__ = [
    "BlockParams",
    "CapabilitySpace",
    "CmaConfig",
    "ComplexityResult",
    "ExportTable",
    "GmmFit",
    "ModelConfig",
    "Product",
    "ProductCatalog",
    "ProximityNetwork",
    "SpecializationMatrix",
    "adaptive_threshold",
    "anneal_capabilities",
    "binarize",
    "build_capability_space",
    "calibrate_block_params",
    "capability_k1",
    "catalog_outputs",
    "ces_output",
    "cma_es",
    "compute_rca",
    "density_omega",
    "eci_pci",
    "export_shares",
    "fit_gmm",
    "generate_catalog",
    "graph_density",
    "growth_regression",
    "infer_capabilities",
    "isj_bandwidth",
    "kl_divergence",
    "ks_two_sample",
    "leiden_partition",
    "method_of_reflections",
    "modularity",
    "network_report",
    "ordered_logit",
    "ols_hc1",
    "parse_trade_csv",
    "proximity_matrix",
    "select_n_by_aic",
    "set_k1",
    "simulated_product_space",
    "target_vector",
    "transitivity",
    "vif",
]
