"""Command-line pipeline: ingest, complexity, product space, calibration,
simulation, inference, regressions, and figures."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

__version__ = "0.1.0"


def _apply_thread_limit() -> None:
    threads = os.environ.get("CAPSPACE_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stage_seed(root_seed: int, stage: str) -> int:
    """Per-stage RNG seed derived from the root seed and the stage name."""
    digest = hashlib.sha256(stage.encode()).digest()
    tag = int.from_bytes(digest[:4], "little")
    return int(np.random.SeedSequence([root_seed, tag]).generate_state(1)[0])


def write_manifest(out_dir: Path, config: dict, inputs: list[Path], started: float,
                   seeds: dict[str, int]) -> None:
    """Atomic manifest write: config echo, input hashes, timing, stage seeds."""
    manifest = {
        "version": __version__,
        "config": {k: str(v) if isinstance(v, Path) else v for k, v in config.items()},
        "input_hashes": {str(p): _sha256(p) for p in inputs},
        "wall_clock_seconds": time.time() - started,
        "stage_seeds": seeds,
    }
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest-")
    with os.fdopen(fd, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    os.replace(tmp, out_dir / "manifest.json")


def _write_series_csv(path: Path, header: tuple[str, str], codes, values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for code, v in zip(codes, values):
            writer.writerow([code, repr(float(v))])


def _read_series_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        codes, values = [], []
        for row in reader:
            codes.append(row[0])
            values.append(float(row[1]))
    return codes, np.asarray(values)


def _load_specialization(trade_path: Path, year: int):
    from . import ingest

    with open(trade_path, newline="") as fh:
        table = ingest.parse_trade_csv(fh, year)
    return ingest.binarize(ingest.compute_rca(table)).pruned()


def cmd_complexity(args) -> int:
    from .complexity import eci_pci

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seed = stage_seed(args.seed, "complexity")
    s = _load_specialization(Path(args.input), args.year)
    result = eci_pci(s, seed=seed)
    _write_series_csv(out / "eci.csv", ("country", "eci"), s.countries, result.eci)
    _write_series_csv(out / "pci.csv", ("product", "pci"), s.products, result.pci)
    if result.degenerate:
        print("warning: near-degenerate second eigenvalue", file=sys.stderr)
    write_manifest(out, vars(args), [Path(args.input)], started, {"complexity": seed})
    return EXIT_OK


def cmd_product_space(args) -> int:
    from .complexity import eci_pci
    from .ingest import write_matrix_cache
    from .product_space import network_report, proximity_matrix

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seed = stage_seed(args.seed, "product-space")
    s = _load_specialization(Path(args.input), args.year)
    net = proximity_matrix(s)
    pci = eci_pci(s, seed=seed).pci
    report = network_report(net, pci, seed=seed)
    write_matrix_cache(out / "proximity.bin", net.phi)
    _write_series_csv(out / "pci.csv", ("product", "pci"), s.products, pci)
    with open(out / "network_report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    write_manifest(out, vars(args), [Path(args.input)], started, {"product-space": seed})
    return EXIT_OK


def cmd_gmm(args) -> int:
    from .gmm import fit_gmm, gmm_ks_test, select_n_by_aic

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seed = stage_seed(args.seed, "gmm")
    _, pci = _read_series_csv(Path(args.input))
    best_n, table = select_n_by_aic(pci, args.n_max, seed)
    fit = fit_gmm(pci, best_n, seed)
    payload = {
        "n": fit.n,
        "weights": fit.weights.tolist(),
        "means": fit.means.tolist(),
        "sds": fit.sds.tolist(),
        "log_likelihood": fit.log_likelihood,
        "aic": fit.aic,
        "bic": fit.bic,
        "aic_table": {str(k): v for k, v in table.items()},
        "ks_p": gmm_ks_test(fit, pci),
        "pci_mean": float(np.mean(pci)),
    }
    with open(out / "gmm.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    write_manifest(out, vars(args), [Path(args.input)], started, {"gmm": seed})
    return EXIT_OK


def _load_gmm(path: Path):
    from .gmm import GmmFit

    with open(path) as fh:
        d = json.load(fh)
    fit = GmmFit(
        n=d["n"],
        weights=np.asarray(d["weights"]),
        means=np.asarray(d["means"]),
        sds=np.asarray(d["sds"]),
        log_likelihood=d["log_likelihood"],
        aic=d["aic"],
        bic=d["bic"],
    )
    return fit, float(d["pci_mean"])


def cmd_calibrate(args) -> int:
    from .calibrate import CmaConfig, ModelConfig, calibrate_block_params
    from .ingest import read_matrix_cache
    from .product_space import ProximityNetwork

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seed = stage_seed(args.seed, "calibrate")
    gmm, pci_mean = _load_gmm(Path(args.gmm))
    phi = read_matrix_cache(Path(args.proximity))
    _, pci = _read_series_csv(Path(args.pci))
    empirical = ProximityNetwork(phi=phi, pci=pci)
    model = ModelConfig(
        n_products=args.n_products,
        cap_max=args.cap_max,
        block_size=args.block_size,
        mode=args.mode,
        kappa=args.kappa,
    )
    config = CmaConfig(
        seed=seed, population=args.population, generations=args.generations
    )
    result = calibrate_block_params(empirical, gmm, pci_mean, model, config)
    with open(out / "params.json", "w") as fh:
        json.dump(
            {
                "params": result.params.as_dict(),
                "best_ks": result.best_ks,
                "trace": result.trace,
                "comparison": result.comparison,
            },
            fh,
            indent=2,
        )
    write_manifest(
        out, vars(args),
        [Path(args.gmm), Path(args.proximity), Path(args.pci)],
        started, {"calibrate": seed},
    )
    return EXIT_OK


def _load_params(path: Path):
    from .capability import BlockParams

    with open(path) as fh:
        d = json.load(fh)
    return BlockParams(**d["params"])


def cmd_simulate(args) -> int:
    from .capability import build_capability_space, generate_catalog, simulated_product_space
    from .ingest import write_matrix_cache

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seed = stage_seed(args.seed, "simulate")
    gmm, pci_mean = _load_gmm(Path(args.gmm))
    params = _load_params(Path(args.params))
    space = build_capability_space(
        gmm, pci_mean, params, block_size=args.block_size,
        mode=args.mode, kappa=args.kappa, seed=seed,
    )
    catalog = generate_catalog(space, gmm, args.n_products, args.cap_max, seed=seed + 1)
    net = simulated_product_space(catalog, space)
    write_matrix_cache(out / "simulated_proximity.bin", net.phi)
    write_matrix_cache(out / "capability_phi.bin", space.phi_c)
    with open(out / "catalog.json", "w") as fh:
        json.dump(
            {
                "k_min": catalog.k_min,
                "k_max": catalog.k_max,
                "pci_min": catalog.pci_min,
                "pci_max": catalog.pci_max,
                "products": [
                    {"capabilities": list(p.capabilities), "k0": p.k0,
                     "origin_block": p.origin_block, "k_scaled": p.k_scaled}
                    for p in catalog.products
                ],
            },
            fh,
        )
    write_manifest(out, vars(args), [Path(args.gmm), Path(args.params)], started,
                   {"simulate": seed})
    return EXIT_OK


def _load_catalog(path: Path):
    from .capability import Product, ProductCatalog

    with open(path) as fh:
        d = json.load(fh)
    products = tuple(
        Product(
            capabilities=tuple(p["capabilities"]),
            k0=p["k0"],
            origin_block=p["origin_block"],
            k_scaled=p["k_scaled"],
        )
        for p in d["products"]
    )
    return ProductCatalog(
        products=products, k_min=d["k_min"], k_max=d["k_max"],
        pci_min=d["pci_min"], pci_max=d["pci_max"],
    )


def cmd_infer(args) -> int:
    from .capability import CapabilitySpace, set_k1
    from .ingest import read_matrix_cache
    from .inference import country_targets, infer_capabilities

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seed = stage_seed(args.seed, "infer")
    params = _load_params(Path(args.params))
    gmm, pci_mean = _load_gmm(Path(args.gmm))
    _ = (gmm, pci_mean)
    phi_c = read_matrix_cache(Path(args.capability_phi))
    catalog = _load_catalog(Path(args.catalog))
    _, pci = _read_series_csv(Path(args.pci))

    from . import ingest

    with open(args.trade, newline="") as fh:
        table = ingest.parse_trade_csv(fh, args.year)
    rca = ingest.compute_rca(table)
    if len(rca.products) != pci.size:
        raise ValueError("pci vector does not align with the trade products")
    shares = rca.values / np.maximum(rca.values.sum(axis=1, keepdims=True), 1e-300)

    # layout metadata is irrelevant for inference; only phi_c is used
    from .capability import Block, BlockLayout

    layout = BlockLayout(blocks=(Block(kind="core", start=0, stop=phi_c.shape[0], component=0),))
    space = CapabilitySpace(
        phi_c=phi_c, layout=layout, params=params, mode=args.mode,
        kappa=args.kappa, seed=seed,
    )

    targets, bw, bw_method = country_targets(pci, shares, catalog.k_scaled)
    rho_grid = [float(v) if v != "-inf" else -np.inf for v in args.rho_grid.split(",")]
    nu_grid = [float(v) for v in args.nu_grid.split(",")]

    rows = []
    caps_out = {}
    for i, country in enumerate(rca.countries):
        res = infer_capabilities(
            space, catalog, targets[i],
            seed=int(np.random.SeedSequence([seed, i]).generate_state(1)[0]),
            rho_grid=rho_grid, nu_grid=nu_grid,
            restarts=args.restarts, n_iter=args.iters,
            bandwidth_method=bw_method,
        )
        k1 = set_k1(catalog, res.capabilities, space.n_capabilities)
        rows.append(
            [country, len(res.capabilities), k1, res.kl, res.clarity, res.rho, res.nu]
        )
        caps_out[country] = list(res.capabilities)

    with open(out / "inference.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["code", "K0", "K1", "KL", "clarity", "rho", "nu"])
        writer.writerows(rows)
    with open(out / "capabilities.json", "w") as fh:
        json.dump(caps_out, fh, indent=2)
    write_manifest(
        out, vars(args),
        [Path(args.trade), Path(args.params), Path(args.gmm),
         Path(args.capability_phi), Path(args.catalog), Path(args.pci)],
        started, {"infer": seed},
    )
    _ = bw
    return EXIT_OK


def cmd_regress(args) -> int:
    import pandas as pd

    from .econ import (
        GROWTH_SPECS,
        elasticity_logit,
        growth_regression,
        tidy_ologit,
        tidy_ols,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    panel = pd.read_csv(args.panel, index_col=0)
    if args.spec.startswith("logit-"):
        res = elasticity_logit(panel, args.spec.removeprefix("logit-"))
        payload = tidy_ologit(res)
    else:
        spec = int(args.spec)
        if spec not in GROWTH_SPECS:
            raise ValueError(f"unknown spec {args.spec}")
        payload = tidy_ols(growth_regression(panel, spec))
    with open(out / "regressions.json", "w") as fh:
        json.dump({args.spec: payload}, fh, indent=2)
    with open(out / "regressions.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["spec", "term", "coef", "se", "p", "stars"])
        for row in payload["terms"]:
            writer.writerow([args.spec, row["term"], row["coef"], row["se"],
                             row["p"], row["stars"]])
    write_manifest(out, vars(args), [Path(args.panel)], started, {})
    return EXIT_OK


def cmd_report(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .ingest import read_matrix_cache
    from .product_space import ProximityNetwork, eigenvector_centrality

    out = Path(args.out)
    prox_path = out / "proximity.bin"
    pci_path = out / "pci.csv"
    for path, stage in ((prox_path, "product-space"), (pci_path, "product-space")):
        if not path.exists():
            print(f"missing output of stage {stage}: {path}", file=sys.stderr)
            return EXIT_VALIDATION

    phi = read_matrix_cache(prox_path)
    _, pci = _read_series_csv(pci_path)
    net = ProximityNetwork(phi=phi, pci=pci)
    weights = net.edge_weights()

    def hist_svg(values, title, fname):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if values.size == 0:
            ax.text(0.5, 0.5, "no data", ha="center", va="center")
            print(f"warning: empty data for {title}", file=sys.stderr)
        else:
            ax.hist(values, bins=min(50, max(3, values.size)))
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(out / fname)
        plt.close(fig)

    hist_svg(weights, "Edge weight distribution", "weights.svg")
    hist_svg(net.degrees().astype(float), "Degree distribution", "degrees.svg")
    centrality = (
        eigenvector_centrality(net) if weights.size else np.zeros(net.n_nodes)
    )
    hist_svg(centrality, "Eigenvector centrality distribution", "centrality.svg")

    order = np.argsort(pci)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(phi[np.ix_(order, order)], cmap="viridis", interpolation="nearest")
    ax.set_title("Proximity ordered by complexity")
    fig.tight_layout()
    fig.savefig(out / "heatmap.svg")
    plt.close(fig)

    eci_path, inf_path = out / "eci.csv", out / "inference.csv"
    if eci_path.exists() and inf_path.exists():
        codes, eci = _read_series_csv(eci_path)
        k1 = {}
        with open(inf_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                k1[row["code"]] = float(row["K1"])
        xs = [e for c, e in zip(codes, eci) if c in k1]
        ys = [k1[c] for c in codes if c in k1]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.scatter(xs, ys, s=12)
        ax.set_xlabel("ECI")
        ax.set_ylabel("Average capability complexity")
        fig.tight_layout()
        fig.savefig(out / "eci_vs_k1.svg")
        plt.close(fig)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capspace")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complexity", help="ECI/PCI from a trade CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("product-space", help="proximity network and topology report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_product_space)

    p = sub.add_parser("gmm", help="mixture fit of the complexity distribution")
    p.add_argument("--in", dest="input", required=True, help="pci.csv")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gmm)

    p = sub.add_parser("calibrate", help="fit block parameters to an empirical network")
    p.add_argument("--gmm", required=True)
    p.add_argument("--proximity", required=True)
    p.add_argument("--pci", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--n-products", type=int, default=1000)
    p.add_argument("--cap-max", type=int, default=100)
    p.add_argument("--block-size", type=int, default=25)
    p.add_argument("--mode", choices=("constant", "beta"), default="constant")
    p.add_argument("--kappa", type=float, default=1000.0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="generate a capability space and catalog")
    p.add_argument("--gmm", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-products", type=int, default=1000)
    p.add_argument("--cap-max", type=int, default=100)
    p.add_argument("--block-size", type=int, default=25)
    p.add_argument("--mode", choices=("constant", "beta"), default="constant")
    p.add_argument("--kappa", type=float, default=1000.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("infer", help="infer country capability sets")
    p.add_argument("--trade", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--gmm", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--capability-phi", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--pci", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho-grid", default="1,0,-3,-9,-inf")
    p.add_argument("--nu-grid", default="0.5,1,2,3,4")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--mode", choices=("constant", "beta"), default="constant")
    p.add_argument("--kappa", type=float, default=1000.0)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("regress", help="growth and elasticity regressions")
    p.add_argument("--panel", required=True)
    p.add_argument("--spec", required=True,
                   help="1-4 or logit-rho / logit-nu")
    p.add_argument("--out", required=True)
    p.add_argument("--start-year", type=int, default=2005)
    p.add_argument("--window", type=int, default=20)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("report", help="figures from stage outputs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    _apply_thread_limit()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
