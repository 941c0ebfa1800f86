"""Command-line front end: simulate, fit, summarize, compare, scenarios.

Exit codes: 0 on success, 1 on validation/input errors, 2 on numerical
failures. Every command takes --seed and is bit-reproducible given it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import (
    Hyperparameters,
    NumericalError,
    ValidationError,
    dataset_fingerprint,
    upper_triangle,
)
from .gibbs import run_chain
from .harness import VARIANTS, interval_metrics, run_scenario, scaled_mse
from .io import (
    FORMAT_VERSION,
    read_chain,
    read_dataset,
    read_truth,
    write_chain,
    write_dataset,
    write_report,
    write_summary,
    write_truth,
)
from .rng import Rng
from .simulate import builtin_scenarios, generate_dataset, generate_truth
from .summarize import (
    coefficient_summary,
    implied_cross_covariance,
    spatial_correlation_curve,
)

# keys a config file may set; anything else is rejected
_CONFIG_KEYS = {
    "rank",
    "shrink_exp",
    "var_shape",
    "var_rate",
    "slab_df",
    "incl_a",
    "incl_b",
    "decay_grid",
    "iterations",
    "burnin",
    "seed",
    "kernel_jitter",
    "whiten_latents",
    "variant",
}


def _load_config(path):
    if path is None:
        return {}
    file = Path(path)
    if not file.exists():
        raise ValidationError(f"missing config file: {file}")
    try:
        payload = json.loads(file.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"corrupt config {file}: {exc}") from exc
    version = payload.pop("version", None)
    if version != FORMAT_VERSION:
        raise ValidationError(f"config version {version} unsupported")
    unknown = set(payload) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return payload


def _hyper_from(args, config):
    """Assemble Hyperparameters: package defaults <- config file <- flags."""
    fields = {}
    for key in _CONFIG_KEYS - {"variant"}:
        if key in config:
            fields[key] = config[key]
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    if "decay_grid" in fields:
        fields["decay_grid"] = np.asarray(fields["decay_grid"], dtype=np.float64)
    return Hyperparameters(**fields).validate()


def _scenario_config(args):
    index = args.scenario
    scenarios = builtin_scenarios(
        n_subjects=args.subjects if args.subjects else 100,
        n_nodes=args.nodes if args.nodes else 20,
        seed=args.seed if args.seed is not None else 0,
    )
    if not 1 <= index <= len(scenarios):
        raise ValidationError(f"scenario must be 1..{len(scenarios)}, got {index}")
    return scenarios[index - 1]


def _cmd_scenarios(args):
    print("scenario  sparsity  decay  subjects  nodes  rank  tau_y2  tau_z2")
    for k, cfg in enumerate(builtin_scenarios(), start=1):
        print(
            f"{k:>8}  {cfg.sparsity:>8.2f}  {cfg.decay_true:>5.2f}  "
            f"{cfg.n_subjects:>8}  {cfg.n_nodes:>5}  {cfg.rank_true:>4}  "
            f"{cfg.tau_y2_true:>6.1f}  {cfg.tau_z2_true:>6.1f}"
        )
    return 0


def _cmd_simulate(args):
    cfg = _scenario_config(args)
    rng = Rng(cfg.seed).derive(0, 0)
    truth = generate_truth(cfg, rng)
    data = generate_dataset(cfg, truth, rng)
    out = Path(args.out)
    write_dataset(data, out, edge_format=args.edge_format)
    scenario = {
        "index": args.scenario,
        "sparsity": cfg.sparsity,
        "decay_true": cfg.decay_true,
        "n_subjects": cfg.n_subjects,
        "n_nodes": cfg.n_nodes,
        "rank_true": cfg.rank_true,
        "seed": cfg.seed,
    }
    write_truth(truth, out / "truth", scenario=scenario)
    print(f"wrote dataset ({cfg.n_subjects} subjects, {cfg.n_nodes} nodes) to {out}")
    return 0


def _cmd_fit(args):
    config = _load_config(args.config)
    variant_name = args.variant or config.get("variant") or "spatial-joint"
    if variant_name not in VARIANTS:
        raise ValidationError(
            f"unknown variant {variant_name!r}; expected one of {sorted(VARIANTS)}"
        )
    variant = VARIANTS[variant_name]
    hyper = _hyper_from(args, config)
    data = read_dataset(args.data)
    chain = run_chain(
        data,
        hyper,
        rng=Rng(hyper.seed),
        network=variant.network,
        attributes=variant.attributes,
        spatial=variant.spatial,
    )
    write_chain(chain, args.out)
    print(
        f"wrote chain ({len(chain)} kept draws, variant {variant_name}) to {args.out}"
    )
    return 0


def _cmd_summarize(args):
    chain = read_chain(args.chain)
    data = read_dataset(args.data)
    if chain.dataset_fingerprint != dataset_fingerprint(data):
        raise ValidationError(
            "chain/dataset fingerprint mismatch: the chain was fitted on "
            "different data"
        )
    summary = coefficient_summary(chain, level=args.level, threshold=args.threshold)
    decay_true = None
    truth = None
    if args.truth:
        truth = read_truth(args.truth)
        meta = json.loads((Path(args.truth) / "meta.json").read_text())
        decay_true = meta.get("scenario", {}).get("decay_true")
    curve = None
    if chain.variant_flags.get("attributes", True) and data.n_subjects >= 2:
        curve_rng = Rng(args.seed).derive(1001) if args.seed is not None else None
        curve = spatial_correlation_curve(
            chain, data, bins=args.bins, decay_true=decay_true, rng=curve_rng
        )
    cross = implied_cross_covariance(chain, 1.0)
    out = write_summary(summary, args.out, curve=curve, cross_covariance=cross)
    if truth is not None:
        metrics = interval_metrics(summary, truth)
        edge_truth = upper_triangle(truth.edge_coef)
        if np.any(edge_truth != 0.0):
            metrics["edge_mse"] = scaled_mse(upper_triangle(summary.edge_mean), edge_truth)
        if np.any(truth.attr_coef != 0.0):
            metrics["attr_mse"] = scaled_mse(summary.attr_mean, truth.attr_coef)
        (out / "truth_metrics.json").write_text(
            json.dumps(metrics, sort_keys=True, indent=1) + "\n"
        )
    print(f"wrote summary ({summary.selected.size} selected nodes) to {out}")
    return 0


def _cmd_compare(args):
    cfg = _scenario_config(args)
    config = _load_config(args.config)
    hyper = _hyper_from(args, config)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    report = run_scenario(
        cfg,
        variants=variants,
        replicates=args.replicates,
        parallelism=args.parallelism,
        seed=hyper.seed,
        hyper=hyper,
    )
    write_report(report, args.out)
    print(f"wrote report ({args.replicates} replicates) to {args.out}")
    for kind in variants:
        agg = report.aggregates[kind]
        edge = agg["edge_mse"]["mean"]
        attr = agg["attr_mse"]["mean"]
        print(
            f"  {kind}: edge MSE "
            + (f"{edge:.4f}" if edge is not None else "n/a")
            + ", attr MSE "
            + (f"{attr:.4f}" if attr is not None else "n/a")
        )
    if report.failures:
        print(f"  {len(report.failures)} failures recorded", file=sys.stderr)
    return 0


def _add_hyper_flags(parser):
    parser.add_argument("--rank", type=int, default=None, help="latent rank")
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--burnin", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--whiten-latents",
        dest="whiten_latents",
        action="store_const",
        const=True,
        default=None,
        help="use the spatially whitened node-latent update (default)",
    )
    parser.add_argument(
        "--no-whiten-latents",
        dest="whiten_latents",
        action="store_const",
        const=False,
        help="use the unwhitened node-latent update instead",
    )
    parser.add_argument("--config", default=None, help="flat JSON config file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spatnet",
        description=(
            "Joint Bayesian modeling of multi-subject networks and spatially "
            "correlated nodal attributes"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("scenarios", help="list the built-in simulation scenarios")

    sim = sub.add_parser("simulate", help="write a simulated dataset and its truth")
    sim.add_argument("--scenario", type=int, required=True, help="scenario number 1..7")
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--subjects", type=int, default=None)
    sim.add_argument("--nodes", type=int, default=None)
    sim.add_argument("--edge-format", choices=("long", "matrix"), default="long")

    fit = sub.add_parser("fit", help="run the Gibbs sampler on a dataset")
    fit.add_argument("--data", required=True)
    fit.add_argument("--variant", choices=sorted(VARIANTS), default=None)
    fit.add_argument("--out", required=True)
    _add_hyper_flags(fit)

    summ = sub.add_parser("summarize", help="summarize a fitted chain")
    summ.add_argument("--chain", required=True)
    summ.add_argument("--data", required=True)
    summ.add_argument("--truth", default=None)
    summ.add_argument("--out", required=True)
    summ.add_argument("--level", type=float, default=0.95)
    summ.add_argument("--threshold", type=float, default=0.5)
    summ.add_argument("--bins", type=int, default=15)
    summ.add_argument(
        "--seed",
        type=int,
        default=None,
        help="override the predictive-sampling stream (defaults to the chain seed)",
    )

    comp = sub.add_parser("compare", help="replicate a scenario across variants")
    comp.add_argument("--scenario", type=int, required=True)
    comp.add_argument("--replicates", type=int, default=5)
    comp.add_argument(
        "--variants",
        default="spatial-joint,nonspatial-joint,independent-network",
    )
    comp.add_argument(
        "--parallelism",
        type=int,
        default=int(os.environ.get("SPATNET_PARALLELISM", "1")),
        help="worker processes (env default SPATNET_PARALLELISM); results are "
        "identical at any level",
    )
    comp.add_argument("--out", required=True)
    comp.add_argument("--subjects", type=int, default=None)
    comp.add_argument("--nodes", type=int, default=None)
    _add_hyper_flags(comp)

    return parser


_COMMANDS = {
    "scenarios": _cmd_scenarios,
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "summarize": _cmd_summarize,
    "compare": _cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; exit code 2 is reserved for
        # numerical failures, so usage problems report as validation errors
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
