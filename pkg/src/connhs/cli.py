"""Command-line entry point.

Subcommands: gen, build-graph, train, eval, sweep, ablate, label-rate.
Flags mirror config fields in kebab-case and override values loaded from a
JSON config file (--config). The CONNHS_SEED environment variable
overrides any configured seed. Exit codes: 0 success, 2 config or input
error, 3 runtime divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .contrast import MODES, LossConfig
from .corpus import BundleError, SyntheticSpec, generate_synthetic, load_bundle, save_bundle
from .evaluate import (
    SWEEPABLE,
    PipelineConfig,
    results_to_csv,
    results_to_json,
    run_ablation,
    run_experiment,
    run_label_rate_sweep,
    run_sensitivity_sweep,
)
from .graph import ThresholdConfig, build_graph, save_graph_json
from .model import ArchitectureSpec
from .train import DivergenceError, TrainConfig, pretrain, save_checkpoint, write_log_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


class CliError(ValueError):
    """Bad flags, config, or input files."""


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"--config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CliError(f"--config {path}: expected a JSON object")
    return data


def _merge(section: dict, overrides: dict) -> dict:
    merged = dict(section)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    return merged


def _build_pipeline_config(args: argparse.Namespace, dim: int | None = None) -> PipelineConfig:
    file_cfg = _load_config_file(getattr(args, "config", None))
    thresholds = _merge(
        file_cfg.get("thresholds", {}),
        {
            "rho_t": getattr(args, "rho_t", None),
            "rho_e": getattr(args, "rho_e", None),
            "rho_k": getattr(args, "rho_k", None),
            "gamma_e": getattr(args, "gamma_e", None),
            "gamma_k": getattr(args, "gamma_k", None),
        },
    )
    loss = _merge(
        file_cfg.get("loss", {}),
        {
            "tau": getattr(args, "tau", None),
            "sift_threshold": getattr(args, "sift_threshold", None),
            "mode": getattr(args, "mode", None),
        },
    )
    train = _merge(
        file_cfg.get("train", {}),
        {
            "max_epochs": getattr(args, "max_epochs", None),
            "patience": getattr(args, "patience", None),
            "seed": getattr(args, "seed", None),
            "learning_rate": getattr(args, "learning_rate", None),
        },
    )
    env_seed = os.environ.get("CONNHS_SEED")
    if env_seed is not None:
        try:
            train["seed"] = int(env_seed)
        except ValueError as exc:
            raise CliError(f"CONNHS_SEED must be an integer, got {env_seed!r}") from exc
    arch_cfg = _merge(
        file_cfg.get("arch", {}) or {},
        {
            "n_layers": getattr(args, "n_layers", None),
            "hidden_dim": getattr(args, "hidden_dim", None),
            "proj_dim": getattr(args, "proj_dim", None),
            "attention_dim": getattr(args, "attention_dim", None),
        },
    )
    try:
        loss_cfg = LossConfig(**loss)
        arch = None
        if arch_cfg:
            if "feature_dim" not in arch_cfg:
                if dim is None:
                    raise CliError("arch config given without feature_dim and no bundle to infer it")
                arch_cfg["feature_dim"] = dim
            arch = ArchitectureSpec(**arch_cfg)
        return PipelineConfig(
            thresholds=ThresholdConfig(**thresholds),
            loss=loss_cfg,
            train=TrainConfig(loss_cfg=loss_cfg, **train),
            arch=arch,
        )
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from exc


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring the pipeline config")
    p.add_argument("--rho-t", dest="rho_t", type=float)
    p.add_argument("--rho-e", dest="rho_e", type=float)
    p.add_argument("--rho-k", dest="rho_k", type=float)
    p.add_argument("--gamma-e", dest="gamma_e", type=int)
    p.add_argument("--gamma-k", dest="gamma_k", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--sift-threshold", dest="sift_threshold", type=float)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--n-layers", dest="n_layers", type=int)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--proj-dim", dest="proj_dim", type=int)
    p.add_argument("--attention-dim", dest="attention_dim", type=int)
    p.add_argument("--label-rate", dest="label_rate", type=float, default=0.1)
    p.add_argument("--no-timing", action="store_true", help="omit wall-time columns from outputs")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="connhs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic bundle")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--per", type=int, required=True, help="documents per cluster")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--confuser-rate", dest="confuser_rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-graph", help="build the multi-relational graph from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", help="graph export JSON path")
    _add_config_flags(p)

    p = sub.add_parser("train", help="pretrain and write checkpoint and log")
    p.add_argument("--bundle", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--log", help="training log CSV path")
    p.add_argument("--diagnostics", help="per-epoch per-mode mask statistics JSON path")
    _add_config_flags(p)

    p = sub.add_parser("eval", help="full experiment: train, classify, score")
    p.add_argument("--bundle", required=True)
    p.add_argument("--results-json", dest="results_json")
    p.add_argument("--results-csv", dest="results_csv")
    _add_config_flags(p)

    p = sub.add_parser("sweep", help="sensitivity sweep over one hyperparameter")
    p.add_argument("--bundle", required=True)
    p.add_argument("--param", required=True, choices=SWEEPABLE)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--results-json", dest="results_json")
    p.add_argument("--results-csv", dest="results_csv")
    _add_config_flags(p)

    p = sub.add_parser("ablate", help="compare negative-selection modes")
    p.add_argument("--bundle", required=True)
    p.add_argument("--modes", default="NHS,NHS_gs,NHS_na,NT_Xent", help="comma-separated modes")
    p.add_argument("--results-json", dest="results_json")
    p.add_argument("--results-csv", dest="results_csv")
    _add_config_flags(p)

    p = sub.add_parser("label-rate", help="label-rate sweep with shared pretraining")
    p.add_argument("--bundle", required=True)
    p.add_argument("--rates", default="0.01,0.02,0.05,0.1", help="comma-separated rates")
    p.add_argument("--results-json", dest="results_json")
    p.add_argument("--results-csv", dest="results_csv")
    _add_config_flags(p)

    return parser


def _cmd_gen(args) -> int:
    flag_checks = (
        ("--clusters", args.clusters >= 1),
        ("--per", args.per >= 1),
        ("--dim", args.dim >= 1),
        ("--noise", args.noise >= 0),
        ("--confuser-rate", 0.0 <= args.confuser_rate <= 1.0),
    )
    for flag, ok in flag_checks:
        if not ok:
            raise CliError(f"invalid value for {flag}")
    try:
        spec = SyntheticSpec(
            n_clusters=args.clusters,
            docs_per_cluster=args.per,
            dim=args.dim,
            intra_noise=args.noise,
            cross_confuser_rate=args.confuser_rate,
            seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(f"invalid generator flags: {exc}") from exc
    corpus = generate_synthetic(spec)
    save_bundle(corpus, args.out, encoder="synthetic")
    print(f"wrote {len(corpus)} documents to {args.out}")
    return EXIT_OK


def _cmd_build_graph(args) -> int:
    corpus = load_bundle(args.bundle)
    config = _build_pipeline_config(args, dim=corpus.dim)
    graph = build_graph(corpus, config.thresholds)
    for relation in ("title", "keyword", "event"):
        print(f"{relation} edges: {graph.adjacencies[relation].edge_count()}")
    if args.out:
        save_graph_json(graph, args.out)
        print(f"wrote graph export to {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    corpus = load_bundle(args.bundle)
    config = _build_pipeline_config(args, dim=corpus.dim)
    graph = build_graph(corpus, config.thresholds)
    arch = config.resolved_arch(corpus.dim)
    train_cfg = config.train
    if args.diagnostics:
        train_cfg = dataclasses.replace(train_cfg, diagnostics_path=args.diagnostics)
    params, log = pretrain(corpus, graph, train_cfg, arch)
    if log:
        print(f"trained {len(log)} epochs, first loss {log[0].loss:.6f}, last loss {log[-1].loss:.6f}")
    else:
        print("trained 0 epochs (max_epochs=0), keeping initial parameters")
    if args.checkpoint:
        save_checkpoint(args.checkpoint, arch, config.train.seed, params)
        print(f"wrote checkpoint to {args.checkpoint}")
    if args.log:
        write_log_csv(log, args.log, include_timing=not args.no_timing)
        print(f"wrote training log to {args.log}")
    return EXIT_OK


def _write_results(results, args) -> None:
    if getattr(args, "results_json", None):
        results_to_json(results, args.results_json)
        print(f"wrote results JSON to {args.results_json}")
    if getattr(args, "results_csv", None):
        results_to_csv(results, args.results_csv, include_timing=not args.no_timing)
        print(f"wrote results CSV to {args.results_csv}")


def _cmd_eval(args) -> int:
    corpus = load_bundle(args.bundle)
    config = _build_pipeline_config(args, dim=corpus.dim)
    result = run_experiment(corpus, config, label_rate=args.label_rate)
    print(
        f"accuracy {result.accuracy:.4f}  precision {result.precision_macro:.4f}  "
        f"f1 {result.f1_macro:.4f}  baseline {result.baseline_accuracy:.4f}"
    )
    _write_results([result], args)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    corpus = load_bundle(args.bundle)
    config = _build_pipeline_config(args, dim=corpus.dim)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"--values must be comma-separated numbers: {exc}") from exc
    if not values:
        raise CliError("--values is empty")
    results = run_sensitivity_sweep(corpus, config, args.param, values, label_rate=args.label_rate)
    for res in results:
        print(f"{args.param}={res.swept_value}: accuracy {res.accuracy:.4f}")
    _write_results(results, args)
    return EXIT_OK


def _cmd_ablate(args) -> int:
    corpus = load_bundle(args.bundle)
    config = _build_pipeline_config(args, dim=corpus.dim)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise CliError(f"unknown mode {mode!r}, choose from {MODES}")
    results = run_ablation(corpus, config, modes, label_rate=args.label_rate)
    for res in results:
        print(f"{res.mode}: accuracy {res.accuracy:.4f}")
    _write_results(results, args)
    return EXIT_OK


def _cmd_label_rate(args) -> int:
    corpus = load_bundle(args.bundle)
    config = _build_pipeline_config(args, dim=corpus.dim)
    try:
        rates = [float(v) for v in args.rates.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"--rates must be comma-separated numbers: {exc}") from exc
    if not rates:
        raise CliError("--rates is empty")
    results = run_label_rate_sweep(corpus, config, rates)
    for res in results:
        print(f"label_rate={res.label_rate}: accuracy {res.accuracy:.4f}")
    _write_results(results, args)
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "build-graph": _cmd_build_graph,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "ablate": _cmd_ablate,
    "label-rate": _cmd_label_rate,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CliError, BundleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
