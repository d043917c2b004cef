"""Command line front end.

Subcommands::

    jointsbm generate   --config gen.json --out data/
    jointsbm fit        data/ --method joint --k 6 --out fit/
    jointsbm evaluate   fit/ --truth data/ --out eval/
    jointsbm experiment --config sweep.json --out sweep/ --jobs 4

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or
numerical failure. Set JOINTSBM_LOG=DEBUG (or INFO, ...) for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, graphs, isolated, joint, metrics

# the package re-exports generate() itself, shadowing the submodule, so
# the generator names are imported directly
from .generate import (
    GeneratorConfig,
    NegativeBinomialSizes,
    generate,
    load_theta,
    planted_partition,
    save_generated,
)

log = logging.getLogger(__name__)

USAGE_ERROR = 2
RUNTIME_ERROR = 3


class ConfigError(Exception):
    """Bad vocabulary or values in a config file or flag set."""


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _generator_config(cfg: dict, seed_override: int | None) -> GeneratorConfig:
    try:
        k = int(cfg["k"])
        if "theta_file" in cfg:
            theta = load_theta(cfg["theta_file"])
        else:
            t = cfg["theta"]
            theta = planted_partition(k, float(t["within"]), float(t["between"]))
        sizes = cfg["sizes"]
        if isinstance(sizes, dict):
            sizes = NegativeBinomialSizes(mu=float(sizes["mu"]), r=float(sizes["r"]))
        elif isinstance(sizes, list):
            sizes = tuple(int(s) for s in sizes)
        else:
            sizes = int(sizes)
        seed = int(cfg.get("seed", 0)) if seed_override is None else seed_override
        return GeneratorConfig(
            n_graphs=int(cfg["n_graphs"]),
            sizes=sizes,
            alpha=float(cfg["alpha"]),
            theta=theta,
            seed=seed,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"generator config: {exc}") from exc


def cmd_generate(args) -> int:
    config = _generator_config(_load_json(args.config), args.seed)
    dataset, membership, theta = generate(config)
    manifest = save_generated(args.out, dataset, membership, theta)
    print(manifest)
    return 0


def cmd_fit(args) -> int:
    dataset = graphs.load_dataset(args.dataset)
    k = args.k if args.k is not None else graphs.manifest_k_hint(args.dataset)
    if k is None:
        raise ConfigError("no --k given and the manifest has no k_hint")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.method == "joint":
        fit = joint.fit_joint(
            dataset,
            joint.FitOptions(
                k=k,
                epsilon=args.epsilon,
                max_iter=args.max_iter,
                n_restarts=args.restarts,
                seed=args.seed,
            ),
        )
        membership = fit.membership
        model = {
            "method": "joint",
            "k": k,
            "w": fit.w.tolist(),
            "loss_trace": fit.loss_trace.tolist(),
            "converged": fit.converged,
            "iterations": fit.iterations,
            "seed": fit.seed,
        }
    elif args.method in isolated.ALIGNMENT_METHODS:
        iso = isolated.fit_isolated(
            dataset,
            k,
            method=args.method,
            seed=args.seed,
            max_iter=args.max_iter,
            n_restarts=args.restarts,
        )
        membership = iso.memberships_aligned
        model = {
            "method": args.method,
            "k": k,
            "alignment": iso.alignment,
            "centers": [c.tolist() for c in iso.centers],
            "seed": iso.seed,
        }
    else:
        raise ConfigError(f"unknown method {args.method!r}")
    graphs.save_membership(membership, out / "membership.csv")
    with open(out / "model.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model, fh, indent=2)
        fh.write("\n")
    print(out / "membership.csv")
    return 0


def cmd_evaluate(args) -> int:
    truth_dir = Path(args.truth)
    fit_dir = Path(args.fit)
    truth_path = truth_dir / "truth.csv"
    if not truth_path.exists():
        raise FileNotFoundError(f"missing truth file {truth_path}")
    truth = graphs.load_membership(truth_path)
    pred = graphs.load_membership(fit_dir / "membership.csv", k=truth.k)

    theta_hat = None
    theta_true = None
    theta_path = truth_dir / "theta_true.csv"
    manifest = truth_dir / "manifest.json"
    if theta_path.exists() and manifest.exists():
        theta_true = load_theta(theta_path)
        dataset = graphs.load_dataset(manifest)
        # fitted labels carry an arbitrary permutation; match the truth's
        # numbering before reading the estimate cell by cell
        aligned = metrics.align_membership(pred, truth)
        theta_hat = metrics.estimate_theta_pooled(dataset, aligned, theta_true.k)
    report = metrics.evaluate_membership(
        pred, truth, theta_hat=theta_hat, theta_true=theta_true
    )
    jpath, cpath = metrics.write_report(report, args.out)
    print(jpath)
    print(cpath)
    return 0


def cmd_experiment(args) -> int:
    cfg = _load_json(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        spec = experiments.ExperimentSpec.from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"experiment config: {exc}") from exc
    results = experiments.run_experiment(spec, args.out, jobs=args.jobs)
    print(results)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointsbm",
        description="Shared community estimation across non-aligned graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a synthetic dataset")
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit communities to a dataset")
    p.add_argument("dataset", help="dataset directory or manifest path")
    p.add_argument(
        "--method",
        required=True,
        choices=("joint",) + isolated.ALIGNMENT_METHODS,
    )
    p.add_argument("--k", type=int, default=None, help="number of communities")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score a fit against stored truth")
    p.add_argument("fit", help="fit output directory")
    p.add_argument("--truth", required=True, help="dataset directory with truth.csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run a replicated parameter sweep")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("JOINTSBM_LOG", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalise anything else
        return USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (np.linalg.LinAlgError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
