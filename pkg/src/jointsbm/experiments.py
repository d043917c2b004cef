"""Replicated parameter sweeps comparing joint and isolated fits.

A sweep is the cartesian product of graph-count values, size
specifications and heterogeneity (alpha) values; every cell is repeated
for a number of replicates. All methods of a replicate share one
sampled dataset. Results land in ``results.csv`` (one row per cell x
replicate x method) and ``summary.csv`` (median and interquartile range
per cell x method); both start with a schema-version comment line.

Replicates are independent units keyed by (cell, replicate); completed
units are appended to ``progress.jsonl`` so an interrupted sweep resumes
where it stopped. Result files carry no timestamps: re-running a sweep
reproduces them byte for byte.
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .generate import (
    Connectivity,
    GeneratorConfig,
    NegativeBinomialSizes,
    generate,
    load_theta,
    planted_partition,
)
from .isolated import ALIGNMENT_METHODS, fit_isolated
from .joint import FitOptions, fit_joint
from .metrics import align_membership, estimate_theta_pooled, evaluate_membership

__all__ = ["ExperimentSpec", "run_experiment", "summarize_rows"]

_RESULTS_SCHEMA = "# jointsbm-results/1"
_SUMMARY_SCHEMA = "# jointsbm-summary/1"

_METHODS = ("joint",) + ALIGNMENT_METHODS

RESULT_FIELDS = [
    "cell",
    "n_graphs",
    "sizes",
    "alpha",
    "replicate",
    "method",
    "k",
    "overall_nmi",
    "individual_nmi_median",
    "ari",
    "mcr",
    "sse",
    "converged",
    "iterations",
]

SUMMARY_METRICS = ["overall_nmi", "individual_nmi_median", "ari", "mcr", "sse"]


@dataclass(frozen=True)
class ExperimentSpec:
    """Axes and fit settings of one sweep."""

    n_graphs_values: tuple[int, ...]
    size_specs: tuple
    alpha_values: tuple[float, ...]
    replicates: int
    k: int
    theta: Connectivity
    methods: tuple[str, ...] = ("joint", "iso1")
    epsilon: float = 1e-6
    max_iter: int = 100
    n_restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.n_graphs_values or not self.size_specs or not self.alpha_values:
            raise ValueError("every sweep axis needs at least one value")
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        bad = [m for m in self.methods if m not in _METHODS]
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {_METHODS}")

    @staticmethod
    def from_dict(cfg: dict) -> "ExperimentSpec":
        """Build a spec from a JSON-style mapping.

        Sizes may be given as ``"sizes": [...]`` (ints, lists or
        ``{"mu":..., "r":...}`` entries) or as the shorthand
        ``"nb": {"mu": 200, "r_values": [1, 5, 10]}``.
        """
        if "theta_file" in cfg:
            theta = load_theta(cfg["theta_file"])
        else:
            t = cfg["theta"]
            theta = planted_partition(int(cfg["k"]), t["within"], t["between"])
        if "nb" in cfg:
            nb = cfg["nb"]
            size_specs = tuple(
                NegativeBinomialSizes(mu=float(nb["mu"]), r=float(r))
                for r in nb["r_values"]
            )
        else:
            size_specs = tuple(_parse_size_spec(s) for s in cfg["sizes"])
        fit = cfg.get("fit", {})
        return ExperimentSpec(
            n_graphs_values=tuple(int(n) for n in cfg["n_graphs"]),
            size_specs=size_specs,
            alpha_values=tuple(float(a) for a in cfg["alphas"]),
            replicates=int(cfg["replicates"]),
            k=int(cfg["k"]),
            theta=theta,
            methods=tuple(cfg.get("methods", ["joint", "iso1"])),
            epsilon=float(fit.get("epsilon", 1e-6)),
            max_iter=int(fit.get("max_iter", 100)),
            n_restarts=int(fit.get("restarts", 5)),
            seed=int(cfg.get("seed", 0)),
        )

    def cells(self) -> list[dict]:
        out = []
        for idx, (n, sizes, alpha) in enumerate(
            product(self.n_graphs_values, self.size_specs, self.alpha_values)
        ):
            out.append(
                {
                    "index": idx,
                    "n_graphs": n,
                    "sizes": sizes,
                    "alpha": alpha,
                    "label": f"N={n}|sizes={_size_label(sizes)}|alpha={alpha:g}",
                }
            )
        return out


def _parse_size_spec(s):
    if isinstance(s, dict):
        return NegativeBinomialSizes(mu=float(s["mu"]), r=float(s["r"]))
    if isinstance(s, (list, tuple)):
        return tuple(int(x) for x in s)
    return int(s)


def _size_label(sizes) -> str:
    if isinstance(sizes, NegativeBinomialSizes):
        return f"nb(mu={sizes.mu:g},r={sizes.r:g})"
    if isinstance(sizes, tuple):
        return "[" + ",".join(str(s) for s in sizes) + "]"
    return str(sizes)


def _run_unit(spec: ExperimentSpec, cell: dict, replicate: int) -> list[dict]:
    """Generate one dataset and score every requested method on it."""
    unit_seed = np.random.SeedSequence(
        [spec.seed, cell["index"], replicate]
    ).generate_state(1)[0]
    config = GeneratorConfig(
        n_graphs=cell["n_graphs"],
        sizes=cell["sizes"],
        alpha=cell["alpha"],
        theta=spec.theta,
        seed=int(unit_seed),
    )
    dataset, truth, theta_true = generate(config)

    rows = []
    for m, method in enumerate(spec.methods):
        fit_seed = int(unit_seed) + m + 1
        if method == "joint":
            fit = fit_joint(
                dataset,
                FitOptions(
                    k=spec.k,
                    epsilon=spec.epsilon,
                    max_iter=spec.max_iter,
                    n_restarts=spec.n_restarts,
                    seed=fit_seed,
                ),
            )
            pred = fit.membership
            converged, iterations = fit.converged, fit.iterations
        else:
            iso = fit_isolated(
                dataset,
                spec.k,
                method=method,
                seed=fit_seed,
                max_iter=spec.max_iter,
                n_restarts=spec.n_restarts,
            )
            pred = iso.memberships_aligned
            converged, iterations = True, 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # boundary/undefined cells in sse
            theta_hat = estimate_theta_pooled(
                dataset, align_membership(pred, truth), spec.k
            )
            report = evaluate_membership(
                pred, truth, theta_hat=theta_hat, theta_true=theta_true
            )
        rows.append(
            {
                "cell": cell["label"],
                "n_graphs": cell["n_graphs"],
                "sizes": _size_label(cell["sizes"]),
                "alpha": repr(float(cell["alpha"])),
                "replicate": replicate,
                "method": method,
                "k": spec.k,
                "overall_nmi": repr(report.overall_nmi),
                "individual_nmi_median": repr(
                    float(np.median(report.individual_nmis))
                ),
                "ari": repr(report.ari),
                "mcr": repr(report.mcr),
                "sse": "" if report.sse is None else repr(report.sse),
                "converged": str(converged).lower(),
                "iterations": iterations,
            }
        )
    return rows


def summarize_rows(rows: Sequence[dict]) -> list[dict]:
    """Median and quartiles of every metric per cell x method."""
    groups: dict[tuple, list[dict]] = {}
    order: list[tuple] = []
    for row in rows:
        key = (row["cell"], row["method"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        cell, method = key
        members = groups[key]
        rec = {
            "cell": cell,
            "method": method,
            "replicates": len(members),
        }
        for metric in SUMMARY_METRICS:
            vals = [float(r[metric]) for r in members if r[metric] != ""]
            if vals:
                q25, q50, q75 = np.percentile(vals, [25, 50, 75])
                rec[f"{metric}_median"] = repr(float(q50))
                rec[f"{metric}_q25"] = repr(float(q25))
                rec[f"{metric}_q75"] = repr(float(q75))
            else:
                rec[f"{metric}_median"] = ""
                rec[f"{metric}_q25"] = ""
                rec[f"{metric}_q75"] = ""
        out.append(rec)
    return out


def _write_csv(path: Path, schema: str, fieldnames: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(schema + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def run_experiment(spec: ExperimentSpec, out_dir, jobs: int = 1) -> Path:
    """Run (or resume) a sweep; returns the results.csv path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ledger_path = out / "progress.jsonl"

    done: dict[tuple, list[dict]] = {}
    if ledger_path.exists():
        with open(ledger_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    done[(rec["cell_index"], rec["replicate"])] = rec["rows"]

    cells = spec.cells()
    units = [
        (cell, rep)
        for cell in cells
        for rep in range(spec.replicates)
        if (cell["index"], rep) not in done
    ]

    ledger = open(ledger_path, "a", encoding="utf-8")
    try:
        if jobs > 1 and units:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    (cell, rep, pool.submit(_run_unit, spec, cell, rep))
                    for cell, rep in units
                ]
                for cell, rep, fut in futures:
                    rows = fut.result()
                    done[(cell["index"], rep)] = rows
                    _append_ledger(ledger, cell["index"], rep, rows)
        else:
            for cell, rep in units:
                rows = _run_unit(spec, cell, rep)
                done[(cell["index"], rep)] = rows
                _append_ledger(ledger, cell["index"], rep, rows)
    finally:
        ledger.close()

    all_rows = []
    for cell in cells:
        for rep in range(spec.replicates):
            all_rows.extend(done[(cell["index"], rep)])

    results_path = out / "results.csv"
    _write_csv(results_path, _RESULTS_SCHEMA, RESULT_FIELDS, all_rows)
    summary = summarize_rows(all_rows)
    if summary:
        _write_csv(
            out / "summary.csv", _SUMMARY_SCHEMA, list(summary[0].keys()), summary
        )
    return results_path


def _append_ledger(fh, cell_index: int, replicate: int, rows: list[dict]) -> None:
    fh.write(
        json.dumps(
            {"cell_index": cell_index, "replicate": replicate, "rows": rows}
        )
        + "\n"
    )
    fh.flush()
