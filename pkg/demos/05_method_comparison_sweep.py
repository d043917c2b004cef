"""
When does fitting jointly beat fitting alone?
=============================================

A replicated sweep over the composition spread alpha, run through the
experiment module so every unit of work is seeded, resumable and lands
in plain CSV. At small alpha the graphs are near-balanced and the
isolated baseline matches the joint fit; as alpha grows each graph's
community mix drifts apart and pooling starts to pay.

This is the heaviest demo (about a minute of fitting); progress is
journalled, so re-running it is instant.
"""
import csv
import time
from pathlib import Path

from jointsbm import planted_partition
from jointsbm.experiments import ExperimentSpec, run_experiment

out = Path(__file__).resolve().parent / "out" / "sweep"

# ---------------------------------------------------------------------------
# 1. The sweep definition: 20 graphs of 100 nodes, six communities, two
# alpha values, six replicates each, both methods. Restarts are the
# knob that buys fit quality here.

spec = ExperimentSpec(
    n_graphs_values=(20,),
    size_specs=(100,),
    alpha_values=(0.1, 2.0),
    replicates=6,
    k=6,
    theta=planted_partition(6, within=0.4, between=0.05),
    methods=("joint", "iso1"),
    n_restarts=60,
    seed=0,
)

t0 = time.monotonic()
results = run_experiment(spec, out, jobs=2)
print(f"sweep finished in {time.monotonic() - t0:.0f}s; results at {results}")

# a second call finds every unit in the progress journal and rebuilds
# the CSVs without refitting anything
t0 = time.monotonic()
run_experiment(spec, out, jobs=2)
print(f"re-run resumed from the journal in {time.monotonic() - t0:.1f}s")

# ---------------------------------------------------------------------------
# 2. The summary file carries median and quartiles per cell and method.

with open(out / "summary.csv", encoding="utf-8") as fh:
    fh.readline()  # schema line
    rows = list(csv.DictReader(fh))

print("\nmedian over 6 replicates:")
print(f"{'cell':<28} {'method':<6} {'overall NMI':>12} {'per-graph NMI':>14}")
for row in rows:
    print(
        f"{row['cell']:<28} {row['method']:<6} "
        f"{float(row['overall_nmi_median']):>12.3f} "
        f"{float(row['individual_nmi_median_median']):>14.3f}"
    )

# ---------------------------------------------------------------------------
# 3. Reading the table. At alpha = 0.1 the two methods cluster each
# graph equally well — and *neither* can pin a global community
# identity, because near-equal community sizes make the per-graph
# spectra degenerate (low overall NMI for both is honest, not a bug).
# At alpha = 2 the compositions are wildly uneven: that very imbalance
# makes identities recognisable across graphs, and the joint fit, which
# shares its centres, converts this into a visibly better overall NMI
# than align-after-the-fact. Absolute scores drop for both methods in
# that regime — a skewed mix can starve a community to a handful of
# nodes in any single graph — which is precisely when information has
# to be pooled to see it at all.
