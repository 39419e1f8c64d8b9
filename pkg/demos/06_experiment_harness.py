"""Drive whole experiments through the harness instead of wiring stages.

One config names the pipeline and every knob; the harness derives one
seed per repeat, runs dataset -> train -> embed -> cluster -> score,
and aggregates.  The budget field scales the clustering and ensemble
sizes down proportionally, which keeps smoke runs cheap without
touching the published defaults.
"""

import json
import tempfile
from pathlib import Path

from mbnet import ExperimentConfig, delta_sweep, make_blobs, run_experiment

ds = make_blobs(seed=41, c=4, per_cluster=40, d=10, separation=4.0, spread=1.0)

out = Path(tempfile.mkdtemp(prefix="mbnet-demo-"))
cfg = ExperimentConfig(
    pipeline="mbn_sd",
    runs=3,
    seed=2024,
    budget=0.1,            # 400 clusterings -> 40, 40 models -> 4
    output_dir=str(out),
)
report = run_experiment(cfg, dataset=ds)
print(f"pipeline {report.pipeline} on {report.dataset_name}: "
      f"acc {report.acc_mean:.3f} +/- {report.acc_std:.3f} "
      f"({report.total_seconds:.1f}s)")
print(f"effective sizes under budget: V={report.config['v_eff']}, "
      f"Z={report.config['z_eff']}")
print(f"per-run seeds: {report.config['run_seeds']}")
print(f"files written: {sorted(p.name for p in out.iterdir())}")

# every run is archived with its weights; reports are plain JSON
doc = json.loads((out / "report.json").read_text())
print(f"report echoes the resolved config: top_k={doc['config']['top_k']}")

# depth-factor sweep over the single-model pipeline
sweep = delta_sweep(
    ExperimentConfig(pipeline="mbn_default", runs=2, seed=7, budget=0.2),
    [0.3, 0.5, 0.7, 0.9],
    dataset=ds,
)
print("\ndelta sweep (mean accuracy per depth factor):")
for row in sweep["rows"]:
    bar = "#" * round(40 * row["acc_mean"])
    print(f"  delta={row['delta']:.1f}  {row['acc_mean']:.3f}  {bar}")

print("\nthe same experiments run from the shell:")
print("  mbnet run --dataset data.csv --label-column 10 --pipeline mbn_sd --budget 0.1")
print("  mbnet sweep-delta --dataset data.csv --label-column 10 \\")
print("      --pipeline mbn_default --grid 0.3,0.5,0.7,0.9")
