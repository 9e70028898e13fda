"""Drive a numbered experiment and verify its reproducibility story.

Experiments are pure functions of (config, seed): chains draw from
per-task RNG streams fixed before dispatch and floats are written via
repr, so rerunning a manifest reproduces the result file byte for
byte.
"""

import json
import tempfile
from pathlib import Path

from facetproc import build_experiment_config, run_experiment

conf = {
    "d": "3",
    "nu.3": "-1",
    "a.grid": "2,8,32",
}

root = Path(tempfile.mkdtemp(prefix="facetproc-demo-"))
cfg = build_experiment_config("e3", conf, root / "run1", seed=7)
res = run_experiment(cfg)

print(f"rows written: {len(res['rows'])}")
print("columns:", ",".join(res["header"]))
for row in res["rows"]:
    if row[2] == "distinct":
        a, k = row[0], row[1]
        print(f"  a={a:4.0f} k={k}: series {row[4]:.5f} "
              f"limit {row[6]:.4f} |err| {row[7]:.2e}")

manifest = json.loads(Path(res["manifest"]).read_text())
digest = manifest["outputs"]["results.csv"]
print(f"\nmanifest checksum {digest[:16]}...")

cfg2 = build_experiment_config("e3", conf, root / "run2", seed=7)
res2 = run_experiment(cfg2)
same = Path(res["results"]).read_bytes() == Path(res2["results"]).read_bytes()
print(f"re-run byte-identical: {same}")

# the CLI drives the same code path:
#   facetproc experiment e3 --config model.conf --seed 7 --out results/
