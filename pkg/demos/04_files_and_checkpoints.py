"""File formats, checkpoints, and the command-line surface.

Everything on disk is either CEB1 (a 20-byte header plus little-endian
float32 rows) with a JSON manifest sidecar, or plain JSON. A checkpoint
directory is enough to classify and to resume incremental learning.
"""

import json
import tempfile
from pathlib import Path

from attrshare.cli import main as attrshare_cli

CONFIG = {
    "scenario": {
        "dim": 16,
        "partitions": [3, 2],
        "h": 3,
        "attribute_overlap": 0.3,
        "samples_per_class_train": 40,
        "samples_per_class_eval": 15,
        "noise_sigma": 0.05,
        "n_distractor_attributes": 8,
        "seed": 21,
    }
}

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    (root / "config.json").write_text(json.dumps(CONFIG, indent=2))

    print("== attrshare gen: materialize the scenario as CEB1 + manifests ==")
    attrshare_cli(["gen", "--config", str(root / "config.json"), "--out", str(root / "data")])
    for path in sorted((root / "data").iterdir()):
        print("  ", path.name)

    print("\n== attrshare run: the full incremental pipeline ==")
    attrshare_cli(["run", "--config", str(root / "config.json"), "--out", str(root / "results")])

    print("\n== attrshare eval: score a saved checkpoint on exported eval files ==")
    attrshare_cli([
        "eval",
        "--checkpoint", str(root / "results" / "checkpoints" / "task_02"),
        "--data", str(root / "data"),
    ])

    print("\n== attrshare export-scores: which attributes define each class ==")
    attrshare_cli([
        "export-scores",
        "--checkpoint", str(root / "results" / "checkpoints" / "task_02"),
        "--out", str(root / "scores.json"),
    ])
    scores = json.loads((root / "scores.json").read_text())
    for cls in scores["classes"]:
        print(f"  {cls['name']} (task {cls['task_index']}): "
              f"base attributes {cls['attribute_base_indices']}")
