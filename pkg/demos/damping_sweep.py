"""
Sweep over the damping exponent
===============================

Runs the TOML experiment next to this file through the harness and prints
the fitted slope of ||u||^2 for each beta.
"""

import json
import tempfile
from pathlib import Path

from gnsdecay.harness import load_config, run

cfg = load_config(Path(__file__).with_name("damping_sweep.toml"))
cfg.output_dir = tempfile.mkdtemp(prefix="gnsdecay-")
status = run(cfg)

summary = json.loads((Path(cfg.output_dir) / "summary.json").read_text())
print("exit status", status, "artifacts in", cfg.output_dir)
for r in summary["runs"]:
    print(f"beta={r['beta']}  slope={r['fit']['exponent']:+.3f}  verdict={r['fit']['verdict']}")
