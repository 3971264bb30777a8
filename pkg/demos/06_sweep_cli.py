#!/usr/bin/env python3
"""Drive the full pipeline through the CLI, at sketch scale.

Writes a config, runs a two-target classical sweep (tiny episode budget,
a few seconds), and shows the artifacts: sweep summary, per-target
learning curves, evaluation trajectories, oracle overlays, checkpoints.
The real experiments use the same commands with episodes >= 2e5.
"""

import json
import pathlib
import subprocess
import sys

out = pathlib.Path("demo_sweep_out")
config = {
    "mode": "classical",
    "beta": 1.0,
    "tau": 1.0,
    "N": 10,
    "lambda_i": 0.0,
    "lambda_f": [0.4, 0.8],
    "episodes": 300,
    "alpha": 1e-4,
    "alpha_w": 1e-2,
    "substeps": 25,
    "seed": 4,
    "out_dir": str(out),
}
config_path = pathlib.Path("demo_sweep_config.json")
config_path.write_text(json.dumps(config, indent=2))

print("running: minent sweep --config demo_sweep_config.json")
subprocess.run([sys.executable, "-m", "minent", "sweep",
                "--config", str(config_path)], check=True)

print("\nartifacts:")
for path in sorted(out.iterdir()):
    print(f"  {path}")

print("\nsweep.csv:")
print((out / "sweep.csv").read_text())
print("replaying the lam_f=0.4 trajectory through the dynamics:")
subprocess.run([sys.executable, "-m", "minent", "evolve",
                "--protocol", str(out / "traj_lf0.4.csv"),
                "--mode", "classical", "--out", str(out / "replay.csv")],
               check=True)
