"""Reuse a 2x1 checkpoint on the 3x3 grid without retraining.

Argument: a checkpoint file or a training directory (default
``runs/demo_2x1`` from the training demo).
"""

import sys

from mixed_autonomy.cli import resolve_checkpoint
from mixed_autonomy.config import ScenarioConfig
from mixed_autonomy.network import NetworkSpec, Topology
from mixed_autonomy.nn import load_checkpoint
from mixed_autonomy.rl import transfer
from mixed_autonomy.sim import evaluate

source = resolve_checkpoint(sys.argv[1] if len(sys.argv) > 1 else "runs/demo_2x1")
grid = NetworkSpec(Topology.TWO_WAY, 3, 3)
targets = [ScenarioConfig(network=grid, f_h=fh, f_v=fv) for fh, fv in [(700, 700), (1000, 700), (1000, 1000)]]
params = transfer(load_checkpoint(source), targets, finetune=False)

for cfg in targets:
    learned = evaluate(cfg, params)
    idm = evaluate(cfg, "all_idm")
    print(f"({cfg.f_h:g}, {cfg.f_v:g}) learned {learned.mean_outflow:7.1f} veh/hr "
          f"({learned.mean_collisions:5.1f} collisions/hr) | no control {idm.mean_outflow:7.1f}")
