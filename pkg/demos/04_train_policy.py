"""Train the shared AV policy on the 2x1 grid, then evaluate it.

Uses the desk scale (batch 32, horizon 500). Sixty updates take a few
minutes on one core; pass a smaller number as the first argument for a
quick look.
"""

import sys
from pathlib import Path

from mixed_autonomy.baselines import oracle_search
from mixed_autonomy.config import ScenarioConfig, TrainConfig
from mixed_autonomy.network import NetworkSpec, Topology
from mixed_autonomy.rl import train
from mixed_autonomy.sim import evaluate

updates = int(sys.argv[1]) if len(sys.argv) > 1 else 60
out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("runs/demo_2x1")

cfg = ScenarioConfig(network=NetworkSpec(Topology.TWO_WAY, 2, 1), f_h=700, f_v=700, penetration=1 / 3)
result = train(TrainConfig(batch_size=32, max_updates=updates, seed=0), [cfg], out_dir=out)

for row in result.log_rows[:: max(1, updates // 10)]:
    print(f"update {row['update']:3d}: batch outflow {row['mean_outflow']:7.1f} veh/hr, "
          f"collisions {row['mean_collisions']:5.1f}/hr")

best = result.best
initial = evaluate(cfg, result.history[0].params)
learned = evaluate(cfg, best.params)
oracle = oracle_search(cfg)
print(f"\ninitial policy   {initial.mean_outflow:7.1f} veh/hr")
print(f"best (update {best.update:2d}) {learned.mean_outflow:7.1f} veh/hr")
print(f"Oracle signals   {oracle.outflow:7.1f} veh/hr  ({100 * learned.mean_outflow / oracle.outflow:.0f}% reached)")
print(f"checkpoints in {out}/, best marked in {out}/best")
