"""What an AV sees: chains on the approach lanes and the 22-number observation."""

import numpy as np

from mixed_autonomy.config import ScenarioConfig
from mixed_autonomy.network import NetworkSpec, Topology
from mixed_autonomy.obs import decompose, observe_all
from mixed_autonomy.sim import Simulation

cfg = ScenarioConfig(network=NetworkSpec(Topology.FOUR_WAY, 1, 1), f_h=850, f_v=850, penetration=1 / 3)
sim = Simulation(cfg, seed=4).reset()
for _ in range(20):
    sim.step({vid: 1 for vid in sim.controllable_avs()})  # every AV holds its speed

inter = sim.network.intersections[0]
for heading in inter.approaches:
    queue = sim.approach_queue(inter.id, heading)
    dec = decompose(queue)
    chains = " | ".join(" ".join(str(v.id) for v in c.members) for c in dec.chains)
    half = " ".join(str(v.id) for v in dec.half_chain)
    print(f"{heading.name:5s} half-chain [{half}]  chains [{chains}]")

ids, X = observe_all(sim)
np.set_printoptions(precision=2, suppress=True, linewidth=120)
print(f"\n{len(ids)} controllable AVs; observation of AV {ids[0]} as (speed/13, distance/100) pairs:")
print(X[0].reshape(-1, 2))
