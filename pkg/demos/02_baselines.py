"""Signal baselines on the two-way 2x1 grid.

Scores fixed-time, MaxPressure, priority and unsignalized control at one
high-demand inflow configuration, then runs a small Oracle search.
"""

from mixed_autonomy.baselines import equal_phase, oracle_search
from mixed_autonomy.config import ScenarioConfig
from mixed_autonomy.network import NetworkSpec, Topology
from mixed_autonomy.signals import MaxPressureControl, PriorityControl
from mixed_autonomy.sim import evaluate

cfg = ScenarioConfig(network=NetworkSpec(Topology.TWO_WAY, 2, 1), f_h=1000, f_v=1000)
seeds = 5

controllers = {
    "equal-phase 25 s": equal_phase(25.0),
    "MaxPressure tau_min=4": MaxPressureControl(4.0),
    "priority (vertical)": PriorityControl("vertical"),
    "no control (all IDM)": "all_idm",
}
for name, ctrl in controllers.items():
    r = evaluate(cfg, ctrl, n_trajectories=seeds)
    print(f"{name:24s} {r.mean_outflow:7.1f} +- {r.std_outflow:5.1f} veh/hr, {r.mean_collisions:5.1f} collisions/hr")

# Demand is 3 lanes x 1000 veh/hr. The Oracle tunes the two green times.
res = oracle_search(cfg, budget=30, final_trajectories=seeds)
print(f"\nOracle plan tau_h={res.plan.tau_h:g} s, tau_v={res.plan.tau_v:g} s "
      f"-> {res.outflow:.1f} veh/hr after {res.evaluations} candidate plans")
