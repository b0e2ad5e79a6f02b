"""A single two-way intersection, driven by hand.

Places two vehicles on crossing approaches, shows the gap-acceptance rule
at work, then puts a red light in front of a third vehicle and prints its
speed as it comes to rest at the stop line.
"""

from mixed_autonomy.config import ScenarioConfig
from mixed_autonomy.dynamics import IdmParams
from mixed_autonomy.network import NetworkSpec, Topology
from mixed_autonomy.signals import SignalControl, SignalPlan
from mixed_autonomy.sim import Simulation

quiet = IdmParams(noise_sigma=0.0)
net = NetworkSpec(Topology.TWO_WAY, 1, 1)

# Empty network, no inflow: everything on the road is placed explicitly.
cfg = ScenarioConfig(network=net, f_h=0, f_v=0, penetration=0.0, warmup_steps=0, idm=quiet)
sim = Simulation(cfg, seed=0)
east = sim.add_vehicle(road_id=0, pos=75.0, speed=10.0)
north = sim.add_vehicle(road_id=1, pos=75.0, speed=10.0)

# Both reach the junction 2.5 s from now. Without signals the tie goes to
# the vertical vehicle; the horizontal one brakes for its stop line.
print("east yields:", sim.yield_rule(east) is not None)
print("north yields:", sim.yield_rule(north) is not None)
for _ in range(12):
    sim.step({})
print(f"after 6 s: east at {east.pos:.1f} m ({east.speed:.1f} m/s), north at {north.pos:.1f} m")
print("collisions so far:", sim.totals.collisions)

# A red light: vertical green for the first 100 s.
red = SignalControl(SignalPlan(100.0, 100.0, offset=100.0))
sim = Simulation(cfg.replace(control=red), seed=0)
car = sim.add_vehicle(road_id=0, pos=20.0, speed=13.0)
print("\n t(s)   pos(m)  speed(m/s)")
for k in range(40):
    sim.step({})
    if k % 4 == 3:
        print(f"{sim.time:5.1f}  {car.pos:7.2f}  {car.speed:6.2f}")
print("stop line at 99 m, junction at 100 m; IDM keeps its 2.5 m standstill gap to the line")
