"""Non-learning controllers: fixed-time and Oracle signals, MaxPressure, priority.

All of them run with every vehicle on IDM. The phase logic itself lives in
:mod:`mixed_autonomy.signals`; this module adds the Oracle phase search and
controller name parsing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .config import ScenarioConfig
from .signals import (
    MaxPressureControl,
    Phase,
    PhaseState,
    PriorityControl,
    SignalControl,
    SignalPlan,
    fixed_signal,
    max_pressure_decision,
)
from .sim import Simulation, evaluate

__all__ = [
    "EQUAL_PHASE",
    "TAU_MIN",
    "OracleResult",
    "Phase",
    "PhaseState",
    "SignalPlan",
    "equal_phase",
    "fixed_signal",
    "max_pressure",
    "max_pressure_decision",
    "oracle_search",
    "parse_controller",
    "priority_control",
]

EQUAL_PHASE = SignalPlan(25.0, 25.0)
# Minimum MaxPressure phase per network.
TAU_MIN = {"two_way_2x1": 4.0, "two_way_3x3": 6.0, "four_way_1x1": 12.0}


def equal_phase(tau: float = 25.0) -> SignalControl:
    return SignalControl(SignalPlan(tau, tau))


def max_pressure(sim: Simulation, tau_min: float) -> list[Phase]:
    """Phase each intersection would take this step under MaxPressure."""
    decisions = []
    for inter, ps in zip(sim.network.intersections, sim.phases):
        p_h, p_v = sim.pressures(inter.id)
        decisions.append(max_pressure_decision(ps, p_h, p_v, tau_min))
    return decisions


def priority_control(sim: Simulation) -> dict[int, float]:
    """Stop-line targets of the approach leaders that must give way this step."""
    if not isinstance(sim.config.control, PriorityControl):
        raise ValueError("simulation is not under priority control")
    targets = {}
    for inter in sim.network.intersections:
        for h in inter.approaches:
            q = sim.approach_queue(inter.id, h)
            if q:
                stop = sim.yield_rule(q[0])
                if stop is not None:
                    targets[q[0].id] = stop
    return targets


@dataclass
class OracleResult:
    plan: SignalPlan
    outflow: float  # final score with the full trajectory count
    search_outflow: float
    visited: list[tuple[float, float, float]] = field(default_factory=list)
    evaluations: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau_h", "tau_v", "mean_outflow", "final"])
            for th, tv, o in self.visited:
                w.writerow([th, tv, f"{o:.4f}", 0])
            w.writerow([self.plan.tau_h, self.plan.tau_v, f"{self.outflow:.4f}", 1])


def oracle_search(
    config: ScenarioConfig,
    budget: int = 200,
    start: tuple[float, float] = (25.0, 25.0),
    steps=(8.0, 4.0, 2.0, 1.0),
    search_trajectories: int = 3,
    final_trajectories: int = 10,
    base_seed: int = 1000,
    horizon: int | None = None,
) -> OracleResult:
    """Coordinate hill climbing over the horizontal and vertical green times.

    From ``start``, the four single-coordinate neighbours at the current
    step are scored; the best one is taken if it strictly improves,
    otherwise the step shrinks. ``budget`` caps the number of candidate
    evaluations (the start counts as one).
    """
    cache: dict[tuple[float, float], float] = {}
    visited: list[tuple[float, float, float]] = []
    min_tau = config.delta_t

    def score(plan: tuple[float, float]) -> float:
        if plan not in cache:
            r = evaluate(config, SignalPlan(*plan), search_trajectories, horizon, base_seed)
            cache[plan] = r.mean_outflow
            visited.append((*plan, r.mean_outflow))
        return cache[plan]

    current = (float(start[0]), float(start[1]))
    best = score(current)
    for step in steps:
        while True:
            moves = [
                (current[0] + step, current[1]),
                (current[0] - step, current[1]),
                (current[0], current[1] + step),
                (current[0], current[1] - step),
            ]
            improved = None
            for cand in moves:
                if min(cand) < min_tau:
                    continue
                if cand not in cache and len(cache) >= budget:
                    break
                val = score(cand)
                if val > best and (improved is None or val > improved[1]):
                    improved = (cand, val)
            if improved is None:
                break
            current, best = improved
        if len(cache) >= budget:
            break
    plan = SignalPlan(*current)
    final = evaluate(config, plan, final_trajectories, horizon, base_seed).mean_outflow
    return OracleResult(plan, final, best, visited, len(cache))


def parse_controller(name: str, network_key: str | None = None):
    """Controller from a ``NAME[:ARGS]`` string.

    ``oracle`` is returned as the string itself since it needs a search.
    """
    kind, _, arg = name.partition(":")
    kind = kind.lower().replace("-", "_")
    if kind in ("equal_phase", "equal"):
        return equal_phase(float(arg) if arg else 25.0)
    if kind == "signal":
        th, _, tv = arg.partition(",")
        return SignalControl(SignalPlan(float(th), float(tv or th)))
    if kind in ("max_pressure", "maxpressure"):
        tau = float(arg) if arg else TAU_MIN.get(network_key or "", 4.0)
        return MaxPressureControl(tau)
    if kind == "priority":
        return PriorityControl(arg or "vertical")
    if kind in ("all_idm", "none", "no_control"):
        return "all_idm"
    if kind == "oracle":
        return "oracle"
    if kind in ("learned", "policy"):
        return ("learned", arg)
    raise ValueError(f"unknown controller {name!r}")

