"""Simulation engine for mixed-autonomy grid networks.

Vehicles live on roads (straight chains of lane segments) and are tracked by
the road coordinate of their front bumper. A vehicle belongs to the lane
segment containing its front; a vehicle whose front has passed a conflict
point but whose rear has not is *in* that intersection.

Per step the pipeline is fixed: accelerations, integration, exits,
collisions, inflows, clock.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import ScenarioConfig
from .dynamics import accel_toward_stop_line, ballistic_step, idm_accel
from .network import Heading, Network, build_grid
from .signals import (
    MaxPressureControl,
    NoControl,
    Phase,
    PhaseState,
    PriorityControl,
    SignalControl,
    fixed_signal,
    max_pressure_decision,
)

VEHICLE_LENGTH = 5.0
STOP_LINE_OFFSET = 1.0  # stop line sits this far before the conflict point
_EPS_T = 1e-9


class Vehicle:
    __slots__ = ("id", "is_av", "road", "pos", "speed", "entry_time", "entry_step")

    def __init__(self, vid, is_av, road, pos, speed, entry_time, entry_step):
        self.id = vid
        self.is_av = is_av
        self.road = road
        self.pos = pos
        self.speed = speed
        self.entry_time = entry_time
        self.entry_step = entry_step

    @property
    def cls(self) -> str:
        return "AV" if self.is_av else "IDM"

    def __repr__(self):
        return f"Vehicle({self.id}, {self.cls}, road={self.road}, pos={self.pos:.2f}, speed={self.speed:.2f})"


@dataclass
class StepMetrics:
    outflow: int = 0
    collisions: int = 0
    dropped_inflows: int = 0
    vehicle_count: int = 0


@dataclass
class Totals:
    """Cumulative counters over a whole episode, warmup included."""

    entered: int = 0
    exited: int = 0
    collided: int = 0  # vehicles removed by collisions
    collisions: int = 0  # collision events
    dropped: int = 0


@dataclass
class CollisionEvent:
    kind: str  # "lane" or "junction"
    vehicles: tuple[int, int]
    where: int  # road id for lane overlaps, intersection id for junctions


@dataclass
class StepRecord:
    av_ids: list[int]
    observations: np.ndarray  # (n_av, obs_dim)
    actions: np.ndarray  # (n_av,)
    probs: np.ndarray  # (n_av, n_actions)
    metrics: StepMetrics
    raw_reward: float = 0.0
    reward: float = 0.0


@dataclass
class Trajectory:
    config: ScenarioConfig
    seed: int
    steps: list[StepRecord] = field(default_factory=list)

    @property
    def outflow_count(self) -> int:
        return sum(s.metrics.outflow for s in self.steps)

    @property
    def collision_count(self) -> int:
        return sum(s.metrics.collisions for s in self.steps)

    def outflow_rate(self) -> float:
        """Vehicles exited per hour over the recorded steps."""
        if not self.steps:
            return 0.0
        return self.outflow_count * 3600.0 / (len(self.steps) * self.config.delta_t)


def _committed(v: float, dist_to_line: float, b_comf: float) -> bool:
    """True when the vehicle cannot stop at the line with comfortable braking."""
    if dist_to_line <= 0.0:
        return True
    return v * v / (2.0 * dist_to_line) > b_comf


def _arrival_time(v: float, dist: float) -> float:
    return dist / v if v > 1e-6 else math.inf


def _clearing_time(v: float, dist: float, accel: float, v_max: float) -> float:
    """Time for the rear bumper to pass a point ``dist`` ahead of the front."""
    s = dist + VEHICLE_LENGTH
    t_top = (v_max - v) / accel
    s_top = v * t_top + 0.5 * accel * t_top * t_top
    if s <= s_top:
        return (-v + math.sqrt(v * v + 2.0 * accel * s)) / accel
    return t_top + (s - s_top) / v_max


class Simulation:
    """One environment instance. Not thread-safe; create one per worker."""

    def __init__(self, config: ScenarioConfig, seed: int | None = None, network: Network | None = None):
        self.config = config
        self.network = network if network is not None else build_grid(config.network)
        self.seed = config.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        net = self.network
        self._L = net.spec.lane_length_m
        self._vmax = net.spec.speed_limit_mps
        self._road_vehicles: list[list[Vehicle]] = [[] for _ in net.roads]
        self._headway = [self._headway_for(r.heading) for r in net.roads]
        self._arrivals = [0] * len(net.roads)
        self._next_id = 0
        self.vehicles: dict[int, Vehicle] = {}
        self.time = 0.0  # absolute seconds since reset, warmup included
        self.step_index = 0  # steps since the end of warmup
        self.warming_up = False
        self.totals = Totals()
        self.phases = [PhaseState() for _ in net.intersections]
        self._scan_cache = None

    # ------------------------------------------------------------------ setup

    def _headway_for(self, heading: Heading) -> float:
        f = self.config.f_h if heading.horizontal else self.config.f_v
        return 3600.0 / f if f > 0 else math.inf

    def reset(self) -> Simulation:
        """Run the warmup with every vehicle on IDM, then zero the clock."""
        self.warming_up = True
        for _ in range(self.config.warmup_steps):
            self.step({})
        self.warming_up = False
        self.step_index = 0
        return self

    # ------------------------------------------------------------- geometry

    def segment_of(self, veh: Vehicle) -> int:
        return max(0, math.ceil(veh.pos / self._L) - 1)

    def lane_position(self, veh: Vehicle) -> tuple[int, float]:
        """(lane id, front position from the lane start)."""
        road = self.network.roads[veh.road]
        seg = min(self.segment_of(veh), len(road.lanes) - 1)
        return road.lanes[seg], veh.pos - seg * self._L

    def road_vehicles(self, road_id: int) -> list[Vehicle]:
        """Vehicles on a road, frontmost first."""
        return self._road_vehicles[road_id]

    def _scan(self):
        """Approach queues (nearest first) and junction occupants."""
        if self._scan_cache is not None:
            return self._scan_cache
        net = self.network
        queues = {(i.id, h): [] for i in net.intersections for h in i.approaches}
        occupants = {i.id: [] for i in net.intersections}
        where = {}
        L = self._L
        for road in net.roads:
            nj = len(road.junctions)
            for v in self._road_vehicles[road.id]:
                seg = max(0, math.ceil(v.pos / L) - 1)
                if seg < nj:
                    q = queues[road.junctions[seg], road.heading]
                    where[v.id] = (road.junctions[seg], road.heading, len(q))
                    q.append(v)
                if 1 <= seg <= nj and v.pos - VEHICLE_LENGTH < seg * L:
                    occupants[road.junctions[seg - 1]].append((road.heading, v))
        self._scan_cache = (queues, occupants, where)
        return self._scan_cache

    def approach_queue(self, intersection_id: int, heading: Heading) -> list[Vehicle]:
        return self._scan()[0][intersection_id, heading]

    def occupants(self, intersection_id: int) -> list[tuple[Heading, Vehicle]]:
        return self._scan()[1][intersection_id]

    def locate(self, vid: int) -> tuple[int, Heading, int] | None:
        """(intersection id, approach heading, rank in queue) for vehicles on an approach."""
        return self._scan()[2].get(vid)

    def distance_to_intersection(self, veh: Vehicle) -> float:
        seg = self.segment_of(veh)
        return (seg + 1) * self._L - veh.pos

    def exit_segment_count(self, intersection_id: int, heading: Heading) -> int:
        lane_id = self.network.intersections[intersection_id].exits[heading]
        lane = self.network.lanes[lane_id]
        lo, hi = lane.index * self._L, (lane.index + 1) * self._L
        return sum(1 for v in self._road_vehicles[lane.road] if lo < v.pos <= hi)

    # ------------------------------------------------------------- control

    def controllable_avs(self) -> list[int]:
        """AVs driven by actions this step: AVs on a lane that feeds an intersection."""
        if self.warming_up or not isinstance(self.config.control, NoControl):
            return []
        where = self._scan()[2]
        return sorted(vid for vid, v in self.vehicles.items() if v.is_av and vid in where)

    def _update_phases(self):
        control = self.config.control
        if isinstance(control, SignalControl):
            phase = fixed_signal(control.plan, self.time)
            for ps in self.phases:
                if ps.phase is not phase:
                    ps.phase, ps.time_in_phase = phase, 0.0
        elif isinstance(control, MaxPressureControl):
            for inter, ps in zip(self.network.intersections, self.phases):
                p_h, p_v = self.pressures(inter.id)
                new = max_pressure_decision(ps, p_h, p_v, control.tau_min)
                if new is not ps.phase:
                    ps.phase, ps.time_in_phase = new, 0.0

    def pressures(self, intersection_id: int) -> tuple[float, float]:
        """Upstream-minus-downstream vehicle counts summed per phase."""
        inter = self.network.intersections[intersection_id]
        p = [0.0, 0.0]
        for h in inter.approaches:
            up = len(self.approach_queue(inter.id, h))
            down = self.exit_segment_count(inter.id, h)
            p[0 if h.horizontal else 1] += up - down
        return p[0], p[1]

    def yield_rule(self, veh: Vehicle) -> float | None:
        """Stop-line distance for a lane leader that must hold, else None.

        Applies to IDM-driven vehicles only; controlled AVs never yield.
        """
        loc = self.locate(veh.id)
        if loc is None or loc[2] != 0:
            return None
        iid, heading, _ = loc
        cfg = self.config
        p = cfg.idm
        d = self.distance_to_intersection(veh)
        stop_gap = d - STOP_LINE_OFFSET
        if _committed(veh.speed, stop_gap, p.b_comf):
            return None

        # Do not enter when the vehicle ahead leaves no room past the junction.
        ahead = self._leader_of(veh)
        if ahead is not None and ahead.speed < 1.0:
            room = ahead.pos - VEHICLE_LENGTH - (veh.pos + d)
            if room < VEHICLE_LENGTH + p.s0:
                return stop_gap

        inter = self.network.intersections[iid]
        control = cfg.control
        foes = [h for h in inter.approaches if inter.conflicts(heading, h)]
        occupied = any(inter.conflicts(heading, h) for h, _ in self.occupants(iid))

        if isinstance(control, PriorityControl) and heading.horizontal == control.horizontal_priority:
            return None
        if occupied:
            return stop_gap

        leaders = []
        for h in foes:
            q = self.approach_queue(iid, h)
            if q:
                c = q[0]
                dc = self.distance_to_intersection(c)
                leaders.append((h, c, _arrival_time(c.speed, dc), _committed(c.speed, dc - STOP_LINE_OFFSET, p.b_comf)))

        if isinstance(control, (SignalControl, MaxPressureControl)):
            if not self.phases[iid].phase.is_green(heading.horizontal):
                return stop_gap
            # green: give way only to red-phase vehicles that cannot stop
            if any(com and t < cfg.t_gap for _, _, t, com in leaders):
                return stop_gap
            return None
        if isinstance(control, PriorityControl):
            # the gap must also cover the time to clear the junction
            need = max(cfg.t_gap, _clearing_time(veh.speed, d, 0.5 * p.a_max, self._vmax) + 1.0)
            if any(t < need for _, _, t, _ in leaders):
                return stop_gap
            return None

        # Unsignalized: symmetric gap acceptance. When two leaders are within
        # each other's window, the horizontal one gives way.
        t_ego = _arrival_time(veh.speed, d)
        for _, _, t, com in leaders:
            if t >= cfg.t_gap:
                continue
            if com or heading.horizontal or t_ego >= cfg.t_gap:
                return stop_gap
        return None

    def _leader_of(self, veh: Vehicle) -> Vehicle | None:
        vs = self._road_vehicles[veh.road]
        i = vs.index(veh)
        return vs[i - 1] if i > 0 else None

    # ---------------------------------------------------------------- step

    def step(self, av_actions: dict[int, int] | None = None) -> StepMetrics:
        av_actions = av_actions or {}
        cfg = self.config
        idm, dt, vmax = cfg.idm, cfg.delta_t, self._vmax
        controlled = set(self.controllable_avs())
        missing = controlled.difference(av_actions)
        if missing:
            raise KeyError(f"missing actions for controllable AVs {sorted(missing)}")
        self._update_phases()

        # (1) accelerations
        n = len(self.vehicles)
        noise = self.rng.normal(0.0, idm.noise_sigma, n) if idm.noise_sigma > 0 and n else None
        av_accels = cfg.av_limits.actions
        accel = {}
        k = 0
        for road_vs in self._road_vehicles:
            leader = None
            for v in road_vs:
                if leader is None:
                    gap, v_lead = math.inf, 0.0
                else:
                    gap, v_lead = max(leader.pos - VEHICLE_LENGTH - v.pos, 1e-3), leader.speed
                if v.id in controlled:
                    safe = idm_accel(v.speed, v_lead, gap, idm)
                    accel[v.id] = min(av_accels[int(av_actions[v.id])], max(safe, -cfg.av_limits.c_decel))
                else:
                    eps = float(noise[k]) if noise is not None else 0.0
                    a = idm_accel(v.speed, v_lead, gap, idm, eps)
                    stop = self.yield_rule(v)
                    if stop is not None:
                        a = accel_toward_stop_line(v.speed, stop, idm, a, eps)
                    accel[v.id] = a
                leader = v
                k += 1

        # (2) integration
        start = {}
        for v in self.vehicles.values():
            start[v.id] = v.pos
            v.pos, v.speed = ballistic_step(v.pos, v.speed, accel[v.id], dt, vmax)
        self._scan_cache = None

        # (3) exits
        metrics = StepMetrics()
        for road, vs in zip(self.network.roads, self._road_vehicles):
            end = road.length_m
            while vs and vs[0].pos > end:
                gone = vs.pop(0)
                del self.vehicles[gone.id]
                metrics.outflow += 1

        # (4) collisions
        for ev in self._detect(start):
            for vid in ev.vehicles:
                self._remove(vid)
            metrics.collisions += 1
        self.totals.exited += metrics.outflow
        self.totals.collisions += metrics.collisions
        self.totals.collided += 2 * metrics.collisions

        # (5) inflows, (6) clock
        metrics.dropped_inflows = self.spawn_inflows()
        self.time += dt
        self.step_index += 1
        for ps in self.phases:
            ps.time_in_phase += dt
        self._scan_cache = None
        metrics.vehicle_count = len(self.vehicles)
        return metrics

    def _remove(self, vid: int):
        v = self.vehicles.pop(vid)
        self._road_vehicles[v.road].remove(v)

    def detect_collisions(self, start_positions: dict[int, float] | None = None) -> list[CollisionEvent]:
        """Collision events in the current state.

        With ``start_positions`` (road positions at the beginning of the step)
        junction occupancy is swept over the step; without it only the
        current positions are checked.
        """
        return self._detect(start_positions or {})

    def _detect(self, start: dict[int, float]) -> list[CollisionEvent]:
        events = []
        removed = set()
        for road, vs in zip(self.network.roads, self._road_vehicles):
            for lead, fol in zip(vs, vs[1:]):
                if lead.id in removed or fol.id in removed:
                    continue
                if fol.pos > lead.pos - VEHICLE_LENGTH:
                    events.append(CollisionEvent("lane", (lead.id, fol.id), road.id))
                    removed.update((lead.id, fol.id))

        dt = self.config.delta_t
        L = self._L
        spans: dict[int, list] = {}
        for road, vs in zip(self.network.roads, self._road_vehicles):
            for v in vs:
                if v.id in removed:
                    continue
                p1 = v.pos
                p0 = start.get(v.id, p1)
                for k, iid in enumerate(road.junctions):
                    J = (k + 1) * L
                    if p1 <= J or p0 >= J + VEHICLE_LENGTH:
                        continue
                    if p1 == p0:
                        lo, hi = 0.0, dt
                    else:
                        lo = max(0.0, (J - p0) / (p1 - p0) * dt)
                        hi = min(dt, (J + VEHICLE_LENGTH - p0) / (p1 - p0) * dt)
                    if lo < hi:
                        spans.setdefault(iid, []).append((road.heading, v.id, lo, hi))
        for iid in sorted(spans):
            inter = self.network.intersections[iid]
            items = spans[iid]
            for i, (h1, id1, lo1, hi1) in enumerate(items):
                for h2, id2, lo2, hi2 in items[i + 1:]:
                    if id1 in removed or id2 in removed or not inter.conflicts(h1, h2):
                        continue
                    if max(lo1, lo2) < min(hi1, hi2):
                        events.append(CollisionEvent("junction", (id1, id2), iid))
                        removed.update((id1, id2))
        return events

    def spawn_inflows(self) -> int:
        """Insert vehicles due on each entry lane by the end of this step."""
        cfg = self.config
        p = cfg.idm
        t_end = self.time + cfg.delta_t
        dropped = 0
        for road in self.network.roads:
            h = self._headway[road.id]
            vs = self._road_vehicles[road.id]
            while self._arrivals[road.id] * h <= t_end + _EPS_T:
                n = self._arrivals[road.id]
                self._arrivals[road.id] += 1
                due = n * h
                is_av = math.floor((n + 1) * cfg.penetration + 1e-9) > math.floor(n * cfg.penetration + 1e-9)
                speed = self._vmax
                if vs:
                    gap0 = vs[-1].pos - VEHICLE_LENGTH
                    speed = min(speed, math.sqrt(2.0 * p.b_comf * max(gap0 - p.s0, 0.0)))
                pos = speed * max(t_end - due, 0.0)
                if vs and vs[-1].pos - VEHICLE_LENGTH - pos < p.s0:
                    dropped += 1
                    continue
                veh = Vehicle(self._next_id, is_av, road.id, pos, speed, due, self.step_index)
                self._next_id += 1
                vs.append(veh)
                self.vehicles[veh.id] = veh
                self.totals.entered += 1
        self.totals.dropped += dropped
        self._scan_cache = None
        return dropped

    def add_vehicle(self, road_id: int, pos: float, speed: float, is_av: bool = False) -> Vehicle:
        """Place a vehicle directly on a road (scenario setup and tests)."""
        vs = self._road_vehicles[road_id]
        veh = Vehicle(self._next_id, is_av, road_id, float(pos), float(speed), self.time, self.step_index)
        self._next_id += 1
        vs.append(veh)
        vs.sort(key=lambda v: -v.pos)
        self.vehicles[veh.id] = veh
        self.totals.entered += 1
        self._scan_cache = None
        return veh

    # --------------------------------------------------------------- export

    def snapshot_rows(self):
        """(vehicle_id, class, lane_id, position_m, speed_m_s) for every vehicle."""
        rows = []
        for vs in self._road_vehicles:
            for v in vs:
                lane, pos = self.lane_position(v)
                rows.append((v.id, v.cls, lane, pos, v.speed))
        rows.sort()
        return rows


def reset(config: ScenarioConfig, seed: int | None = None) -> Simulation:
    return Simulation(config, seed).reset()


# ---------------------------------------------------------------------------
# episodes and evaluation


Driver = Callable[[Simulation], dict[int, int]]


@dataclass
class EvalResult:
    outflows: list[float]  # veh/hr per trajectory
    collisions: list[float]  # collisions/hr per trajectory
    seeds: list[int]

    @property
    def mean_outflow(self) -> float:
        return float(np.mean(self.outflows))

    @property
    def std_outflow(self) -> float:
        return float(np.std(self.outflows))

    @property
    def mean_collisions(self) -> float:
        return float(np.mean(self.collisions))

    @property
    def std_collisions(self) -> float:
        return float(np.std(self.collisions))


def with_controller(config: ScenarioConfig, controller) -> tuple[ScenarioConfig, object]:
    """Resolve ``controller`` into a scenario config and an optional policy.

    Baseline controllers run with every vehicle on IDM.
    """
    from .nn import PolicyParams
    from .signals import SignalPlan

    if isinstance(controller, PolicyParams):
        return config.replace(control=NoControl()), controller
    if controller is None or controller == "all_idm":
        return config.replace(control=NoControl(), penetration=0.0), None
    if isinstance(controller, SignalPlan):
        controller = SignalControl(controller)
    if isinstance(controller, (SignalControl, MaxPressureControl, PriorityControl, NoControl)):
        pen = 0.0 if not isinstance(controller, NoControl) else config.penetration
        return config.replace(control=controller, penetration=pen), None
    raise TypeError(f"unsupported controller {controller!r}")


def policy_driver(params, rng: np.random.Generator, greedy: bool = False, record: list | None = None) -> Driver:
    """Driver sampling every controllable AV's action from the shared policy."""
    from . import nn, obs

    def drive(sim: Simulation) -> dict[int, int]:
        ids, x = obs.observe_all(sim)
        if not ids:
            if record is not None:
                record.append((ids, x, np.zeros(0, dtype=np.int64), np.zeros((0, nn.N_ACTIONS))))
            return {}
        probs = nn.forward(params, x)
        if greedy:
            actions = probs.argmax(axis=1)
        else:
            u = rng.random(len(ids))
            actions = (u[:, None] > np.cumsum(probs, axis=1)[:, :-1]).sum(axis=1)
        if record is not None:
            record.append((ids, x, actions, probs))
        return dict(zip(ids, (int(a) for a in actions)))

    return drive


def run_episode(
    config: ScenarioConfig,
    n_steps: int,
    seed: int,
    policy=None,
    greedy: bool = False,
    on_step: Callable[[Simulation, StepMetrics], None] | None = None,
) -> list[StepMetrics]:
    """Reset (with warmup) and run ``n_steps`` further steps."""
    ss = np.random.SeedSequence(seed)
    sim_seed, pol_seed = ss.spawn(2)
    sim = Simulation(config, seed=int(sim_seed.generate_state(1)[0])).reset()
    drive = policy_driver(policy, np.random.default_rng(pol_seed), greedy) if policy is not None else None
    out = []
    for _ in range(n_steps):
        m = sim.step(drive(sim) if drive is not None else {})
        out.append(m)
        if on_step is not None:
            on_step(sim, m)
    return out


def evaluate(
    config: ScenarioConfig,
    controller=None,
    n_trajectories: int = 10,
    horizon: int | None = None,
    base_seed: int = 1000,
    settle_steps: int = 500,
    greedy: bool = False,
) -> EvalResult:
    """Run ``settle_steps + horizon`` steps per seed and score the last ``horizon``.

    Seeds are ``base_seed + k`` for trajectory ``k``.
    """
    config, policy = with_controller(config, controller)
    H = config.horizon if horizon is None else horizon
    per_hour = 3600.0 / (H * config.delta_t) if H > 0 else 0.0
    outflows, collisions, seeds = [], [], []
    for k in range(n_trajectories):
        seed = base_seed + k
        ms = run_episode(config, settle_steps + H, seed, policy, greedy)[settle_steps:]
        outflows.append(sum(m.outflow for m in ms) * per_hour)
        collisions.append(sum(m.collisions for m in ms) * per_hour)
        seeds.append(seed)
    return EvalResult(outflows, collisions, seeds)


# ---------------------------------------------------------------------------
# CSV exports


def write_trajectory_csv(path, config: ScenarioConfig, n_steps: int, seed: int, controller=None) -> None:
    """Per-step vehicle states: step, vehicle_id, class, lane_id, position_m, speed_m_s."""
    config, policy = with_controller(config, controller)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "vehicle_id", "class", "lane_id", "position_m", "speed_m_s"])

        def dump(sim, _m):
            for row in sim.snapshot_rows():
                w.writerow([sim.step_index, row[0], row[1], row[2], f"{row[3]:.4f}", f"{row[4]:.4f}"])

        run_episode(config, n_steps, seed, policy, on_step=dump)


def write_metrics_csv(path, result: EvalResult, extra: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        keys = list(extra or {})
        w.writerow(keys + ["seed", "outflow_veh_hr", "collisions_per_hr"])
        for s, o, c in zip(result.seeds, result.outflows, result.collisions):
            w.writerow([extra[k] for k in keys] + [s, f"{o:.4f}", f"{c:.4f}"])
