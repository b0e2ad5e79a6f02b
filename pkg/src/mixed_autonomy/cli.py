"""Command-line entry point.

Verbs::

    train          REINFORCE over every inflow configuration in the config
    eval           per-seed metrics CSV for one controller
    oracle-search  tuned fixed-time plan per inflow configuration
    sweep          f_H x f_V outflow matrix per controller over the standard inflow pairs
    timespace      vehicle positions along their routes over time

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import nn, obs
from .baselines import oracle_search, parse_controller
from .config import INFLOW_LEVELS, PROFILES, INFLOW_PAIRS, ConfigError, ExperimentSpec, experiment_from_dict, experiment_to_dict
from .rl import train
from .signals import SignalPlan
from .sim import Simulation, evaluate, policy_driver, with_controller

log = logging.getLogger("mixed_autonomy")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class CliConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def load_spec(path, profile: str | None = None) -> ExperimentSpec:
    """Experiment from a JSON file; ``profile`` overrides the file's own."""
    if path is None:
        d: dict = {}
    else:
        p = Path(path)
        if not p.is_file():
            raise CliConfigError(f"config file not found: {p}")
        try:
            d = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise CliConfigError(f"{p}: invalid JSON ({exc})") from None
    if profile is not None:
        if not isinstance(d, dict):
            raise CliConfigError("<root>: expected a JSON object")
        d = {**d, "profile": profile}
    try:
        return experiment_from_dict(d)
    except ConfigError as exc:
        raise CliConfigError(str(exc)) from None


def resolve_checkpoint(path) -> Path:
    """A checkpoint file, or a training directory whose ``best`` marker names one."""
    p = Path(path)
    if p.is_dir():
        marker = p / "best"
        if not marker.is_file():
            raise CliConfigError(f"{p}: directory has no 'best' marker")
        p = p / marker.read_text().strip()
    if not p.is_file():
        raise CliConfigError(f"checkpoint not found: {p}")
    return p


def load_policy(path) -> nn.PolicyParams:
    params = nn.load_checkpoint(resolve_checkpoint(path)).params
    if params.obs_dim != obs.OBS_DIM or params.n_actions != nn.N_ACTIONS:
        raise RuntimeError(
            f"checkpoint expects obs_dim={params.obs_dim}, actions={params.n_actions}; "
            f"simulator provides obs_dim={obs.OBS_DIM}, actions={nn.N_ACTIONS}"
        )
    return params


def read_oracle_table(path) -> dict[tuple[float, float], dict]:
    p = Path(path)
    if not p.is_file():
        raise CliConfigError(f"oracle table not found: {p}")
    out = {}
    with open(p, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (float(row["f_h"]), float(row["f_v"]))
            out[key] = {
                "plan": SignalPlan(float(row["tau_h"]), float(row["tau_v"])),
                "outflow": float(row["outflow_veh_hr"]),
            }
    return out


class Controller:
    """A named controller; ``resolve`` gives what :func:`evaluate` accepts."""

    def __init__(self, text: str, spec: ExperimentSpec, checkpoint=None, oracle_table=None, seeds: int = 10):
        try:
            parsed = parse_controller(text, spec.base.network.key)
        except ValueError as exc:
            raise CliConfigError(f"--controller: {exc}") from None
        self.name = text
        self.spec = spec
        self.seeds = seeds
        self.oracle_table = oracle_table
        self.policy = None
        if isinstance(parsed, tuple):  # learned
            ck = parsed[1] or checkpoint
            if not ck:
                raise CliConfigError("--controller learned needs --checkpoint PATH")
            self.policy = load_policy(ck)
            parsed = "learned"
        self.kind = parsed

    def resolve(self, scenario):
        if self.kind == "learned":
            return self.policy
        if self.kind == "oracle":
            key = (scenario.f_h, scenario.f_v)
            if self.oracle_table is not None and key in self.oracle_table:
                return self.oracle_table[key]["plan"]
            log.info("oracle search at (%g, %g)", *key)
            return oracle_search(
                scenario, final_trajectories=self.seeds, base_seed=self.spec.eval_base_seed
            ).plan
        return self.kind


def _fmt(x: float) -> str:
    return f"{x:.4f}"


# ---------------------------------------------------------------------------
# verbs


def cmd_train(args) -> int:
    spec = load_spec(args.config, args.profile)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(experiment_to_dict(spec), indent=2) + "\n")
    envs = spec.scenarios()
    log.info("training on %d environment(s)", len(envs))
    result = train(spec.train, envs, out_dir=out)
    best = result.best
    print(f"best checkpoint: {best.path} (update {best.update}, batch outflow {best.mean_outflow:.1f} veh/hr)")
    return EXIT_OK


def _n_seeds(args, spec) -> int:
    return args.seeds if args.seeds is not None else spec.eval_seeds


def cmd_eval(args) -> int:
    spec = load_spec(args.config, args.profile)
    seeds = _n_seeds(args, spec)
    oracle = read_oracle_table(args.oracle_table) if args.oracle_table else None
    ctrl = Controller(args.controller, spec, args.checkpoint, oracle, seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["f_h", "f_v", "controller", "seed", "outflow_veh_hr", "collisions_per_hr"]
    if oracle is not None:
        header.append("pct_of_oracle")
    path = out / "metrics.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for sc in spec.scenarios():
            r = evaluate(sc, ctrl.resolve(sc), seeds, base_seed=spec.eval_base_seed)
            ref = oracle.get((sc.f_h, sc.f_v), {}).get("outflow") if oracle is not None else None

            def pct(x):
                return "" if not ref else _fmt(100.0 * x / ref)

            for s, o, c in zip(r.seeds, r.outflows, r.collisions):
                row = [sc.f_h, sc.f_v, ctrl.name, s, _fmt(o), _fmt(c)]
                w.writerow(row + [pct(o)] if oracle is not None else row)
            row = [sc.f_h, sc.f_v, ctrl.name, "mean", _fmt(r.mean_outflow), _fmt(r.mean_collisions)]
            w.writerow(row + [pct(r.mean_outflow)] if oracle is not None else row)
            print(f"({sc.f_h:g}, {sc.f_v:g}) {ctrl.name}: {r.mean_outflow:.1f} +- {r.std_outflow:.1f} veh/hr")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle_search(args) -> int:
    spec = load_spec(args.config, args.profile)
    seeds = _n_seeds(args, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "oracle.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f_h", "f_v", "tau_h", "tau_v", "outflow_veh_hr", "evaluations"])
        for sc in spec.scenarios():
            res = oracle_search(sc, budget=args.budget, final_trajectories=seeds, base_seed=spec.eval_base_seed)
            res.write_csv(out / f"oracle_search_{sc.f_h:g}_{sc.f_v:g}.csv")
            w.writerow([sc.f_h, sc.f_v, res.plan.tau_h, res.plan.tau_v, _fmt(res.outflow), res.evaluations])
            print(f"({sc.f_h:g}, {sc.f_v:g}) tau=({res.plan.tau_h:g}, {res.plan.tau_v:g}) {res.outflow:.1f} veh/hr")
    print(f"wrote {path}")
    return EXIT_OK


def sweep_matrix(values: dict[tuple[float, float], float]) -> list[list[str]]:
    """Rows f_H, columns f_V; cells outside ``values`` stay blank."""
    rows = [["f_h\\f_v", *INFLOW_LEVELS]]
    for fh in INFLOW_LEVELS:
        row = [fh]
        for fv in INFLOW_LEVELS:
            v = values.get((float(fh), float(fv)))
            row.append("" if v is None else _fmt(v))
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    spec = load_spec(args.config, args.profile)
    seeds = _n_seeds(args, spec)
    oracle = read_oracle_table(args.oracle_table) if args.oracle_table else None
    names = [n for c in args.controller for n in c.split(",") if n] or ["all_idm"]
    ctrls = [Controller(n, spec, args.checkpoint, oracle, seeds) for n in names]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ctrl in ctrls:
        values = {}
        for fh, fv in INFLOW_PAIRS:
            sc = spec.base.replace(f_h=float(fh), f_v=float(fv))
            values[(float(fh), float(fv))] = evaluate(sc, ctrl.resolve(sc), seeds, base_seed=spec.eval_base_seed).mean_outflow
        safe = ctrl.name.replace(":", "_").replace(",", "_").replace("/", "_")
        path = out / f"sweep_{safe}.csv"
        with open(path, "w", newline="") as fh_:
            csv.writer(fh_).writerows(sweep_matrix(values))
        print(f"wrote {path}")
    return EXIT_OK


def cmd_timespace(args) -> int:
    spec = load_spec(args.config, args.profile)
    ctrl = Controller(args.controller, spec, args.checkpoint, None, 1)
    sc = spec.scenarios()[0]
    net_sim = Simulation(sc)
    entries = net_sim.network.entry_lanes
    lanes = [int(x) for x in args.lanes.split(",")] if args.lanes else entries
    for lane in lanes:
        if lane not in entries:
            raise CliConfigError(f"--lanes: {lane} is not an entry lane (entry lanes: {entries})")
    roads = {net_sim.network.lanes[lane].road: lane for lane in lanes}

    config, policy = with_controller(sc, ctrl.resolve(sc))
    ss = np.random.SeedSequence(spec.eval_base_seed + args.seed)
    sim_seed, pol_seed = ss.spawn(2)
    sim = Simulation(config, seed=int(sim_seed.generate_state(1)[0])).reset()
    drive = policy_driver(policy, np.random.default_rng(pol_seed)) if policy is not None else None
    steps = args.steps if args.steps is not None else sc.horizon
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "timespace.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "vehicle_id", "class", "entry_lane", "position_m"])
        for _ in range(steps):
            sim.step(drive(sim) if drive is not None else {})
            t = sim.step_index * sc.delta_t
            for road, lane in roads.items():
                for v in sim.road_vehicles(road):
                    w.writerow([f"{t:.2f}", v.id, v.cls, lane, _fmt(v.pos)])
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixed-autonomy", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, controller=True):
        sp.add_argument("--config", help="experiment JSON file (defaults apply when omitted)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--profile", choices=sorted(PROFILES), help="override the config's profile")
        sp.add_argument("--seeds", type=int, help="evaluation trajectories per configuration")
        if controller:
            sp.add_argument("--checkpoint", help="policy checkpoint file or training directory")

    sp = sub.add_parser("train", help="train a shared AV policy")
    common(sp, controller=False)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate one controller")
    common(sp)
    sp.add_argument("--controller", default="all_idm", help="NAME[:ARGS], e.g. max_pressure:4, signal:30,20, learned")
    sp.add_argument("--oracle-table", help="oracle.csv used for the percent-of-Oracle column")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("oracle-search", help="hill-climb fixed-time phase lengths")
    common(sp, controller=False)
    sp.add_argument("--budget", type=int, default=200, help="maximum candidate plans per configuration")
    sp.set_defaults(func=cmd_oracle_search)

    sp = sub.add_parser("sweep", help="outflow matrix over the 16 inflow configurations")
    common(sp)
    sp.add_argument("--controller", action="append", default=[], help="repeatable or comma-separated")
    sp.add_argument("--oracle-table", help="reuse plans from an oracle.csv instead of searching")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("timespace", help="export a time-space diagram")
    common(sp)
    sp.add_argument("--controller", default="all_idm")
    sp.add_argument("--lanes", help="comma-separated entry lane ids (default: all)")
    sp.add_argument("--steps", type=int, help="steps after warmup (default: the horizon)")
    sp.add_argument("--seed", type=int, default=0, help="trajectory index")
    sp.set_defaults(func=cmd_timespace)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "seeds", None) is not None and args.seeds < 1:
        print("error: --seeds must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except CliConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
