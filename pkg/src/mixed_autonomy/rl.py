"""Multi-agent REINFORCE over a shared policy, with multi-task batching.

Every update collects a batch of trajectories spread over one environment
per inflow configuration, all with the same parameter snapshot. Rewards are
centered and scaled by a single running normalizer, applied in a fixed
(environment, trajectory) order so results do not depend on worker count.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn, obs
from .config import ScenarioConfig, TrainConfig
from .sim import Simulation, StepMetrics, StepRecord, Trajectory, evaluate, policy_driver

log = logging.getLogger(__name__)


def raw_reward(metrics: StepMetrics, lambda_o: float = 1.0, lambda_c: float = 5.0) -> float:
    return lambda_o * metrics.outflow - lambda_c * metrics.collisions


class RewardNormalizer:
    """Running reward centering and scaling.

    The mean is taken over every raw reward seen; the scale is the running
    (population) standard deviation of the discounted cumulative reward
    ``R' <- gamma * R' + r'``, which restarts at every episode.
    """

    def __init__(self, gamma: float = 0.99, eps: float = 1e-4):
        self.gamma = gamma
        self.eps = eps
        self.count = 0
        self.mean = 0.0
        self.ret = 0.0
        self._ret_count = 0
        self._ret_mean = 0.0
        self._ret_m2 = 0.0

    def start_episode(self) -> None:
        self.ret = 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self._ret_m2 / self._ret_count) if self._ret_count else 0.0

    def normalize(self, r: float) -> float:
        self.count += 1
        self.mean += (r - self.mean) / self.count
        self.ret = self.gamma * self.ret + r
        self._ret_count += 1
        d = self.ret - self._ret_mean
        self._ret_mean += d / self._ret_count
        self._ret_m2 += d * (self.ret - self._ret_mean)
        return (r - self.mean) / max(self.std, self.eps)


def reward_to_go(rewards, gamma: float) -> np.ndarray:
    g = np.empty(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        g[t] = acc
    return g


def trajectory_gradient(traj: Trajectory, params: nn.PolicyParams, gamma: float) -> dict[str, np.ndarray]:
    """Sum over steps and agents of reward-to-go times the log-prob gradient."""
    G = reward_to_go([s.reward for s in traj.steps], gamma)
    xs, acts, ws = [], [], []
    for g, s in zip(G, traj.steps):
        if len(s.av_ids):
            xs.append(s.observations)
            acts.append(s.actions)
            ws.append(np.full(len(s.av_ids), g))
    if not xs:
        return nn.zeros_like(params)
    return nn.logprob_backward(params, np.concatenate(xs), np.concatenate(acts), np.concatenate(ws))


def reinforce_gradient(trajectories: list[Trajectory], params: nn.PolicyParams, gamma: float = 0.99) -> dict[str, np.ndarray]:
    """Batch-mean policy gradient; rewards must already be normalized."""
    if not trajectories:
        raise ValueError("reinforce_gradient needs at least one trajectory")
    total = nn.zeros_like(params)
    for traj in trajectories:
        for k, g in trajectory_gradient(traj, params, gamma).items():
            total[k] += g
    return {k: g / len(trajectories) for k, g in total.items()}


def rollout(config: ScenarioConfig, params: nn.PolicyParams, seed: int, lambda_o: float = 1.0, lambda_c: float = 5.0) -> Trajectory:
    """Warm up, then record ``config.horizon`` policy-driven steps."""
    ss = np.random.SeedSequence(seed)
    sim_seed, pol_seed = ss.spawn(2)
    sim = Simulation(config, seed=int(sim_seed.generate_state(1)[0])).reset()
    record: list = []
    drive = policy_driver(params, np.random.default_rng(pol_seed), record=record)
    traj = Trajectory(config, seed)
    for _ in range(config.horizon):
        m = sim.step(drive(sim))
        ids, x, a, p = record.pop()
        traj.steps.append(StepRecord(list(ids), x, np.asarray(a), p, m, raw_reward(m, lambda_o, lambda_c)))
    return traj


def _rollout_job(args):
    return rollout(*args)


def allocate(batch_size: int, n_envs: int, update: int = 0) -> list[int]:
    """Trajectories per environment; the remainder rotates across updates."""
    base, rem = divmod(batch_size, n_envs)
    counts = [base] * n_envs
    start = (update * rem) % n_envs
    for j in range(rem):
        counts[(start + j) % n_envs] += 1
    return counts


def trajectory_seed(seed: int, update: int, env: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, update, env, k]).generate_state(1)[0])


@dataclass
class CheckpointRecord:
    update: int
    mean_outflow: float
    std_outflow: float
    mean_collisions: float
    params: nn.PolicyParams = field(repr=False)
    path: Path | None = None


@dataclass
class TrainResult:
    history: list[CheckpointRecord]
    params: nn.PolicyParams
    log_rows: list[dict]

    @property
    def best(self) -> CheckpointRecord:
        return select_best(self.history)


LOG_FIELDS = ["update", "mean_outflow", "std_outflow", "mean_collisions", "grad_norm", "wall_time_s"]


def train(
    train_config: TrainConfig,
    envs: list[ScenarioConfig],
    params: nn.PolicyParams | None = None,
    out_dir=None,
    normalizer: RewardNormalizer | None = None,
) -> TrainResult:
    """REINFORCE with RMSprop over ``envs`` (one per inflow configuration)."""
    tc = train_config
    if not envs:
        raise ValueError("train needs at least one environment")
    if params is None:
        params = nn.init_params(np.random.default_rng(np.random.SeedSequence([tc.seed, 0xA11CE])))
    else:
        params = params.copy()
    opt = nn.OptState.for_params(params, tc.lr, tc.rms_decay, tc.rms_eps)
    normalizer = normalizer or RewardNormalizer(tc.gamma, tc.norm_eps)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        log_fh = open(out / "train_log.csv", "w", newline="")
        writer = csv.DictWriter(log_fh, LOG_FIELDS)
        writer.writeheader()
    pool = ProcessPoolExecutor(tc.workers) if tc.workers > 1 else None
    history: list[CheckpointRecord] = []
    rows: list[dict] = []
    t0 = time.perf_counter()
    try:
        for update in range(tc.max_updates + 1):
            snapshot = params.copy()
            jobs = []
            for e, n in enumerate(allocate(tc.batch_size, len(envs), update)):
                for k in range(n):
                    jobs.append((envs[e], snapshot, trajectory_seed(tc.seed, update, e, k), tc.lambda_o, tc.lambda_c))
            trajs = list(pool.map(_rollout_job, jobs)) if pool else [_rollout_job(j) for j in jobs]
            for traj in trajs:
                normalizer.start_episode()
                for s in traj.steps:
                    s.reward = normalizer.normalize(s.raw_reward)
            outflows = [t.outflow_rate() for t in trajs]
            coll = [t.collision_count * 3600.0 / (len(t.steps) * t.config.delta_t) if t.steps else 0.0 for t in trajs]
            row = {
                "update": update,
                "mean_outflow": float(np.mean(outflows)),
                "std_outflow": float(np.std(outflows)),
                "mean_collisions": float(np.mean(coll)),
                "grad_norm": float("nan"),
            }
            if update % tc.checkpoint_interval == 0 or update == tc.max_updates:
                rec = CheckpointRecord(update, row["mean_outflow"], row["std_outflow"], row["mean_collisions"], snapshot)
                if out is not None:
                    rec.path = out / f"ckpt_{update:04d}.bin"
                    nn.save_checkpoint(rec.path, snapshot, update, mean_outflow=rec.mean_outflow)
                history.append(rec)
            if update < tc.max_updates:
                grad = reinforce_gradient(trajs, snapshot, tc.gamma)
                row["grad_norm"] = float(math.sqrt(sum(float((g * g).sum()) for g in grad.values())))
                nn.rmsprop_update(params, opt, grad)
            row["wall_time_s"] = time.perf_counter() - t0
            rows.append(row)
            if out is not None:
                writer.writerow(row)
                log_fh.flush()
            log.info("update %d outflow %.1f +- %.1f collisions %.1f", update, row["mean_outflow"], row["std_outflow"], row["mean_collisions"])
    finally:
        if pool is not None:
            pool.shutdown()
        if out is not None:
            log_fh.close()
    if out is not None:
        (out / "best").write_text(select_best(history).path.name + "\n")
    return TrainResult(history, params, rows)


def select_best(history: list[CheckpointRecord]) -> CheckpointRecord:
    """Highest batch-mean outflow; the earliest wins ties."""
    if not history:
        raise ValueError("empty checkpoint history")
    best = history[0]
    for rec in history[1:]:
        if rec.mean_outflow > best.mean_outflow:
            best = rec
    return best


def transfer(
    source: nn.PolicyParams | nn.Checkpoint | str | Path,
    targets: list[ScenarioConfig],
    finetune: bool = False,
    train_config: TrainConfig | None = None,
    out_dir=None,
) -> nn.PolicyParams:
    """Reuse a policy on new scenarios, optionally finetuning it there."""
    if isinstance(source, (str, Path)):
        source = nn.load_checkpoint(source)
    params = source.params if isinstance(source, nn.Checkpoint) else source
    if params.obs_dim != obs.OBS_DIM or params.n_actions != nn.N_ACTIONS:
        raise ValueError(
            f"checkpoint shape (obs_dim={params.obs_dim}, actions={params.n_actions}) "
            f"does not match ({obs.OBS_DIM}, {nn.N_ACTIONS})"
        )
    if not finetune:
        return params.copy()
    result = train(train_config or TrainConfig(), targets, params, out_dir)
    return result.best.params if result.history else result.params


def evaluate_policy(params: nn.PolicyParams, config: ScenarioConfig, **kw):
    return evaluate(config, params, **kw)
