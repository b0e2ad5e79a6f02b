"""Shared per-vehicle policy: a tanh MLP with a softmax head, in numpy.

Checkpoint layout (``.bin`` files, numpy ``.npz`` container, no pickling):

    meta     uint8 array holding UTF-8 JSON: {"format": 1, "obs_dim": 22,
             "hidden": [64, 64], "n_actions": 3, "update": int, **extra}
    W1 b1 W2 b2 W3 b3   float64 tensors, W shaped (fan_in, fan_out)
    opt_W1 ... opt_b3   RMSprop squared-gradient caches (optional)
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .obs import OBS_DIM

N_ACTIONS = 3
HIDDEN = (64, 64)
NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")
FORMAT_VERSION = 1


@dataclass
class PolicyParams:
    tensors: dict[str, np.ndarray]

    @property
    def obs_dim(self) -> int:
        return self.tensors["W1"].shape[0]

    @property
    def hidden(self) -> tuple[int, int]:
        return self.tensors["W1"].shape[1], self.tensors["W2"].shape[1]

    @property
    def n_actions(self) -> int:
        return self.tensors["W3"].shape[1]

    def copy(self) -> PolicyParams:
        return PolicyParams({k: v.copy() for k, v in self.tensors.items()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def init_params(
    rng: np.random.Generator,
    obs_dim: int = OBS_DIM,
    hidden=HIDDEN,
    n_actions: int = N_ACTIONS,
    output_scale: float = 0.01,
) -> PolicyParams:
    """Glorot-uniform weights and zero biases.

    The output layer is shrunk by ``output_scale`` so the initial policy is
    close to uniform over actions.
    """
    sizes = (obs_dim, *hidden, n_actions)
    t = {}
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:]), start=1):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        t[f"W{i}"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        t[f"b{i}"] = np.zeros(fan_out)
    t[f"W{len(sizes) - 1}"] *= output_scale
    return PolicyParams(t)


def zeros_like(params: PolicyParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.tensors.items()}


def _layers(params: PolicyParams, x: np.ndarray):
    t = params.tensors
    h1 = np.tanh(x @ t["W1"] + t["b1"])
    h2 = np.tanh(h1 @ t["W2"] + t["b2"])
    z = h2 @ t["W3"] + t["b3"]
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return h1, h2, e / e.sum(axis=-1, keepdims=True)


def forward(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Action probabilities for one observation (1-D) or a batch (2-D)."""
    x = np.asarray(obs, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("observation contains non-finite values")
    return _layers(params, x)[2]


def logprob_backward(params: PolicyParams, obs: np.ndarray, actions, weights=None) -> dict[str, np.ndarray]:
    """Gradient of ``sum_k w_k * log pi(a_k | o_k)`` with respect to every tensor.

    With a single observation and no weights this is the plain gradient of
    the chosen action's log-probability.
    """
    x = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    a = np.atleast_1d(np.asarray(actions, dtype=np.int64))
    w = np.ones(len(a)) if weights is None else np.atleast_1d(np.asarray(weights, dtype=np.float64))
    t = params.tensors
    h1, h2, p = _layers(params, x)
    dz = -p
    dz[np.arange(len(a)), a] += 1.0
    dz *= w[:, None]
    g = {"W3": h2.T @ dz, "b3": dz.sum(axis=0)}
    dh2 = (dz @ t["W3"].T) * (1.0 - h2 * h2)
    g["W2"], g["b2"] = h1.T @ dh2, dh2.sum(axis=0)
    dh1 = (dh2 @ t["W2"].T) * (1.0 - h1 * h1)
    g["W1"], g["b1"] = x.T @ dh1, dh1.sum(axis=0)
    return g


@dataclass
class OptState:
    cache: dict[str, np.ndarray]
    lr: float = 0.001
    decay: float = 0.99
    eps: float = 1e-8
    updates: int = 0

    @classmethod
    def for_params(cls, params: PolicyParams, lr=0.001, decay=0.99, eps=1e-8) -> OptState:
        return cls(zeros_like(params), lr, decay, eps)


def rmsprop_update(params: PolicyParams, opt: OptState, grad: dict[str, np.ndarray]) -> PolicyParams:
    """One RMSprop ascent step, in place; returns ``params``."""
    for k, g in grad.items():
        if g.shape != params.tensors[k].shape:
            raise ValueError(f"gradient shape {g.shape} does not match {k} {params.tensors[k].shape}")
    for k, g in grad.items():
        c = opt.cache[k]
        c *= opt.decay
        c += (1.0 - opt.decay) * g * g
        params.tensors[k] += opt.lr * g / (np.sqrt(c) + opt.eps)
    opt.updates += 1
    return params


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, params: PolicyParams, update: int = 0, opt: OptState | None = None, **extra) -> None:
    meta = {
        "format": FORMAT_VERSION,
        "obs_dim": params.obs_dim,
        "hidden": list(params.hidden),
        "n_actions": params.n_actions,
        "update": update,
        **extra,
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    arrays.update({k: params.tensors[k] for k in NAMES})
    if opt is not None:
        arrays.update({f"opt_{k}": opt.cache[k] for k in NAMES})
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    Path(path).write_bytes(buf.getvalue())


@dataclass
class Checkpoint:
    params: PolicyParams
    meta: dict = field(default_factory=dict)
    opt_cache: dict[str, np.ndarray] | None = None


def load_checkpoint(path) -> Checkpoint:
    with np.load(Path(path), allow_pickle=False) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        if meta.get("format") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format {meta.get('format')!r}")
        params = PolicyParams({k: z[k].copy() for k in NAMES})
        cache = {k: z[f"opt_{k}"].copy() for k in NAMES} if "opt_W1" in z.files else None
    return Checkpoint(params, meta, cache)
