"""Longitudinal dynamics: IDM car following and the ballistic integrator."""

from __future__ import annotations

import math
from dataclasses import dataclass

# Hard floor on IDM deceleration; the quadratic gap term is otherwise unbounded.
B_EMERGENCY = 9.0


@dataclass(frozen=True)
class IdmParams:
    """Intelligent Driver Model parameters.

    Args:
        v0: desired speed (m/s), the lane speed limit.
        T: desired time headway (s).
        s0: minimum standstill gap (m).
        a_max: maximum acceleration (m/s^2).
        b_comf: comfortable deceleration (m/s^2).
        delta_exp: acceleration exponent.
        noise_sigma: std of the Gaussian acceleration noise (m/s^2).
    """

    v0: float = 13.0
    T: float = 1.0
    s0: float = 2.5
    a_max: float = 2.6
    b_comf: float = 4.5
    delta_exp: float = 4.0
    noise_sigma: float = 0.2

    def __post_init__(self):
        for name in ("v0", "T", "s0", "a_max", "b_comf"):
            if not getattr(self, name) > 0:
                raise ValueError(f"IdmParams.{name} must be positive")
        if self.delta_exp < 1:
            raise ValueError("IdmParams.delta_exp must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("IdmParams.noise_sigma must be non-negative")


@dataclass(frozen=True)
class AvLimits:
    c_accel: float = 1.5
    c_decel: float = 3.5

    def __post_init__(self):
        if not (self.c_accel > 0 and self.c_decel > 0):
            raise ValueError("AV limits must be positive")

    @property
    def actions(self) -> tuple[float, float, float]:
        """Acceleration for action indices 0, 1, 2."""
        return (self.c_accel, 0.0, -self.c_decel)


def idm_accel(v: float, v_lead: float, gap: float, params: IdmParams, noise: float = 0.0) -> float:
    """IDM acceleration with additive noise, clamped to [-B_EMERGENCY, a_max].

    ``gap`` is leader rear minus follower front; pass ``math.inf`` when there
    is no leader.
    """
    p = params
    free = 1.0 - (v / p.v0) ** p.delta_exp
    if gap == math.inf:
        a = p.a_max * free
    else:
        s_star = p.s0 + max(0.0, v * p.T + v * (v - v_lead) / (2.0 * math.sqrt(p.a_max * p.b_comf)))
        a = p.a_max * (free - (s_star / gap) ** 2)
    a += noise
    return min(max(a, -B_EMERGENCY), p.a_max)


def accel_toward_stop_line(
    v: float,
    dist_to_line: float,
    params: IdmParams,
    leader_accel: float | None = None,
    noise: float = 0.0,
) -> float:
    """IDM response to a standing virtual leader at the stop line.

    If ``leader_accel`` (the response to the real leader) is given, the
    smaller of the two is returned.
    """
    a = idm_accel(v, 0.0, dist_to_line, params, noise)
    if leader_accel is not None:
        a = min(a, leader_accel)
    return a


def ballistic_step(x: float, v: float, a: float, delta_t: float, v_max: float) -> tuple[float, float]:
    v_new = min(max(v + a * delta_t, 0.0), v_max)
    return x + 0.5 * (v + v_new) * delta_t, v_new
