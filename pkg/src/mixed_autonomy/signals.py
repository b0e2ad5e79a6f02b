"""Intersection control modes and the signal phase logic behind them."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Phase(str, enum.Enum):
    HORIZONTAL_GREEN = "horizontal"
    VERTICAL_GREEN = "vertical"

    @property
    def other(self) -> Phase:
        return Phase.VERTICAL_GREEN if self is Phase.HORIZONTAL_GREEN else Phase.HORIZONTAL_GREEN

    def is_green(self, horizontal: bool) -> bool:
        return horizontal == (self is Phase.HORIZONTAL_GREEN)


@dataclass(frozen=True)
class SignalPlan:
    """Fixed-time two-phase plan shared by every intersection.

    Yellow and all-red are kept at zero.
    """

    tau_h: float = 25.0
    tau_v: float = 25.0
    offset: float = 0.0
    yellow: float = 0.0
    all_red: float = 0.0

    def __post_init__(self):
        if not (self.tau_h > 0 and self.tau_v > 0):
            raise ValueError("phase durations must be positive")
        if self.yellow != 0 or self.all_red != 0:
            raise ValueError("yellow and all-red times are fixed at 0")

    @property
    def cycle(self) -> float:
        return self.tau_h + self.tau_v


def fixed_signal(plan: SignalPlan, clock: float) -> Phase:
    """Phase at time ``clock`` (s); green intervals are half-open."""
    t = (clock + plan.offset) % plan.cycle
    return Phase.HORIZONTAL_GREEN if t < plan.tau_h else Phase.VERTICAL_GREEN


# Control modes carried by a scenario config.


@dataclass(frozen=True)
class NoControl:
    """Unsignalized junctions; AVs (if any) are driven by a policy."""

    kind = "none"


@dataclass(frozen=True)
class SignalControl:
    plan: SignalPlan = SignalPlan()
    kind = "signal"


@dataclass(frozen=True)
class MaxPressureControl:
    tau_min: float = 4.0
    kind = "max_pressure"

    def __post_init__(self):
        if self.tau_min < 0:
            raise ValueError("tau_min must be non-negative")


@dataclass(frozen=True)
class PriorityControl:
    heading: str = "vertical"  # axis with right of way
    kind = "priority"

    def __post_init__(self):
        if self.heading not in ("vertical", "horizontal"):
            raise ValueError(f"priority heading must be 'vertical' or 'horizontal', got {self.heading!r}")

    @property
    def horizontal_priority(self) -> bool:
        return self.heading == "horizontal"


Control = NoControl | SignalControl | MaxPressureControl | PriorityControl


@dataclass
class PhaseState:
    phase: Phase = Phase.HORIZONTAL_GREEN
    time_in_phase: float = 0.0


def max_pressure_decision(state: PhaseState, pressure_h: float, pressure_v: float, tau_min: float) -> Phase:
    """Switch only after ``tau_min`` and only on strictly greater pressure."""
    if state.time_in_phase < tau_min:
        return state.phase
    current = pressure_h if state.phase is Phase.HORIZONTAL_GREEN else pressure_v
    other = pressure_v if state.phase is Phase.HORIZONTAL_GREEN else pressure_h
    return state.phase.other if other > current else state.phase
