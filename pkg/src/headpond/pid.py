"""Discrete PID baseline.

Three loops: controllers 1 and 2 set the feeder inflows U1 and U2 from the
pond 1 and pond 2 errors, controller 0 sets one valve opening from the
pond 0 error and drives both s1 and s2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .plant import ControlVector, PlantState


@dataclass(frozen=True)
class PidGains:
    Kp: float = 0.0
    Ki: float = 0.0
    Kd: float = 0.0

    def __post_init__(self):
        for name in ("Kp", "Ki", "Kd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    def scaled(self, factor: float) -> "PidGains":
        return PidGains(self.Kp * factor, self.Ki * factor, self.Kd * factor)


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    prev_measurement: float = 0.0
    primed: bool = False


def pid_step(
    gains: PidGains,
    state: PidState,
    error: float,
    measurement: float,
    dt: float,
    out_lo: float,
    out_hi: float,
) -> tuple[float, PidState]:
    """One PID update, returning the clamped output and the next state.

    ``error`` is setpoint minus ``measurement``. The integral uses the
    trapezoidal rule and the derivative acts on the measurement, so a
    setpoint step produces no derivative kick. While the output is saturated,
    integration that would push further into saturation is skipped.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not out_lo < out_hi:
        raise ValueError(f"need out_lo < out_hi, got [{out_lo}, {out_hi}]")
    if not (math.isfinite(error) and math.isfinite(measurement)):
        raise ValueError(f"non-finite PID input: error={error}, measurement={measurement}")

    if state.primed:
        prev_error = state.prev_error
        derivative = -(measurement - state.prev_measurement) / dt
    else:
        prev_error = error
        derivative = 0.0

    integral = state.integral + 0.5 * (prev_error + error) * dt
    raw = gains.Kp * error + gains.Ki * integral + gains.Kd * derivative
    if (raw > out_hi and error > 0) or (raw < out_lo and error < 0):
        integral = state.integral
        raw = gains.Kp * error + gains.Ki * integral + gains.Kd * derivative

    output = min(max(raw, out_lo), out_hi)
    return output, PidState(integral, error, measurement, True)


@dataclass(frozen=True)
class PidSettings:
    """Gains for the valve loop (controller 0) and the two inflow loops."""

    valve: PidGains = field(default_factory=lambda: PidGains(0.1, 1.0e-3, 0.0))
    inflow: PidGains = field(default_factory=lambda: PidGains(11.0, 0.03, 0.0))

    def with_gains(self, valve: PidGains | None = None, inflow: PidGains | None = None) -> "PidSettings":
        return replace(self, valve=valve or self.valve, inflow=inflow or self.inflow)


def pid_controller_step(
    state: Sequence[float],
    targets: Sequence[float],
    gains: Sequence[PidGains],
    pid_states: Sequence[PidState],
    dt: float,
    u_max: float,
) -> tuple[ControlVector, tuple[PidState, PidState, PidState]]:
    """Run controllers 0, 1 and 2 once.

    ``gains`` and ``pid_states`` are ordered by pond (0, 1, 2). Errors fed to
    each loop are ``target - level`` so a pond below target raises its
    command.
    """
    levels = state[0], state[1], state[2]
    limits = ((0.0, 1.0), (0.0, u_max), (0.0, u_max))
    outputs = []
    new_states = []
    for level, target, g, st, (lo, hi) in zip(levels, targets, gains, pid_states, limits):
        out, st = pid_step(g, st, target - level, level, dt, lo, hi)
        outputs.append(out)
        new_states.append(st)
    valve, u1, u2 = outputs
    return ControlVector(u1, u2, valve, valve), tuple(new_states)


class PidController:
    """Stateful wrapper for the simulation driver; one instance per run."""

    def __init__(self, settings: PidSettings | None = None, dt: float = 5.0, u_max: float = 100.0):
        self.settings = settings or PidSettings()
        self.gains = (self.settings.valve, self.settings.inflow, self.settings.inflow)
        self.dt = dt
        self.u_max = u_max
        self.states = (PidState(), PidState(), PidState())

    def __call__(self, t: float, state: PlantState, targets: Sequence[float]) -> ControlVector:
        control, self.states = pid_controller_step(
            state, targets, self.gains, self.states, self.dt, self.u_max
        )
        return control
