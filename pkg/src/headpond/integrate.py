"""Fixed-step RK4 integration and the closed-loop simulation driver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .plant import ControlVector, PlantState

Rhs = Callable[[np.ndarray, object], np.ndarray]
Controller = Callable[[float, PlantState, Sequence[float]], ControlVector]
Disturbance = Callable[[float], tuple[float, float]]


class IntegrationError(RuntimeError):
    """A step produced a non-finite value."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


def _no_disturbance(t: float) -> tuple[float, float]:
    return 0.0, 0.0


@dataclass(frozen=True)
class SimConfig:
    dt_plant: float = 0.2
    dt_control: float = 5.0
    t_end: float = 3600.0
    record_every: int = 50

    def __post_init__(self):
        if not (math.isfinite(self.dt_plant) and self.dt_plant > 0):
            raise ValueError(f"dt_plant must be > 0, got {self.dt_plant}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if self.dt_control < self.dt_plant:
            raise ValueError("dt_control must be >= dt_plant")
        ratio = self.dt_control / self.dt_plant
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_control must be an integer multiple of dt_plant")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")

    @property
    def control_ratio(self) -> int:
        return int(round(self.dt_control / self.dt_plant))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt_plant))


@dataclass(frozen=True)
class Trajectory:
    """Recorded closed-loop samples.

    ``states`` rows are ``(x0, x1, x2, Qt, xs)``; the single-pond plant
    repeats its level in the three pond columns. ``controls`` rows are
    ``(U1, U2, s1, s2)`` and ``disturbance`` is the total injected flow.
    """

    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    disturbance: np.ndarray
    plant: str = "three-pond"

    def __len__(self) -> int:
        return len(self.t)

    @property
    def levels(self) -> np.ndarray:
        return self.states[:, :3]


def rk4_step(
    rhs: Rhs,
    state: np.ndarray,
    inputs: object,
    dt: float,
    t: float = 0.0,
    clamp: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """One classical Runge-Kutta step with ``inputs`` held over the step.

    ``clamp`` is applied to the result only, never to the stages.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    state = np.asarray(state, dtype=float)
    k1 = _checked(rhs(state, inputs), t, "k1")
    k2 = _checked(rhs(state + 0.5 * dt * k1, inputs), t, "k2")
    k3 = _checked(rhs(state + 0.5 * dt * k2, inputs), t, "k3")
    k4 = _checked(rhs(state + dt * k3, inputs), t, "k4")
    new = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    new = _checked(new, t, "state")
    return clamp(new) if clamp is not None else new


def _checked(values, t: float, stage: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.isfinite(values).all():
        return values
    bad = np.flatnonzero(~np.isfinite(np.atleast_1d(values)))
    if bad.size:
        raise IntegrationError(
            f"non-finite {stage} at t={t:g} s, component {int(bad[0])}", t
        )
    return values


def simulate(
    plant,
    controller: Controller,
    sim: SimConfig,
    targets: Sequence[float],
    disturbance: Disturbance | None = None,
    initial_levels: Sequence[float] = (0.0, 0.0, 0.0),
) -> Trajectory:
    """Run the closed loop and record every ``sim.record_every`` plant steps.

    The controller is sampled every ``dt_control`` and its output held in
    between; the disturbance is evaluated at the start of every plant step.
    """
    disturbance = disturbance or _no_disturbance
    u_max = plant.params.u_max
    dt = sim.dt_plant
    ratio = sim.control_ratio
    n_steps = sim.n_steps
    n_rec = n_steps // sim.record_every + 1

    t_rec = np.empty(n_rec)
    s_rec = np.empty((n_rec, 5))
    u_rec = np.empty((n_rec, 4))
    d_rec = np.empty(n_rec)

    state = plant.clamp(plant.initial_state(initial_levels))
    control = ControlVector.zero()
    j = 0
    # overflow is reported as IntegrationError, numpy's warning adds nothing
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps + 1):
            t = k * dt
            if k % ratio == 0:
                control = ControlVector(*controller(t, PlantState(*plant.row(state)), targets)).clamped(u_max)
            d = disturbance(t)
            if k % sim.record_every == 0:
                t_rec[j] = t
                s_rec[j] = plant.row(state)
                u_rec[j] = control
                d_rec[j] = d[0] + d[1]
                j += 1
            if k == n_steps:
                break
            state = rk4_step(plant.rhs, state, (control, d), dt, t=t, clamp=plant.clamp)

    return Trajectory(t_rec[:j], s_rec[:j], u_rec[:j], d_rec[:j], plant=plant.name)
