"""Hydraulic models of the head-pond system.

Two plant variants share the headrace and surge-tank equations:

* the three-pond plant, state ``[x0, x1, x2, Qt, xs]``, where river inflow
  enters ponds 1 and 2 and reaches pond 0 through valved ducts;
* the single-pond baseline, state ``[x0, Qt, xs]``, whose pond has the
  combined area of the three ponds and receives both inflow gates directly.

Right-hand sides are pure functions returning ``np.ndarray`` derivatives.
Level clamping is left to the integrator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np


class FlowMode(str, enum.Enum):
    """How orifice flows are dimensioned.

    ``LITERAL`` evaluates the duct and surge-drain terms without an area
    factor. ``DIMENSIONAL`` multiplies them by the duct area and the surge
    orifice area so that every term is a volumetric flow.
    """

    LITERAL = "literal"
    DIMENSIONAL = "dimensional"


class PlantError(ValueError):
    """Invalid plant parameters or plant inputs."""


@dataclass(frozen=True)
class PlantParams:
    pond_height: float = 35.0
    surge_height: float = 15.0
    pond_area: float = 2500.0
    surge_area: float = 100.0
    duct_area: float = 6.25
    headrace_area: float = 6.25
    headrace_length: float = 200.0
    loss_coeff: float = 0.98
    friction_coeff: float = 0.98
    gravity: float = 9.81
    u_max: float = 100.0
    surge_orifice_area: float = 6.25
    flow_mode: FlowMode = FlowMode.DIMENSIONAL

    def __post_init__(self):
        object.__setattr__(self, "flow_mode", FlowMode(self.flow_mode))
        positive = (
            "pond_height", "surge_height", "pond_area", "surge_area", "duct_area",
            "headrace_area", "headrace_length", "gravity", "u_max", "surge_orifice_area",
        )
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PlantError(f"{name} must be a positive finite number, got {value!r}")
        if not (0 < self.loss_coeff <= 1):
            raise PlantError(f"loss_coeff must lie in (0, 1], got {self.loss_coeff!r}")
        if not (math.isfinite(self.friction_coeff) and self.friction_coeff >= 0):
            raise PlantError(f"friction_coeff must be finite and >= 0, got {self.friction_coeff!r}")

    @property
    def headrace_gain(self) -> float:
        """g * At / Lt, the head-to-acceleration factor of the headrace."""
        return self.gravity * self.headrace_area / self.headrace_length

    def single_pond(self) -> "PlantParams":
        """Parameters of the volumetrically equivalent single pond.

        Pond area is tripled; the inflow bound doubles because the single pond
        is fed by both gates (see ``SinglePondPlant``).
        """
        return replace(self, pond_area=3 * self.pond_area, u_max=2 * self.u_max)


class PlantState(NamedTuple):
    x0: float
    x1: float
    x2: float
    Qt: float
    xs: float

    @classmethod
    def zero(cls) -> "PlantState":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)


class SinglePondState(NamedTuple):
    x0: float
    Qt: float
    xs: float


class ControlVector(NamedTuple):
    U1: float
    U2: float
    s1: float
    s2: float

    @classmethod
    def zero(cls) -> "ControlVector":
        return cls(0.0, 0.0, 0.0, 0.0)

    def clamped(self, u_max: float) -> "ControlVector":
        return ControlVector(
            min(max(self.U1, 0.0), u_max),
            min(max(self.U2, 0.0), u_max),
            min(max(self.s1, 0.0), 1.0),
            min(max(self.s2, 0.0), 1.0),
        )

    def validate(self, u_max: float) -> None:
        for name, value in zip(self._fields, self):
            if not math.isfinite(value):
                raise PlantError(f"control {name} is not finite: {value!r}")
        # small slack for float round-off in controller arithmetic
        tol = 1e-9
        if not (-tol <= self.U1 <= u_max + tol and -tol <= self.U2 <= u_max + tol):
            raise PlantError(f"inflows must lie in [0, {u_max}], got U1={self.U1}, U2={self.U2}")
        if not (-tol <= self.s1 <= 1 + tol and -tol <= self.s2 <= 1 + tol):
            raise PlantError(f"valves must lie in [0, 1], got s1={self.s1}, s2={self.s2}")


@dataclass(frozen=True)
class OutputSelector:
    """Output matrix reading the three pond levels out of the 5-state vector."""

    matrix: np.ndarray = field(
        default_factory=lambda: np.array(
            [
                [1, 0, 0, 0, 0],
                [0, 1, 0, 0, 0],
                [0, 0, 1, 0, 0],
            ],
            dtype=float,
        )
    )

    def __call__(self, state: Sequence[float]) -> np.ndarray:
        return self.matrix @ np.asarray(state, dtype=float)


def _sgn(value: float) -> float:
    if value > 0:
        return 1.0
    if value < 0:
        return -1.0
    return 0.0


def duct_flow(level_hi_side: float, level_lo_side: float, valve: float, params: PlantParams) -> float:
    """Flow through a valved duct from the first pond into the second.

    Positive when the first level is higher. Antisymmetric in the two levels
    and zero at equal levels.
    """
    if not (math.isfinite(level_hi_side) and math.isfinite(level_lo_side) and math.isfinite(valve)):
        raise PlantError(
            f"non-finite duct input: levels=({level_hi_side}, {level_lo_side}), valve={valve}"
        )
    if not (0.0 <= valve <= 1.0):
        raise PlantError(f"valve opening must lie in [0, 1], got {valve}")
    delta = level_hi_side - level_lo_side
    flow = params.loss_coeff * valve * math.sqrt(2.0 * params.gravity * abs(delta)) * _sgn(delta)
    if params.flow_mode is FlowMode.DIMENSIONAL:
        flow *= params.duct_area
    return flow


def surge_outflow(xs: float, params: PlantParams) -> float:
    """Drain flow out of the surge tank towards the penstock."""
    flow = params.loss_coeff * math.sqrt(2.0 * params.gravity * max(xs, 0.0))
    if params.flow_mode is FlowMode.DIMENSIONAL:
        flow *= params.surge_orifice_area
    return flow


def _headrace_surge(x0: float, Qt: float, xs: float, params: PlantParams) -> tuple[float, float]:
    dQt = params.headrace_gain * (x0 - xs) - params.friction_coeff * Qt * abs(Qt)
    dxs = (Qt - surge_outflow(xs, params)) / params.surge_area
    return dQt, dxs


def _check_finite(kind: str, names: Sequence[str], values: Sequence[float]) -> None:
    for name, value in zip(names, values):
        if not math.isfinite(value):
            raise PlantError(f"non-finite {kind} component {name}={value!r}")


def three_pond_rhs(
    state: Sequence[float],
    control: Sequence[float],
    inflow_extra: Sequence[float],
    params: PlantParams,
) -> np.ndarray:
    """Time derivatives of ``[x0, x1, x2, Qt, xs]``.

    ``control`` is ``(U1, U2, s1, s2)``; ``inflow_extra`` is the additive
    disturbance ``(d1, d2)`` entering ponds 1 and 2 alongside U1 and U2.
    """
    x0, x1, x2, Qt, xs = state
    U1, U2, s1, s2 = control
    d1, d2 = inflow_extra
    _check_finite("state", PlantState._fields, state)
    _check_finite("control", ControlVector._fields, control)
    _check_finite("disturbance", ("d1", "d2"), inflow_extra)

    q1 = duct_flow(x1, x0, s1, params)
    q2 = duct_flow(x2, x0, s2, params)
    A = params.pond_area
    dQt, dxs = _headrace_surge(x0, Qt, xs, params)
    return np.array(
        [
            (q1 + q2 - Qt) / A,
            (U1 + d1 - q1) / A,
            (U2 + d2 - q2) / A,
            dQt,
            dxs,
        ]
    )


def single_pond_rhs(
    state: Sequence[float],
    inflow: float,
    inflow_extra: float,
    params: PlantParams,
) -> np.ndarray:
    """Time derivatives of ``[x0, Qt, xs]`` for the single-pond baseline.

    ``params`` are the three-pond parameters; the pond area used here is
    ``3 * pond_area`` and ``inflow`` may reach ``2 * u_max``.
    """
    x0, Qt, xs = state
    _check_finite("state", SinglePondState._fields, state)
    _check_finite("input", ("U", "d"), (inflow, inflow_extra))
    dQt, dxs = _headrace_surge(x0, Qt, xs, params)
    return np.array([(inflow + inflow_extra - Qt) / (3.0 * params.pond_area), dQt, dxs])


class ThreePondPlant:
    """The proposed three-pond plant, packaged for the simulation driver."""

    name = "three-pond"
    state_dim = 5

    def __init__(self, params: PlantParams | None = None):
        self.params = params or PlantParams()

    def initial_state(self, levels: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
        x0, x1, x2 = levels
        return np.array([x0, x1, x2, 0.0, 0.0])

    def rhs(self, state, inputs) -> np.ndarray:
        control, extra = inputs
        return three_pond_rhs(state, control, extra, self.params)

    def clamp(self, state: np.ndarray) -> np.ndarray:
        p = self.params
        out = state.copy()
        out[:3] = np.clip(out[:3], 0.0, p.pond_height)
        out[4] = min(max(out[4], 0.0), p.surge_height)
        return out

    def row(self, state: np.ndarray) -> tuple[float, ...]:
        """``(x0, x1, x2, Qt, xs)`` for recording."""
        return tuple(float(v) for v in state)

    def pond_levels(self, state: np.ndarray) -> tuple[float, float, float]:
        return float(state[0]), float(state[1]), float(state[2])


class SinglePondPlant:
    """Single-pond baseline fed by both inflow gates.

    The pond takes ``U1 + U2`` (so its inflow bound is ``2 * u_max``) and the
    sum of both disturbance channels; the valve commands are ignored. For
    recording and control the one level is reported in all three pond slots.
    """

    name = "single-pond"
    state_dim = 3

    def __init__(self, params: PlantParams | None = None):
        self.params = params or PlantParams()

    def initial_state(self, levels: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
        return np.array([levels[0], 0.0, 0.0])

    def rhs(self, state, inputs) -> np.ndarray:
        control, extra = inputs
        return single_pond_rhs(state, control[0] + control[1], extra[0] + extra[1], self.params)

    def clamp(self, state: np.ndarray) -> np.ndarray:
        p = self.params
        out = state.copy()
        out[0] = min(max(out[0], 0.0), p.pond_height)
        out[2] = min(max(out[2], 0.0), p.surge_height)
        return out

    def row(self, state: np.ndarray) -> tuple[float, ...]:
        x0, Qt, xs = (float(v) for v in state)
        return x0, x0, x0, Qt, xs

    def pond_levels(self, state: np.ndarray) -> tuple[float, float, float]:
        x0 = float(state[0])
        return x0, x0, x0


def make_plant(variant: str, params: PlantParams | None = None):
    if variant == ThreePondPlant.name:
        return ThreePondPlant(params)
    if variant == SinglePondPlant.name:
        return SinglePondPlant(params)
    raise PlantError(f"unknown plant variant {variant!r}")
