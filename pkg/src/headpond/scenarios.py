"""Closed-loop experiments, disturbance generators and response metrics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np

from .fuzzy import FuzzyController, FuzzyDesign
from .integrate import SimConfig, Trajectory, simulate
from .pid import PidController, PidSettings
from .plant import PlantParams, SinglePondPlant, ThreePondPlant, make_plant

THREE_POND = ThreePondPlant.name
SINGLE_POND = SinglePondPlant.name
PLANTS = (THREE_POND, SINGLE_POND)
CONTROLLERS = ("fuzzy", "pid")

# pre-disturbance reference level is averaged over this span before onset
REFERENCE_WINDOW = 600.0


class ScenarioError(ValueError):
    pass


class DisturbanceKind(str, enum.Enum):
    NONE = "none"
    SINUSOID = "sinusoid"
    FLOOD = "flood"


@dataclass(frozen=True)
class DisturbanceSpec:
    """Additive flow applied to each controllable inflow (m3/s).

    A sinusoid is ``amplitude * sin(omega * t)`` from t = 0. A flood pulse is
    ``amplitude`` inside ``[start, start + duration)``.
    """

    kind: DisturbanceKind = DisturbanceKind.NONE
    amplitude: float = 0.0
    omega: float = 0.0
    start: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DisturbanceKind(self.kind))
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ScenarioError(f"disturbance amplitude must be >= 0, got {self.amplitude}")
        if self.kind is DisturbanceKind.FLOOD and not self.duration > 0:
            raise ScenarioError("flood pulse needs a positive duration")
        if self.kind is DisturbanceKind.FLOOD and self.start < 0:
            raise ScenarioError("flood pulse cannot start before t = 0")

    @classmethod
    def sinusoid(cls, amplitude: float = 10.0, period: float = 600.0) -> "DisturbanceSpec":
        return cls(DisturbanceKind.SINUSOID, amplitude, omega=2 * math.pi / period)

    @classmethod
    def flood(cls, amplitude: float = 50.0, start: float = 7200.0, duration: float = 300.0) -> "DisturbanceSpec":
        return cls(DisturbanceKind.FLOOD, amplitude, start=start, duration=duration)

    @property
    def onset(self) -> float | None:
        """Time the disturbance starts acting on a settled loop, if it does."""
        if self.kind is DisturbanceKind.FLOOD:
            return self.start
        return None

    def __call__(self, t: float) -> tuple[float, float]:
        d = disturbance_value(self, t)
        return d, d


def disturbance_value(spec: DisturbanceSpec, t: float) -> float:
    if spec.kind is DisturbanceKind.SINUSOID:
        return spec.amplitude * math.sin(spec.omega * t)
    if spec.kind is DisturbanceKind.FLOOD:
        return spec.amplitude if spec.start <= t < spec.start + spec.duration else 0.0
    return 0.0


# -- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    """Per-pond response summary, each tuple ordered pond 0, 1, 2.

    Settling and return-to-band times are ``None`` when the level never
    stays inside the band. Disturbance fields are ``None`` for runs without
    a disturbance onset.
    """

    band: float
    settling_time: tuple[float | None, ...]
    steady_state_error: tuple[float, ...]
    overshoot: tuple[float, ...]
    peak_to_peak: tuple[float, ...]
    peak_deviation: tuple[float, ...] | None = None
    return_to_band: tuple[float | None, ...] | None = None

    @property
    def settled(self) -> bool:
        return all(t is not None for t in self.settling_time)

    @property
    def overall_settling(self) -> float | None:
        return max(self.settling_time) if self.settled else None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def settling_time(t: np.ndarray, y: np.ndarray, target: float, band: float) -> float | None:
    """Earliest sample time after which ``|y - target| <= band`` holds."""
    outside = np.abs(y - target) > band
    if not outside.any():
        return float(t[0])
    last = int(np.flatnonzero(outside)[-1])
    if last == len(t) - 1:
        return None
    return float(t[last + 1])


def _tail(n: int) -> slice:
    return slice(n - max(1, int(math.ceil(0.1 * n))), n)


def compute_metrics(
    traj: Trajectory,
    targets: Sequence[float],
    band: float = 0.5,
    onset: float | None = None,
) -> Metrics:
    """Summarize a recorded run against its targets.

    The steady-state window is the final 10% of samples. With ``onset``
    set, deviations are taken from the mean level over the
    ``REFERENCE_WINDOW`` seconds before onset, and return-to-band is counted
    from onset.
    """
    if len(traj.t) == 0:
        raise ScenarioError("cannot compute metrics of an empty trajectory")
    if not band > 0:
        raise ScenarioError(f"band must be > 0, got {band}")
    t = traj.t
    levels = traj.levels
    tail = _tail(len(t))

    settle, sse, over, p2p = [], [], [], []
    for i in range(3):
        y = levels[:, i]
        settle.append(settling_time(t, y, targets[i], band))
        sse.append(float(abs(y[tail].mean() - targets[i])))
        over.append(float(max(0.0, y.max() - targets[i])))
        p2p.append(float(np.ptp(y[tail])))

    peak_dev = back = None
    if onset is not None:
        before = (t < onset) & (t >= onset - REFERENCE_WINDOW)
        after = t >= onset
        if not before.any() or not after.any():
            raise ScenarioError(f"trajectory does not straddle disturbance onset t={onset}")
        peak_dev, back = [], []
        for i in range(3):
            ref = float(levels[before, i].mean())
            y = levels[after, i]
            peak_dev.append(float(np.abs(y - ref).max()))
            when = settling_time(t[after], y, ref, band)
            back.append(None if when is None else when - onset)
        peak_dev, back = tuple(peak_dev), tuple(back)

    return Metrics(band, tuple(settle), tuple(sse), tuple(over), tuple(p2p), peak_dev, back)


# -- scenarios ----------------------------------------------------------------

DEFAULT_PID = PidSettings()
DEFAULT_FUZZY = FuzzyDesign()


@dataclass(frozen=True)
class Scenario:
    name: str
    plant: str = THREE_POND
    controller: str = "fuzzy"
    targets: tuple[float, float, float] = (30.0, 30.0, 30.0)
    initial_levels: tuple[float, float, float] = (0.0, 0.0, 0.0)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    band: float = 0.5
    params: PlantParams = field(default_factory=PlantParams)
    fuzzy: FuzzyDesign = DEFAULT_FUZZY
    pid: PidSettings = DEFAULT_PID
    description: str = ""

    def __post_init__(self):
        if self.plant not in PLANTS:
            raise ScenarioError(f"unknown plant variant {self.plant!r}")
        if self.controller not in CONTROLLERS:
            raise ScenarioError(f"unknown controller {self.controller!r}")
        if len(self.targets) != 3 or len(self.initial_levels) != 3:
            raise ScenarioError("targets and initial levels need three values")
        H = self.params.pond_height
        for label, values in (("target", self.targets), ("initial level", self.initial_levels)):
            for v in values:
                if not 0 <= v <= H:
                    raise ScenarioError(f"{label} {v} outside [0, {H}]")
        if not self.band > 0:
            raise ScenarioError(f"band must be > 0, got {self.band}")

    def make_controller(self) -> Callable:
        if self.controller == "fuzzy":
            design = replace(self.fuzzy, pond_height=self.params.pond_height, u_max=self.params.u_max)
            return FuzzyController(design)
        return PidController(self.pid, dt=self.sim.dt_control, u_max=self.params.u_max)


def run_case(scenario: Scenario) -> tuple[Trajectory, Metrics]:
    plant = make_plant(scenario.plant, scenario.params)
    traj = simulate(
        plant,
        scenario.make_controller(),
        scenario.sim,
        scenario.targets,
        disturbance=scenario.disturbance,
        initial_levels=scenario.initial_levels,
    )
    metrics = compute_metrics(traj, scenario.targets, scenario.band, onset=scenario.disturbance.onset)
    return traj, metrics


@dataclass(frozen=True)
class Comparison:
    first: Scenario
    second: Scenario
    first_traj: Trajectory
    second_traj: Trajectory
    first_metrics: Metrics
    second_metrics: Metrics

    @property
    def faster(self) -> str | None:
        """Name of the leg whose slowest pond settles first; None on a tie."""
        a, b = self.first_metrics.overall_settling, self.second_metrics.overall_settling
        if a == b:
            return None
        if b is None or (a is not None and a < b):
            return self.first.name
        return self.second.name

    def ratio(self, attr: str, pond: int = 0) -> float:
        """``second / first`` for a per-pond metric; inf when first is zero."""
        a = getattr(self.first_metrics, attr)[pond]
        b = getattr(self.second_metrics, attr)[pond]
        if a is None or b is None:
            return math.nan
        return b / a if a else (math.inf if b else 1.0)


def _differences(a: Scenario, b: Scenario) -> list[str]:
    return [
        f.name
        for f in fields(Scenario)
        if f.name not in ("name", "description") and getattr(a, f.name) != getattr(b, f.name)
    ]


def run_comparison(first: Scenario, second: Scenario) -> Comparison:
    """Run two scenarios that differ only in plant variant or controller."""
    diff = _differences(first, second)
    allowed = {"plant", "controller"}
    if not set(diff) <= allowed or len(diff) > 1:
        raise ScenarioError(
            f"comparison legs must differ in exactly the plant variant or the controller, "
            f"they differ in {diff}"
        )
    ta, ma = run_case(first)
    tb, mb = run_case(second)
    return Comparison(first, second, ta, tb, ma, mb)


# -- built-in experiments -----------------------------------------------------

HOUR = 3600.0


def _sim(hours: float) -> SimConfig:
    return SimConfig(t_end=hours * HOUR)


def _case(name, description, targets, controller="fuzzy", hours=1.5, **kw) -> Scenario:
    return Scenario(name, controller=controller, targets=targets, sim=_sim(hours), description=description, **kw)


def _pair(name: str, description: str, base: Scenario, **second) -> tuple[Scenario, Scenario]:
    a = replace(base, name=f"{name}/{base.plant}/{base.controller}", description=description)
    b = replace(base, **second)
    b = replace(b, name=f"{name}/{b.plant}/{b.controller}", description=description)
    return a, b


def builtin_scenarios() -> dict[str, Scenario | tuple[Scenario, Scenario]]:
    """Every named experiment; comparisons map to a pair of scenarios."""
    full = (30.0, 30.0, 30.0)
    staggered = (20.0, 25.0, 30.0)
    cases: dict[str, Scenario | tuple[Scenario, Scenario]] = {
        "case1": _case("case1", "Fuzzy control, targets 30/30/30 from empty ponds", full),
        "case2": _case("case2", "Fuzzy control, targets 25/30/30 from empty ponds", (25.0, 30.0, 30.0)),
        "case3": _case("case3", "Fuzzy control, targets 20/25/30 from empty ponds", staggered),
        "case4": _case("case4", "PID control, targets 30/30/30 from empty ponds", full, "pid", hours=4),
        "case4b": _case("case4b", "PID control, targets 20/25/30 from empty ponds", staggered, "pid", hours=4),
    }
    cases["cmp-pid-plants"] = _pair(
        "cmp-pid-plants",
        "Three ponds vs single pond, both under PID, targets 30/30/30",
        _case("", "", full, "pid", hours=4),
        plant=SINGLE_POND,
    )
    cases["cmp-fuzzy-vs-pid"] = _pair(
        "cmp-fuzzy-vs-pid",
        "Fuzzy vs PID on the three-pond plant, targets 30/30/30",
        _case("", "", full, "fuzzy", hours=4),
        controller="pid",
    )
    cases["cmp-sinusoid"] = _pair(
        "cmp-sinusoid",
        "Three ponds vs single pond under fuzzy control with a sinusoidal inflow disturbance",
        _case("", "", full, hours=3, disturbance=DisturbanceSpec.sinusoid()),
        plant=SINGLE_POND,
    )
    cases["cmp-flood"] = _pair(
        "cmp-flood",
        "Three ponds vs single pond under fuzzy control with a flash-flood pulse at t = 2 h",
        _case("", "", full, hours=6, disturbance=DisturbanceSpec.flood()),
        plant=SINGLE_POND,
    )
    return dict(sorted(cases.items()))


def list_scenarios() -> list[tuple[str, str]]:
    out = []
    for name, sc in builtin_scenarios().items():
        description = sc[0].description if isinstance(sc, tuple) else sc.description
        out.append((name, description))
    return out


def get_scenario(name: str) -> Scenario | tuple[Scenario, Scenario]:
    try:
        return builtin_scenarios()[name]
    except KeyError:
        raise ScenarioError(
            f"unknown scenario {name!r}; choose from {', '.join(builtin_scenarios())}"
        ) from None
