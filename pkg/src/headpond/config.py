"""Declarative run configuration.

A config is a YAML mapping. Every key is optional; omitted values keep the
defaults of the selected built-in scenario (``case1`` when none is named)::

    scenario: case1          # built-in to start from
    name: my-run             # single scenarios only
    plant_variant: three-pond | single-pond
    controller: fuzzy | pid
    targets: [30, 30, 30]
    initial_levels: [0, 0, 0]
    band: 0.5
    plant: {pond_height, surge_height, pond_area, surge_area, duct_area,
            headrace_area, headrace_length, loss_coeff, friction_coeff,
            gravity, u_max, surge_orifice_area, flow_mode}
    sim: {dt_plant, dt_control, t_end, record_every}
    disturbance: {kind: none | sinusoid | flood, amplitude, period | omega,
                  start, duration}
    fuzzy: {zero_neg, zero_pos}
    pid: {valve: {Kp, Ki, Kd}, inflow: {Kp, Ki, Kd}}
    output: {dir, csv, plot}

``plant_variant``, ``controller`` and ``name`` are rejected when the
selected scenario is a comparison, whose legs are fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .fuzzy import FuzzyConfigError, FuzzyDesign
from .integrate import SimConfig
from .pid import PidGains, PidSettings
from .plant import FlowMode, PlantError, PlantParams
from .scenarios import (
    CONTROLLERS,
    PLANTS,
    DisturbanceKind,
    DisturbanceSpec,
    Scenario,
    ScenarioError,
    get_scenario,
)

DEFAULT_SCENARIO = "case1"
DEFAULT_OUT_DIR = "results"

TOP_KEYS = {
    "scenario", "name", "plant_variant", "controller", "targets", "initial_levels", "band",
    "plant", "sim", "disturbance", "fuzzy", "pid", "output",
}
DISTURBANCE_KEYS = {"kind", "amplitude", "period", "omega", "start", "duration"}
OUTPUT_KEYS = {"dir", "csv", "plot"}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    scenario_name: str
    legs: tuple[Scenario, ...]
    out_dir: Path
    csv: Path | None = None
    plot: Path | None = None

    @property
    def is_comparison(self) -> bool:
        return len(self.legs) == 2


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError("", f"cannot read config file {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"{path}: not valid YAML: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("", f"{path}: top level must be a mapping")
    return doc


def _check_keys(section: Mapping, allowed, where: str) -> None:
    if not isinstance(section, Mapping):
        raise ConfigError(where, "expected a mapping")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(prefix + str(unknown[0]), "unknown key")


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return float(value)


def _triple(value: Any, key: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(key, "expected a list of three numbers")
    return tuple(_number(v, f"{key}[{i}]") for i, v in enumerate(value))


def _dataclass_section(cls, base, section: Mapping, where: str, converters=None):
    allowed = {f.name for f in fields(cls)}
    _check_keys(section, allowed, where)
    converters = converters or {}
    values = {}
    for key, raw in section.items():
        conv = converters.get(key)
        values[key] = conv(raw, f"{where}.{key}") if conv else _number(raw, f"{where}.{key}")
    try:
        return replace(base, **values)
    except (PlantError, FuzzyConfigError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def _flow_mode(value: Any, key: str) -> FlowMode:
    try:
        return FlowMode(value)
    except ValueError:
        raise ConfigError(key, f"expected one of {[m.value for m in FlowMode]}, got {value!r}") from None


def _record_every(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _disturbance(section: Mapping, base: DisturbanceSpec) -> DisturbanceSpec:
    _check_keys(section, DISTURBANCE_KEYS, "disturbance")
    kind_raw = section.get("kind", base.kind.value)
    try:
        kind = DisturbanceKind(kind_raw)
    except ValueError:
        raise ConfigError("disturbance.kind", f"expected none, sinusoid or flood, got {kind_raw!r}") from None
    nums = {k: _number(v, f"disturbance.{k}") for k, v in section.items() if k != "kind"}
    if "period" in nums and "omega" in nums:
        raise ConfigError("disturbance.period", "give either period or omega, not both")
    if "period" in nums:
        if not nums["period"] > 0:
            raise ConfigError("disturbance.period", "must be > 0")
        nums["omega"] = 2 * math.pi / nums.pop("period")
    if kind is base.kind:
        start = base
    elif kind is DisturbanceKind.SINUSOID:
        start = DisturbanceSpec.sinusoid()
    elif kind is DisturbanceKind.FLOOD:
        start = DisturbanceSpec.flood()
    else:
        start = DisturbanceSpec()
    try:
        return replace(start, kind=kind, **nums)
    except ScenarioError as exc:
        raise ConfigError("disturbance", str(exc)) from None


def _pid(section: Mapping, base: PidSettings) -> PidSettings:
    _check_keys(section, {"valve", "inflow"}, "pid")
    out = base
    for loop in ("valve", "inflow"):
        if loop in section:
            gains = _dataclass_section(PidGains, getattr(base, loop), section[loop], f"pid.{loop}")
            out = replace(out, **{loop: gains})
    return out


def _apply(sc: Scenario, doc: Mapping, comparison: bool) -> Scenario:
    changes: dict[str, Any] = {}
    if comparison:
        for key in ("plant_variant", "controller", "name"):
            if key in doc:
                raise ConfigError(key, "cannot be overridden for a comparison scenario")
    if "name" in doc:
        changes["name"] = str(doc["name"])
    if "plant_variant" in doc:
        if doc["plant_variant"] not in PLANTS:
            raise ConfigError("plant_variant", f"expected one of {list(PLANTS)}, got {doc['plant_variant']!r}")
        changes["plant"] = doc["plant_variant"]
    if "controller" in doc:
        if doc["controller"] not in CONTROLLERS:
            raise ConfigError("controller", f"expected one of {list(CONTROLLERS)}, got {doc['controller']!r}")
        changes["controller"] = doc["controller"]
    if "targets" in doc:
        changes["targets"] = _triple(doc["targets"], "targets")
    if "initial_levels" in doc:
        changes["initial_levels"] = _triple(doc["initial_levels"], "initial_levels")
    if "band" in doc:
        changes["band"] = _number(doc["band"], "band")
    if "plant" in doc:
        changes["params"] = _dataclass_section(
            PlantParams, sc.params, doc["plant"], "plant", {"flow_mode": _flow_mode}
        )
    if "sim" in doc:
        changes["sim"] = _dataclass_section(SimConfig, sc.sim, doc["sim"], "sim", {"record_every": _record_every})
    if "disturbance" in doc:
        changes["disturbance"] = _disturbance(doc["disturbance"], sc.disturbance)
    if "fuzzy" in doc:
        section = doc["fuzzy"]
        _check_keys(section, {"zero_neg", "zero_pos"}, "fuzzy")
        changes["fuzzy"] = _dataclass_section(FuzzyDesign, sc.fuzzy, section, "fuzzy")
    if "pid" in doc:
        changes["pid"] = _pid(doc["pid"], sc.pid)
    H = changes.get("params", sc.params).pond_height
    for key in ("targets", "initial_levels"):
        for i, v in enumerate(changes.get(key, ())):
            if not 0 <= v <= H:
                raise ConfigError(f"{key}[{i}]", f"{v:g} lies outside [0, {H:g}]")
    if "band" in changes and not changes["band"] > 0:
        raise ConfigError("band", "must be > 0")
    try:
        return replace(sc, **changes)
    except ScenarioError as exc:
        raise ConfigError("scenario", str(exc)) from None

def build_run_config(
    doc: Mapping | None = None,
    scenario: str | None = None,
    out_dir: str | Path | None = None,
    csv: str | Path | None = None,
    plot: str | Path | None = None,
    band: float | None = None,
    flow_mode: str | None = None,
) -> RunConfig:
    """Validate a config document and apply command-line overrides.

    Flags win over the document. Every bound is checked here, before any
    simulation starts.
    """
    doc = dict(doc or {})
    _check_keys(doc, TOP_KEYS, "")
    name = scenario or doc.get("scenario") or DEFAULT_SCENARIO
    try:
        base = get_scenario(str(name))
    except ScenarioError as exc:
        raise ConfigError("scenario", str(exc)) from None

    overrides = dict(doc)
    if band is not None:
        overrides["band"] = band
    if flow_mode is not None:
        overrides["plant"] = {**dict(overrides.get("plant") or {}), "flow_mode": flow_mode}

    comparison = isinstance(base, tuple)
    legs = base if comparison else (base,)
    legs = tuple(_apply(leg, overrides, comparison) for leg in legs)

    output = doc.get("output") or {}
    _check_keys(output, OUTPUT_KEYS, "output")
    out = Path(out_dir or output.get("dir") or DEFAULT_OUT_DIR)
    csv_path = csv or output.get("csv")
    plot_path = plot or output.get("plot")
    return RunConfig(
        str(name),
        legs,
        out,
        Path(csv_path) if csv_path else None,
        Path(plot_path) if plot_path else None,
    )
