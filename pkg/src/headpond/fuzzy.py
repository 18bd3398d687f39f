"""Two-engine fuzzy level controller.

Each engine sees one feeder pond and pond 0: inputs ``(E_i, E_0, x_i, x_0)``
and outputs the feeder inflow ``U_i`` and the duct valve ``s_i``. Engine FS1
handles pond 1, FS2 handles pond 2, and both share one 81-rule table.

Inference uses the product t-norm and a firing-strength weighted average of
output singletons (zero-order Sugeno defuzzification).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .plant import ControlVector, PlantState

ERROR_LABELS = ("NEG", "ZERO", "POS")
HEIGHT_LABELS = ("LOW", "MED", "HIGH")
N_LEVELS = 5


class FuzzyConfigError(ValueError):
    """Rule base or membership configuration that cannot be evaluated."""


class Shape(str, enum.Enum):
    TRIANGLE = "triangle"
    LEFT_SHOULDER = "left_shoulder"
    RIGHT_SHOULDER = "right_shoulder"


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear membership function.

    ``left <= peak <= right``. A left shoulder is 1 up to ``peak`` and falls
    to 0 at ``right``; a right shoulder rises from ``left`` and stays at 1
    beyond ``peak``. ``left`` is ignored for left shoulders and ``right`` for
    right shoulders.
    """

    shape: Shape
    left: float
    peak: float
    right: float

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if not self.left <= self.peak <= self.right:
            raise FuzzyConfigError(f"breakpoints out of order: {self}")

    @classmethod
    def triangle(cls, left: float, peak: float, right: float) -> "MembershipFunction":
        return cls(Shape.TRIANGLE, left, peak, right)

    @classmethod
    def left_shoulder(cls, peak: float, right: float) -> "MembershipFunction":
        return cls(Shape.LEFT_SHOULDER, peak, peak, right)

    @classmethod
    def right_shoulder(cls, left: float, peak: float) -> "MembershipFunction":
        return cls(Shape.RIGHT_SHOULDER, left, peak, peak)

    def __call__(self, x: float) -> float:
        return membership_grade(self, x)


def _rising(x: float, lo: float, hi: float) -> float:
    if x <= lo:
        return 0.0
    if x >= hi:
        return 1.0
    return (x - lo) / (hi - lo)


def membership_grade(mf: MembershipFunction, x: float) -> float:
    if mf.shape is Shape.LEFT_SHOULDER:
        if x <= mf.peak:
            return 1.0
        return 1.0 - _rising(x, mf.peak, mf.right)
    if mf.shape is Shape.RIGHT_SHOULDER:
        if x >= mf.peak:
            return 1.0
        return _rising(x, mf.left, mf.peak)
    if x == mf.peak:
        return 1.0
    if x < mf.peak:
        return _rising(x, mf.left, mf.peak)
    return 1.0 - _rising(x, mf.peak, mf.right)


Partition = Mapping[str, MembershipFunction]


def error_partition(neg_width: float, pos_width: float | None = None) -> dict[str, MembershipFunction]:
    """NEG/ZERO/POS partition of the level error, in meters.

    ZERO spans ``[-neg_width, pos_width]``; NEG and POS are its complements
    on either side, so the three grades always sum to one.
    """
    pos_width = neg_width if pos_width is None else pos_width
    if not (neg_width > 0 and pos_width > 0):
        raise FuzzyConfigError("ZERO widths must be positive")
    return {
        "NEG": MembershipFunction.left_shoulder(-neg_width, 0.0),
        "ZERO": MembershipFunction.triangle(-neg_width, 0.0, pos_width),
        "POS": MembershipFunction.right_shoulder(0.0, pos_width),
    }


def height_partition(max_height: float) -> dict[str, MembershipFunction]:
    """LOW/MED/HIGH partition of a pond level over ``[0, max_height]``."""
    mid = max_height / 2.0
    return {
        "LOW": MembershipFunction.left_shoulder(0.0, mid),
        "MED": MembershipFunction.triangle(0.0, mid, max_height),
        "HIGH": MembershipFunction.right_shoulder(mid, max_height),
    }


@dataclass(frozen=True)
class Rule:
    error_i: str
    error_0: str
    height_i: str
    height_0: str
    u_level: int
    valve_level: int


class Engine(str, enum.Enum):
    FS1 = "FS1"
    FS2 = "FS2"

    @property
    def pond(self) -> int:
        return 1 if self is Engine.FS1 else 2


def uniform_levels(top: float) -> tuple[float, ...]:
    return tuple(top * k / (N_LEVELS - 1) for k in range(N_LEVELS))


@dataclass(frozen=True)
class RuleBase:
    engine: Engine
    rules: tuple[Rule, ...]
    u_values: tuple[float, ...]
    valve_values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "engine", Engine(self.engine))
        if len(self.u_values) != N_LEVELS or len(self.valve_values) != N_LEVELS:
            raise FuzzyConfigError("each output needs exactly five singleton levels")
        keys = [(r.error_i, r.error_0, r.height_i, r.height_0) for r in self.rules]
        expected = set(itertools.product(ERROR_LABELS, ERROR_LABELS, HEIGHT_LABELS, HEIGHT_LABELS))
        if len(keys) != len(expected) or set(keys) != expected:
            raise FuzzyConfigError(
                f"rule base must hold one rule per label combination ({len(expected)}), got {len(keys)}"
            )
        for r in self.rules:
            if not (0 <= r.u_level < N_LEVELS and 0 <= r.valve_level < N_LEVELS):
                raise FuzzyConfigError(f"output level out of range in {r}")

    def __len__(self) -> int:
        return len(self.rules)

    def lookup(self, error_i: str, error_0: str, height_i: str, height_0: str) -> Rule:
        for r in self.rules:
            if (r.error_i, r.error_0, r.height_i, r.height_0) == (error_i, error_0, height_i, height_0):
                return r
        raise KeyError((error_i, error_0, height_i, height_0))


# (E_i, E_0) -> (U level, valve level) before height modifiers
BASE_POLICY = {
    ("NEG", "NEG"): (4, 4),
    ("NEG", "ZERO"): (4, 2),
    ("NEG", "POS"): (3, 0),
    ("ZERO", "NEG"): (3, 4),
    ("ZERO", "ZERO"): (2, 2),
    ("ZERO", "POS"): (1, 0),
    ("POS", "NEG"): (0, 4),
    ("POS", "ZERO"): (0, 3),
    ("POS", "POS"): (0, 0),
}


def build_rule_table(
    engine: Engine | str = Engine.FS1,
    u_values: Sequence[float] | None = None,
    valve_values: Sequence[float] | None = None,
    u_max: float = 100.0,
) -> RuleBase:
    """Expand the 9-cell error policy over the 9 height pairs.

    A HIGH feeder pond drops the inflow one level; a LOW pond 0 that does not
    already have a surplus opens the valve one level further.
    """
    rules = []
    for e_i, e_0, h_i, h_0 in itertools.product(ERROR_LABELS, ERROR_LABELS, HEIGHT_LABELS, HEIGHT_LABELS):
        u, s = BASE_POLICY[(e_i, e_0)]
        if h_i == "HIGH":
            u = max(u - 1, 0)
        if h_0 == "LOW" and e_0 != "POS":
            s = min(s + 1, N_LEVELS - 1)
        rules.append(Rule(e_i, e_0, h_i, h_0, u, s))
    return RuleBase(
        Engine(engine),
        tuple(rules),
        tuple(u_values) if u_values is not None else uniform_levels(u_max),
        tuple(valve_values) if valve_values is not None else uniform_levels(1.0),
    )


def _index_rules(rules: RuleBase) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.array(
        [
            (
                ERROR_LABELS.index(r.error_i),
                ERROR_LABELS.index(r.error_0),
                HEIGHT_LABELS.index(r.height_i),
                HEIGHT_LABELS.index(r.height_0),
            )
            for r in rules.rules
        ]
    )
    u = np.array([rules.u_values[r.u_level] for r in rules.rules])
    v = np.array([rules.valve_values[r.valve_level] for r in rules.rules])
    return idx, u, v


def _grades(partition: Partition, labels: Sequence[str], x: float) -> np.ndarray:
    return np.array([membership_grade(partition[label], x) for label in labels])


def firing_strengths(
    rules: RuleBase,
    mfs: Sequence[Partition],
    inputs: Sequence[float],
) -> np.ndarray:
    """Product of the four input grades for every rule, in table order."""
    idx, _, _ = _index_rules(rules)
    return _firing(idx, mfs, inputs)


def _firing(idx: np.ndarray, mfs: Sequence[Partition], inputs: Sequence[float]) -> np.ndarray:
    e_i, e_0, x_i, x_0 = inputs
    g = (
        _grades(mfs[0], ERROR_LABELS, e_i),
        _grades(mfs[1], ERROR_LABELS, e_0),
        _grades(mfs[2], HEIGHT_LABELS, x_i),
        _grades(mfs[3], HEIGHT_LABELS, x_0),
    )
    return g[0][idx[:, 0]] * g[1][idx[:, 1]] * g[2][idx[:, 2]] * g[3][idx[:, 3]]


def evaluate_fis(
    rules: RuleBase,
    mfs: Sequence[Partition],
    inputs: Sequence[float],
) -> tuple[float, float]:
    """Crisp ``(U_i, s_i)`` for inputs ``(E_i, E_0, x_i, x_0)``.

    ``mfs`` holds one label -> membership mapping per input, in input order.
    """
    idx, u, v = _index_rules(rules)
    return _defuzzify(_firing(idx, mfs, inputs), u, v, inputs)


def _defuzzify(w: np.ndarray, u: np.ndarray, v: np.ndarray, inputs) -> tuple[float, float]:
    total = w.sum()
    if not total > 0:
        raise FuzzyConfigError(f"no rule fires for inputs {tuple(inputs)}")
    # a convex blend; clipping only removes round-off past the hull
    return (
        float(np.clip(w @ u / total, u.min(), u.max())),
        float(np.clip(w @ v / total, v.min(), v.max())),
    )


class FuzzyEngine:
    """One inference engine with its rule table and input partitions."""

    def __init__(self, rules: RuleBase, mfs: Sequence[Partition]):
        if len(mfs) != 4:
            raise FuzzyConfigError("an engine takes exactly four inputs")
        self.rules = rules
        self.mfs = tuple(mfs)
        self._idx, self._u, self._v = _index_rules(rules)
        # a partition with a gap would leave some inputs with no firing rule
        for k, (partition, labels) in enumerate(
            zip(self.mfs, (ERROR_LABELS, ERROR_LABELS, HEIGHT_LABELS, HEIGHT_LABELS))
        ):
            missing = set(labels) - set(partition)
            if missing:
                raise FuzzyConfigError(f"input {k} lacks labels {sorted(missing)}")

    def __call__(self, e_i: float, e_0: float, x_i: float, x_0: float) -> tuple[float, float]:
        inputs = (e_i, e_0, x_i, x_0)
        return _defuzzify(_firing(self._idx, self.mfs, inputs), self._u, self._v, inputs)


@dataclass(frozen=True)
class FuzzyDesign:
    """Membership layout and output singletons shared by both engines.

    ``zero_neg`` and ``zero_pos`` are the extents of the ZERO error label
    below and above zero, in meters. The wide lower extent makes the inflow
    taper off over the last half-pond of filling; the narrow upper extent
    bounds the steady offset, since a level sitting ``e`` above target still
    commands roughly ``(1 - e / zero_pos)`` of the ZERO-cell inflow.
    """

    pond_height: float = 35.0
    u_max: float = 100.0
    zero_neg: float = 17.5
    zero_pos: float = 0.15

    def __post_init__(self):
        for name in ("pond_height", "u_max", "zero_neg", "zero_pos"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise FuzzyConfigError(f"{name} must be a positive finite number, got {value!r}")

    def partitions(self) -> tuple[Partition, Partition, Partition, Partition]:
        err = error_partition(self.zero_neg, self.zero_pos)
        height = height_partition(self.pond_height)
        return err, err, height, height

    def engine(self, which: Engine | str) -> FuzzyEngine:
        return FuzzyEngine(build_rule_table(which, u_max=self.u_max), self.partitions())


class FuzzyController:
    """Subtractors plus the two parallel engines.

    Errors are ``E_i = x_i - x_i_desired``. Both engines receive the same
    ``E_0`` and ``x_0``.
    """

    def __init__(self, design: FuzzyDesign | None = None):
        self.design = design or FuzzyDesign()
        self.fs1 = self.design.engine(Engine.FS1)
        self.fs2 = self.design.engine(Engine.FS2)

    def __call__(self, t: float, state: PlantState, targets: Sequence[float]) -> ControlVector:
        return fuzzy_controller_step(state, targets, self.fs1, self.fs2)


def fuzzy_controller_step(
    state: Sequence[float],
    targets: Sequence[float],
    fs1: FuzzyEngine,
    fs2: FuzzyEngine,
) -> ControlVector:
    x0, x1, x2 = state[0], state[1], state[2]
    e0, e1, e2 = x0 - targets[0], x1 - targets[1], x2 - targets[2]
    u1, s1 = fs1(e1, e0, x1, x0)
    u2, s2 = fs2(e2, e0, x2, x0)
    return ControlVector(u1, u2, s1, s2)


# -- plain-text rule tables -------------------------------------------------

def format_rule_table(rules: RuleBase) -> str:
    i = rules.engine.pond
    lines = [
        f"# {rules.engine.value} rule table: E{i},E0,X{i},X0 -> U{i},S{i}",
        "# U levels: " + ",".join(repr(float(v)) for v in rules.u_values),
        "# S levels: " + ",".join(repr(float(v)) for v in rules.valve_values),
    ]
    for r in rules.rules:
        lines.append(f"{r.error_i},{r.error_0},{r.height_i},{r.height_0},L{r.u_level},V{r.valve_level}")
    return "\n".join(lines) + "\n"


def parse_rule_table(text: str) -> RuleBase:
    engine = None
    u_values = v_values = None
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("U levels:"):
                u_values = tuple(float(v) for v in body.split(":", 1)[1].split(","))
            elif body.startswith("S levels:"):
                v_values = tuple(float(v) for v in body.split(":", 1)[1].split(","))
            elif "rule table" in body:
                engine = Engine(body.split()[0])
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 6 or fields[4][:1] != "L" or fields[5][:1] != "V":
            raise FuzzyConfigError(f"line {lineno}: malformed rule {raw!r}")
        try:
            rules.append(Rule(*fields[:4], int(fields[4][1:]), int(fields[5][1:])))
        except ValueError as exc:
            raise FuzzyConfigError(f"line {lineno}: {exc}") from None
    if engine is None or u_values is None or v_values is None:
        raise FuzzyConfigError("rule table header is missing")
    for r in rules:
        if r.error_i not in ERROR_LABELS or r.error_0 not in ERROR_LABELS:
            raise FuzzyConfigError(f"unknown error label in {r}")
        if r.height_i not in HEIGHT_LABELS or r.height_0 not in HEIGHT_LABELS:
            raise FuzzyConfigError(f"unknown height label in {r}")
    return RuleBase(engine, tuple(rules), u_values, v_values)


def export_rules(rules: RuleBase, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_rule_table(rules), encoding="utf-8")
    return path


def import_rules(path: str | Path) -> RuleBase:
    return parse_rule_table(Path(path).read_text(encoding="utf-8"))
