"""Closed-loop simulation of head-pond level regulation for run-of-river hydro.

Three-pond and single-pond hydraulic plants, a two-engine fuzzy controller,
a PID baseline, and the experiments that compare them.
"""

from .fuzzy import FuzzyController, FuzzyDesign, build_rule_table, evaluate_fis
from .integrate import SimConfig, Trajectory, rk4_step, simulate
from .pid import PidController, PidGains, PidSettings, pid_step
from .plant import (
    ControlVector,
    FlowMode,
    PlantParams,
    PlantState,
    SinglePondPlant,
    ThreePondPlant,
    duct_flow,
    single_pond_rhs,
    three_pond_rhs,
)
from .scenarios import DisturbanceSpec, Metrics, Scenario, compute_metrics, run_case, run_comparison

__version__ = "0.1.0"
