"""Elastic cloud scaling driven by predator-prey population dynamics.

The package couples an adaptive ODE integrator for the two-species
Lotka-Volterra system with a deterministic discrete-event datacenter
simulation: VM supply plays the prey, job demand the predator, and scaling
controllers read their targets off integrated trajectory samples.
"""

from .autoscaler import (
    Direction,
    ProactiveController,
    ReactiveController,
    ScaleDecision,
    ScalePolicyConfig,
    TimesharedGateController,
    Trigger,
    lv_scale_candidates,
    lv_scale_target,
    tune_parameters,
)
from .engine import (
    Batch,
    Cloudlet,
    HostSpec,
    SimConfig,
    SimTrace,
    Simulation,
    SimulationError,
    VmSpec,
)
from .lv import (
    LVParams,
    PopulationState,
    Region,
    Scenario,
    Trajectory,
    classify_region,
    derivative,
    equilibria,
    first_integral,
    scenario_condition,
)
from .metrics import (
    QoSReport,
    avg_completion,
    avg_utilization,
    build_report,
    makespan,
    sla_rate,
    vm_utilization,
)
from .predictor import EllipseModel, WmaWindow, fit_ellipse, predict_vm, wma_predict
from .presets import (
    EXPERIMENT_PRESETS,
    TRAJECTORY_PRESETS,
    build_simulation,
    resolve_policy,
)
from .solver import (
    ConvergenceReport,
    Divergence,
    SolverConfig,
    SolverError,
    convergence_check,
    integrate,
    integrate_fixed,
    rkf45_step,
)

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "Cloudlet",
    "ConvergenceReport",
    "Direction",
    "Divergence",
    "EllipseModel",
    "EXPERIMENT_PRESETS",
    "HostSpec",
    "LVParams",
    "PopulationState",
    "ProactiveController",
    "QoSReport",
    "ReactiveController",
    "Region",
    "Scenario",
    "ScaleDecision",
    "ScalePolicyConfig",
    "SimConfig",
    "SimTrace",
    "Simulation",
    "SimulationError",
    "SolverConfig",
    "SolverError",
    "TimesharedGateController",
    "TRAJECTORY_PRESETS",
    "Trajectory",
    "Trigger",
    "VmSpec",
    "WmaWindow",
    "avg_completion",
    "avg_utilization",
    "build_report",
    "build_simulation",
    "classify_region",
    "convergence_check",
    "derivative",
    "equilibria",
    "first_integral",
    "fit_ellipse",
    "integrate",
    "integrate_fixed",
    "lv_scale_candidates",
    "lv_scale_target",
    "makespan",
    "predict_vm",
    "resolve_policy",
    "rkf45_step",
    "scenario_condition",
    "sla_rate",
    "tune_parameters",
    "vm_utilization",
    "wma_predict",
]
