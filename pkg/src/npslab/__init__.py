"""npslab: a numerical laboratory for two-species electrodiffusion coupled to
Stokes flow -- 1D steady currents, explicit stability criteria and decay
rates, 2D periodic-strip simulation with theorem monitors, and a
boundary-integral criterion for nonzero steady flow."""

from .core import (Z1, Z2, Grid1D, PhysParams, SteadyState1D, StripBC,
                   StripState2D, ValidationError)
from .criteria import (StabilityReport, SufficientConditions, THRESHOLD,
                       criterion_constants, decay_rate, scan_delta,
                       sufficient_boundary_conditions, weak_current_check)
from .evolve import (CFLError, DiagnosticsRow, EvolveConfig, Sources,
                     StripSimulator, decay_fit, entry_time,
                     entropy_inequality_check, interpolation_check, run, step)
from .flowcheck import FlowResult, flow_indicator, load_curve, loads_curve
from .steady1d import (BoundsReport, ConvergenceError, GummelOptions,
                       check_bounds, current_deviation, currents,
                       residual_steady, solve_steady_1d)

__version__ = "0.1.0"

__all__ = [
    "Z1", "Z2", "Grid1D", "PhysParams", "SteadyState1D", "StripBC",
    "StripState2D", "ValidationError", "StabilityReport",
    "SufficientConditions", "THRESHOLD", "criterion_constants", "decay_rate",
    "scan_delta", "sufficient_boundary_conditions", "weak_current_check",
    "CFLError", "DiagnosticsRow", "EvolveConfig", "Sources", "StripSimulator",
    "decay_fit", "entry_time", "entropy_inequality_check",
    "interpolation_check", "run", "step", "FlowResult", "flow_indicator",
    "load_curve", "loads_curve", "BoundsReport", "ConvergenceError",
    "GummelOptions", "check_bounds", "current_deviation", "currents",
    "residual_steady", "solve_steady_1d",
]
