"""Exponential-type time integrators for semilinear Schroedinger equations,
with an MCTDHF helium benchmark and a soliton testbed."""

from .adaptive import ControllerConfig, RunReport, StepRecord, ToleranceUnattainable, integrate
from .grid import (
    DiagonalPropagator,
    GridFunction,
    UniformGrid,
    apply_exp,
    convolve_potential,
    inner,
    kinetic_propagator,
    phi_apply,
    to_frequency,
    to_space,
)
from .methods import MethodSpec, available_methods, parse_method
from .phi import phi_scalar, phi_table, phi_values
from .problem import ArrayState, BlowUpError, DiagonalProblem, EvalCounter, SemilinearProblem, b_flow_rk4
from .nls import NlsProblem, nls_problem, soliton_exact
from .mctdhf import (
    HeliumModel,
    MctdhfProblem,
    MctdhfState,
    build_mean_fields,
    energy,
    ground_state,
    load_state,
    overlap,
    save_state,
)

__version__ = "0.1.0"
