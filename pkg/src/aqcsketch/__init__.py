"""Sketched approximate quantum compiling on the spin ansatz."""

from .engine import CircuitStructure, GateSpec, apply_ansatz, build_structure
from .lbfgs import LbfgsConfig, LbfgsResult, lbfgs
from .objective import (
    SUCCESS_FIDELITY,
    ObjectiveContext,
    fidelity,
    fidelity_estimate,
    gradient_sketched,
    objective_full,
    objective_sketched,
    value_and_gradient,
)
from .optimizers import (
    EpochPlan,
    RunReport,
    SgdConfig,
    init_theta,
    sgd,
    sketch_and_solve,
    sketch_and_solve_1,
    sketch_and_solve_2,
)
from .sketch import SketchKind, SketchOperator, full_sketch, gaussian_sketch, qr_sketch

__version__ = "0.1.0"
