"""Frenet frames and inextensible flows of non-null curves under an
index-1 metric, with a residual-based verification harness."""

from .curvekit import CLOSED, OPEN, CurveSpec, SampledCurve, arclength, d_ds, sample, speed, total_length
from .errors import CurveFlowError
from .exprjet import Jet, eval_jet, eval_scalar, parse
from .flowsim import (
    FlowSpec,
    SimState,
    Trajectory,
    arclength_drift,
    dv_dt_rhs,
    evolve,
    initial_state,
    solve_inextensible_f1,
)
from .frenet import FrenetData, frenet_apparatus, frenet_residuals, stencil_curvatures
from .minkowski import CausalCharacter, causal_character, inner, norm
from .verify import (
    CHECKS,
    PsiMatrix,
    VerificationReport,
    check_curvature_pde,
    check_frame_evolution,
    check_iff_condition,
    check_psi_antisymmetry,
    check_speed_evolution,
    merge_reports,
    psi_matrix,
    run_check,
)

__version__ = "0.1.0"

__all__ = [
    "CLOSED",
    "OPEN",
    "CHECKS",
    "CausalCharacter",
    "CurveFlowError",
    "CurveSpec",
    "FlowSpec",
    "FrenetData",
    "Jet",
    "PsiMatrix",
    "SampledCurve",
    "SimState",
    "Trajectory",
    "VerificationReport",
    "arclength",
    "arclength_drift",
    "causal_character",
    "check_curvature_pde",
    "check_frame_evolution",
    "check_iff_condition",
    "check_psi_antisymmetry",
    "check_speed_evolution",
    "d_ds",
    "dv_dt_rhs",
    "eval_jet",
    "eval_scalar",
    "evolve",
    "frenet_apparatus",
    "frenet_residuals",
    "initial_state",
    "inner",
    "merge_reports",
    "norm",
    "parse",
    "psi_matrix",
    "run_check",
    "sample",
    "solve_inextensible_f1",
    "speed",
    "stencil_curvatures",
    "total_length",
    "__version__",
]
