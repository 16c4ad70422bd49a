from .estimates import (
    DIAGNOSTICS,
    DiagnosticOutcome,
    TrajectoryProfile,
    calabi_quantity,
    evolution_identity,
    judge_series,
    phidot_bounds,
    potential_decay,
    profile_trajectory,
    scalar_curvature_bounds,
    trace_gaps,
    u_quantity,
    volume_ratio,
)
from .fitting import fit_exponential, fit_linear_exponential
from .scoring import DiagnosisResult, diagnose, summarize
