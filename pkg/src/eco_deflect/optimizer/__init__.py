"""
Direct-shooting transcription and NLP solver for continuous deflection.
"""

from eco_deflect.optimizer.auglag import AugLagResult, AugmentedLagrangian, NLPEvaluation
from eco_deflect.optimizer.problem import (
    REGIMES,
    BoundedProfile,
    Decision,
    Regime,
    TranscriptionSpec,
    objective,
)
from eco_deflect.optimizer.shooting import ShootingProblem
from eco_deflect.optimizer.transcription import (
    ConstraintResiduals,
    SolutionReport,
    check_feasibility,
    evaluate_constraints,
    laser_energy,
    solve_bounded,
    solve_constant_power,
    solve_transcription,
    solve_variable_power,
    sweep_start_times,
)

__all__ = [
    "REGIMES",
    "AugLagResult",
    "AugmentedLagrangian",
    "BoundedProfile",
    "ConstraintResiduals",
    "Decision",
    "NLPEvaluation",
    "Regime",
    "ShootingProblem",
    "SolutionReport",
    "TranscriptionSpec",
    "check_feasibility",
    "evaluate_constraints",
    "laser_energy",
    "objective",
    "solve_bounded",
    "solve_constant_power",
    "solve_transcription",
    "solve_variable_power",
    "sweep_start_times",
]
