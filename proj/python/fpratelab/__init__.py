"""Finite-volume Fokker-Planck solver with entropy and spectral-gap diagnostics.

Fields cross the boundary as NumPy arrays in cell order (x fastest). The
heavy lifting happens in the compiled ``_core`` extension.
"""

from ._core import (
    DecayReport,
    EnvelopeReport,
    FaceField,
    GradientQuadraticDrift,
    Grid,
    LinearRotationDrift,
    NeuralDrift,
    Operator,
    SolverError,
    SpectralReport,
    Trajectory,
    ZeroDrift,
    assemble_fp,
    assemble_phi,
    assemble_stiffness,
    check_inward,
    dissipation,
    dual_state,
    envelope_check,
    evolve,
    evolve_phi,
    fit_decay,
    mass,
    null_vector,
    perturbed_initial,
    ratio_bound_check,
    relative_entropy,
    remove_weighted_mean,
    run,
    sample_drift,
    smallest_constrained_eigen,
    solve_linear,
    spectral_gap,
    steady_state,
    weighted_norm_sq,
)

__all__ = [name for name in dir() if not name.startswith("_")]
