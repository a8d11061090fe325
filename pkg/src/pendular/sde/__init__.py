"""Positive-P stochastic dynamics of the pendular cavity."""
from .dynamics import (
    N_NOISES,
    PhaseSpaceState,
    TrajectoryDivergence,
    diffusion_matrix,
    is_diffusion_psd,
    noise_matrix,
    pp_drift,
    psd_report,
    step,
)
from .ensemble import (
    DivergenceWarning,
    EnsembleConfig,
    EnsembleConfigError,
    TrajectoryResult,
    initial_state,
    run_ensemble,
    run_trajectory,
)
from .moments import VARIABLES, BlockMoments, MomentAccumulator
from .sampling import (
    sample_initial_coherent,
    sample_initial_thermal,
    sample_initial_vacuum,
    trajectory_rngs,
)

__all__ = [
    "N_NOISES", "PhaseSpaceState", "TrajectoryDivergence", "diffusion_matrix", "is_diffusion_psd",
    "noise_matrix", "pp_drift", "psd_report", "step", "DivergenceWarning", "EnsembleConfig",
    "EnsembleConfigError", "TrajectoryResult", "initial_state", "run_ensemble", "run_trajectory",
    "VARIABLES", "BlockMoments", "MomentAccumulator", "sample_initial_coherent",
    "sample_initial_thermal", "sample_initial_vacuum", "trajectory_rngs",
]
