"""Numerical laboratory for the radial nonlocal diffusion equation

    u_t = ((-lap)^-1 u) lap u + alpha u^2

on truncated free space and on the unit ball, with the diagnostics needed to
check its balance law, decay regimes, potential bounds, and finite-time
blow-up at desk scale.
"""

from .grid import (
    DomainKind,
    GridError,
    RadialField,
    RadialGrid,
    integrate,
    lq_norm,
    make_grid,
)
from .operators import (
    Potential,
    inverse_laplacian,
    inverse_laplacian_ball,
    inverse_laplacian_free,
    laplacian_radial,
    potential_roundtrip_residual,
)
from .diagnostics import (
    DecayReport,
    PotentialBounds,
    Snapshot,
    StepReport,
    StepStatus,
    Trajectory,
    U0Stats,
    annulus_mass,
    decay_tracker,
    mass_balance_residual,
    pointwise_monotone_bound,
    potential_bounds_check,
    tail_guard,
    weighted_h2,
)
from .stepper import (
    SolverConfig,
    SolverError,
    SolverState,
    positivity_floor,
    run,
    step_frozen,
    step_picard,
)
from .scenarios import (
    ConvergenceStudy,
    GridSpec,
    InitialDataSpec,
    RegimeVerdict,
    ScenarioError,
    SweepEntry,
    SweepSpec,
    comparison_blowup_time,
    convergence_study,
    make_initial,
    run_regime_sweep,
    run_scenario,
)
from .runio import (
    ConfigError,
    ParsedConfig,
    RunManifest,
    config_hash,
    emit_config,
    emit_snapshot,
    emit_timeseries,
    load_snapshot,
    parse_config,
    write_run_outputs,
)

__version__ = "0.1.0"

__all__ = [
    "DomainKind", "GridError", "RadialField", "RadialGrid", "integrate",
    "lq_norm", "make_grid",
    "Potential", "inverse_laplacian", "inverse_laplacian_ball",
    "inverse_laplacian_free", "laplacian_radial", "potential_roundtrip_residual",
    "DecayReport", "PotentialBounds", "Snapshot", "StepReport", "StepStatus",
    "Trajectory", "U0Stats", "annulus_mass", "decay_tracker",
    "mass_balance_residual", "pointwise_monotone_bound",
    "potential_bounds_check", "tail_guard", "weighted_h2",
    "SolverConfig", "SolverError", "SolverState", "positivity_floor", "run",
    "step_frozen", "step_picard",
    "ConvergenceStudy", "GridSpec", "InitialDataSpec", "RegimeVerdict",
    "ScenarioError", "SweepEntry", "SweepSpec", "comparison_blowup_time",
    "convergence_study", "make_initial", "run_regime_sweep", "run_scenario",
    "ConfigError", "ParsedConfig", "RunManifest", "config_hash", "emit_config",
    "emit_snapshot", "emit_timeseries", "load_snapshot", "parse_config",
    "write_run_outputs",
    "__version__",
]
