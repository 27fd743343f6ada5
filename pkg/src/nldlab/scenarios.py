"""Canned experiments: initial-data families, regime sweeps, refinement studies.

The nonlinearity coefficient alpha splits the dynamics into four regimes,
each with its own checkable signature:

    alpha < 1/2        L^q norms (q <= 2) decay monotonically        Decay12
    1/2 <= alpha < 2/3 L^(3/2+gamma) stays bounded, small q decay    Decay23
    2/3 <= alpha <= 1  no proof either way; data is recorded only    OpenRegime
    alpha > 1 (ball)   the mass obeys M' >= (alpha-1) M^2 / |B1|,
                       forcing finite-time blow-up                   BallBlowup

The sweep runner attaches the regime-appropriate verdict to each trajectory;
the open regime never gets a pass/fail.  Initial data families are positive,
radial, and non-increasing by construction (the bump uses a C^2 polynomial
blend so the weighted curvature monitor stays finite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics as diag
from .grid import DomainKind, GridError, RadialField, RadialGrid, lq_norm, make_grid
from .stepper import SolverConfig, run

GAMMA_BOUNDED = 0.05  # L^(3/2+gamma) exponent offset for the Decay23 check
BOUNDED_FACTOR = 2.0  # allowed growth of the bounded-norm series


class ScenarioError(ValueError):
    """Inconsistent experiment configuration."""


@dataclass(frozen=True)
class GridSpec:
    """Mesh request: domain kind, node count, outer radius."""

    domain: DomainKind = DomainKind.FREE
    n: int = 1025
    radius: float = 8.0

    def build(self) -> RadialGrid:
        return make_grid(self.domain, self.n, self.radius)


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial-data family and shape parameters.

    gaussian:  amplitude * exp(-(r/width)^2)
    bump:      amplitude on [0, plateau], C^2 smootherstep blend down to 0
               at cutoff, 0 beyond
    powertail: amplitude * (1 + r^2)^(-power/2); needs power > 3 for finite
               mass and a truncation radius large enough for the tail guard
    parabola:  amplitude * (1 - (r/R)^2), the ball blow-up profile
    """

    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    plateau: float = 1.0
    cutoff: float = 3.0
    power: float = 12.0

    def __post_init__(self) -> None:
        if self.family not in ("gaussian", "bump", "powertail", "parabola"):
            raise ScenarioError(f"unknown initial data family: {self.family!r}")
        if self.amplitude <= 0:
            raise ScenarioError(f"amplitude must be positive, got {self.amplitude}")


@dataclass(frozen=True)
class SweepSpec:
    """Regime sweep request: alpha list plus shared data/grid/solver setup."""

    alphas: tuple[float, ...]
    data: InitialDataSpec = InitialDataSpec()
    grid: GridSpec = GridSpec()
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if not self.alphas:
            raise ScenarioError("sweep needs at least one alpha")
        if any(a < 0 for a in self.alphas):
            raise ScenarioError("alphas must be nonnegative")


@dataclass(frozen=True)
class RegimeVerdict:
    """Outcome label for one sweep entry; passed is None in the open regime."""

    regime: str
    passed: bool | None
    detail: str


@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    trajectory: diag.Trajectory
    verdict: RegimeVerdict


def _smootherstep(s: np.ndarray) -> np.ndarray:
    """Quintic blend with zero first and second derivatives at 0 and 1."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def make_initial(spec: InitialDataSpec, grid: RadialGrid) -> RadialField:
    """Sample the requested family on the grid; validates structure and tail."""
    r = grid.r
    if spec.family == "gaussian":
        vals = spec.amplitude * np.exp(-((r / spec.width) ** 2))
    elif spec.family == "bump":
        if spec.cutoff <= spec.plateau:
            raise ScenarioError("bump cutoff must exceed its plateau radius")
        if spec.cutoff > grid.radius:
            raise ScenarioError(
                f"bump cutoff {spec.cutoff} exceeds grid radius {grid.radius}"
            )
        s = (r - spec.plateau) / (spec.cutoff - spec.plateau)
        vals = spec.amplitude * (1.0 - _smootherstep(s))
    elif spec.family == "powertail":
        if grid.kind is not DomainKind.FREE:
            raise ScenarioError("powertail data needs the free-space domain")
        if spec.power <= 3.0:
            raise ScenarioError(
                f"powertail needs power > 3 for finite mass, got {spec.power}"
            )
        vals = spec.amplitude * (1.0 + r * r) ** (-spec.power / 2.0)
    else:  # parabola
        vals = spec.amplitude * (1.0 - (r / grid.radius) ** 2)
    u = RadialField(grid=grid, values=vals)
    if grid.kind is DomainKind.FREE:
        if not diag.tail_guard(u):
            raise ScenarioError(
                f"{spec.family} data breaches the tail guard at radius {grid.radius}; "
                "enlarge the domain or sharpen the decay"
            )
    if np.any(np.diff(vals) > 0) or np.any(vals < 0):
        raise ScenarioError("constructed data must be nonnegative and non-increasing")
    return u


def run_scenario(cfg: SolverConfig, grid_spec: GridSpec, data: InitialDataSpec) -> diag.Trajectory:
    """Build the grid and data, then integrate to t_end."""
    grid = grid_spec.build()
    u0 = make_initial(data, grid)
    return run(u0, cfg)


def comparison_blowup_time(alpha: float, mass0: float) -> float:
    """Blow-up time of the comparison dynamics M' = (alpha-1) M^2 / |B1|."""
    if alpha <= 1 or mass0 <= 0:
        return math.inf
    ball_volume = 4.0 * np.pi / 3.0
    return ball_volume / ((alpha - 1.0) * mass0)


def _classify(alpha: float) -> str:
    if alpha < 0.5:
        return "Decay12"
    if alpha < 2.0 / 3.0:
        return "Decay23"
    if alpha <= 1.0:
        return "OpenRegime"
    return "BallBlowup"


def _verdict(alpha: float, traj: diag.Trajectory) -> RegimeVerdict:
    regime = _classify(alpha)
    if regime == "Decay12":
        rep = diag.decay_tracker(traj, 2.0)
        return RegimeVerdict(
            regime,
            rep.monotone_after_burnin,
            f"L2 monotone={rep.monotone_after_burnin}, terminal ratio={rep.terminal_ratio:.4g}",
        )
    if regime == "Decay23":
        q = 1.5 + GAMMA_BOUNDED
        idx, vals = diag._norm_series(traj, q)
        bound = BOUNDED_FACTOR * vals[0] if vals[0] > 0 else 0.0
        bounded = all(v <= bound for v in vals) if vals[0] > 0 else True
        return RegimeVerdict(
            regime,
            bounded,
            f"L{q:g} max/initial="
            f"{(max(vals) / vals[0]) if vals[0] > 0 else 0.0:.4g} (cap {BOUNDED_FACTOR})",
        )
    if regime == "OpenRegime":
        rep = diag.decay_tracker(traj, 1.5)
        return RegimeVerdict(
            regime,
            None,
            f"observational: L3/2 terminal ratio={rep.terminal_ratio:.4g}, "
            f"status={traj.status.value}",
        )
    t_star = comparison_blowup_time(alpha, traj.u0_stats.mass)
    t_div = traj.reports[-1].t if traj.reports else math.inf
    diverged = traj.status is diag.StepStatus.DIVERGED
    return RegimeVerdict(
        regime,
        diverged and t_div < t_star,
        f"diverged={diverged} at t={t_div:.4g} (comparison bound {t_star:.4g})",
    )


def run_regime_sweep(spec: SweepSpec) -> list[SweepEntry]:
    """Run each alpha and attach its regime verdict.

    Entries are independent (order preserved by alpha position); alphas above
    one require the ball domain, where the divergence argument applies.
    """
    entries: list[SweepEntry] = []
    for alpha in spec.alphas:
        if alpha > 1.0 and spec.grid.domain is not DomainKind.BALL:
            raise ScenarioError(
                f"alpha={alpha} > 1 requires the ball domain for a blow-up verdict"
            )
        cfg = replace(spec.solver, alpha=alpha)
        traj = run_scenario(cfg, spec.grid, spec.data)
        entries.append(SweepEntry(alpha=alpha, trajectory=traj, verdict=_verdict(alpha, traj)))
    return entries


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    dt: float
    error: float


@dataclass(frozen=True)
class ConvergenceStudy:
    """Observed spatial and temporal orders from joint (h, dt) refinement.

    Each level halves both h and dt.  Errors against a reference two
    halvings finer are measured twice: once with dt pinned across levels
    (the identical time discretization cancels in differences, isolating
    the spatial order) and once with h pinned (isolating the temporal
    order).  The orders come from the coarsest level pair, which carries
    the least contamination from the finite reference.
    """

    spatial: list[ConvergenceRow]
    temporal: list[ConvergenceRow]
    spatial_order: float
    temporal_order: float


def _pair_order(errors: list[float]) -> float:
    if errors[0] <= 0 or errors[1] <= 0:
        return float("nan")
    return float(np.log2(errors[0] / errors[1]))


def _final_field(cfg: SolverConfig, grid_spec: GridSpec, data: InitialDataSpec) -> RadialField:
    traj = run_scenario(cfg, grid_spec, data)
    if traj.status is not diag.StepStatus.OK:
        raise ScenarioError(f"convergence run did not reach t_probe: {traj.reason}")
    return traj.snapshots[-1].field


def _coarse_error(fine: RadialField, coarse: RadialField) -> float:
    """L2 distance on the coarse grid, restricting the fine field to coarse nodes."""
    stride = (fine.grid.n - 1) // (coarse.grid.n - 1)
    restricted = fine.values[::stride]
    d = restricted - coarse.values
    return float(np.sqrt(coarse.grid.w @ (d * d)))


def convergence_study(
    data: InitialDataSpec,
    alpha: float,
    t_probe: float = 0.5,
    levels: int = 3,
    *,
    base_n: int = 65,
    base_dt: float = 4e-3,
    radius: float = 8.0,
) -> ConvergenceStudy:
    """Joint grid/dt refinement with orders split by error source.

    Levels k = 0..levels-1 use (h0 / 2^k, dt0 / 2^k); the reference solution
    refines the varying parameter by two further halvings.
    """
    if levels < 3:
        raise ScenarioError(f"need at least 3 refinement levels, got {levels}")
    ref = levels + 1
    ns = [(base_n - 1) * 2**k + 1 for k in range(ref + 1)]
    dts = [base_dt / 2**k for k in range(ref + 1)]

    def cfg_for(dt: float) -> SolverConfig:
        return SolverConfig(
            alpha=alpha,
            dt0=dt,
            dt_min=dt,
            dt_max=dt,
            t_end=t_probe,
            picard_max=8,
            picard_tol=1e-12,
            snapshot_stride=10**9,  # terminal snapshot only
        )

    # spatial sweep: identical dt on every level, reference grid 4x finer
    dt_pin = dts[1]
    fine_spatial = _final_field(cfg_for(dt_pin), GridSpec(DomainKind.FREE, ns[ref], radius), data)
    spatial: list[ConvergenceRow] = []
    for k in range(levels):
        gs = GridSpec(DomainKind.FREE, ns[k], radius)
        u = _final_field(cfg_for(dt_pin), gs, data)
        spatial.append(
            ConvergenceRow(h=gs.build().h, dt=dt_pin, error=_coarse_error(fine_spatial, u))
        )
    # temporal sweep: identical grid on every level, reference dt 4x finer
    gs_pin = GridSpec(DomainKind.FREE, ns[levels - 1], radius)
    h_pin = gs_pin.build().h
    fine_temporal = _final_field(cfg_for(dts[ref]), gs_pin, data)
    temporal: list[ConvergenceRow] = []
    for k in range(levels):
        u = _final_field(cfg_for(dts[k]), gs_pin, data)
        temporal.append(
            ConvergenceRow(h=h_pin, dt=dts[k], error=_coarse_error(fine_temporal, u))
        )
    return ConvergenceStudy(
        spatial=spatial,
        temporal=temporal,
        spatial_order=_pair_order([row.error for row in spatial]),
        temporal_order=_pair_order([row.error for row in temporal]),
    )
