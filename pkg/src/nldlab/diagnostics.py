"""Runtime monitors: conservation residuals, norm ladders, potential bounds.

The model equation u_t = ((-lap)^-1 u) lap u + alpha u^2 carries an exact
balance law,

    int u(t) dx + (1 - alpha) int_0^t int u^2 dx ds = int u_0 dx,

whose discrete residual is the primary consistency check on the integrator.
The remaining monitors track the structure that keeps the equation
non-degenerate for positive, radial, non-increasing data:

  * two-sided potential bounds  D1 > phi(r) > D2 / <r>  with the lower
    estimate minorized by (A0 r0) / (8 pi), A0 the mass in the annulus
    r0 < r < 1/r0;
  * the pointwise monotone bound u(r0) <= 3 D3 / r0^3 with
    D3 = int_0^{r0} u s^2 ds;
  * the weighted curvature norm ||<r>^(1/2) lap u||_L2, reported and never
    enforced;
  * L^q decay trends (non-increasing for q < 1/alpha) and the tail guard
    that certifies the truncated Newton formula.

Here <r> = sqrt(1 + r^2).  All functions are pure and read-only over
immutable trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .grid import DomainKind, RadialField, lq_norm
from .operators import inverse_laplacian, laplacian_radial

if TYPE_CHECKING:  # import cycle: stepper builds the records defined here
    from .stepper import SolverConfig, SolverState

# Tolerance defaults; every run-level knob is overridable via SolverConfig.
TOL_DECAY = 1e-8          # per-step slack for "non-increasing" norm series
TOL_MONOTONE = 1e-8       # radial monotonicity slack, relative to max(u)
TOL_MONO_BOUND = 1e-10    # pointwise monotone-bound slack, relative to max(u)
TAIL_RTOL = 1e-10         # tail guard: outermost nodes vs max(u)
TAIL_FRACTION = 0.02      # share of outermost nodes the tail guard inspects
BURNIN_FRACTION = 0.01    # share of initial steps excluded from decay trends


class StepStatus(Enum):
    OK = "Ok"
    DIVERGED = "Diverged"
    TAIL_BREACH = "TailBreach"


@dataclass(frozen=True)
class StepReport:
    """Per-step record of norms, residuals, and structure flags."""

    t: float
    dt: float
    l1: float
    l2: float
    l2pd: float
    linf: float
    mass_balance_residual: float
    picard_iters: int
    picard_ratio: float
    weighted_h2: float
    monotone_ok: bool
    positive_ok: bool
    potential_bounds_ok: bool
    tail_ok: bool
    status: StepStatus


@dataclass(frozen=True)
class U0Stats:
    """Initial-data summary recorded once per run."""

    mass: float
    l1: float
    l2: float
    l2pd: float
    linf: float
    weighted_h2: float


@dataclass(frozen=True)
class Snapshot:
    """Sparse stored field plus the solver state needed to resume from it."""

    t: float
    step_index: int
    field: RadialField
    state: "SolverState"


@dataclass
class Trajectory:
    """Time-ordered run record: reports, sparse snapshots, terminal status."""

    reports: list[StepReport]
    snapshots: list[Snapshot]
    config: "SolverConfig"
    u0: RadialField
    u0_stats: U0Stats
    status: StepStatus
    reason: str = ""
    # dense series of the weighted potential minimum (lower-bound estimate),
    # one entry per report; kept out of the CSV schema
    potential_lower: list[float] = field(default_factory=list)


class PotentialBounds(NamedTuple):
    """Estimates for the two-sided potential bound check."""

    phi_max: float            # upper estimate, max over nodes of phi
    phi_weighted_min: float   # lower estimate, min over nodes of phi * <r>
    ok: bool


class DecayReport(NamedTuple):
    monotone_after_burnin: bool
    terminal_ratio: float
    q_in_regime: bool


def japanese_bracket(r: np.ndarray) -> np.ndarray:
    """<r> = sqrt(1 + r^2)."""
    return np.sqrt(1.0 + r * r)


def _linear_segment_moment(a, b, fa, fb, lo, hi):
    """Integral of the linear segment through (a, fa), (b, fb) against rho^2
    over the clipped interval [lo, hi] (exact)."""
    slope = (fb - fa) / (b - a)
    intercept = fa - slope * a
    return slope * (hi**4 - lo**4) / 4.0 + intercept * (hi**3 - lo**3) / 3.0


def radial_second_moment(u: RadialField, r_lo: float, r_hi: float) -> float:
    """int_{r_lo}^{r_hi} u(s) s^2 ds with piecewise-linear u, exact moments.

    Endpoints may fall inside panels; the straddling panels are clipped.
    """
    grid = u.grid
    r_lo = max(0.0, r_lo)
    r_hi = min(float(grid.radius), r_hi)
    if r_hi <= r_lo:
        return 0.0
    r, v = grid.r, u.values
    a, b = r[:-1], r[1:]
    lo = np.clip(a, r_lo, r_hi)
    hi = np.clip(b, r_lo, r_hi)
    active = hi > lo
    total = _linear_segment_moment(
        a[active], b[active], v[:-1][active], v[1:][active], lo[active], hi[active]
    )
    return float(np.sum(total))


def annulus_mass(u: RadialField, r_lo: float, r_hi: float) -> float:
    """Mass of u in the spherical shell r_lo < |x| < r_hi."""
    return 4.0 * np.pi * radial_second_moment(u, r_lo, r_hi)


def max_radial_increase(u: RadialField) -> float:
    """Largest upward jump between adjacent nodes (<= 0 for monotone data)."""
    return float(np.max(np.diff(u.values)))


def is_non_increasing(u: RadialField, tol: float = TOL_MONOTONE) -> bool:
    """Radial monotonicity up to tol * max(u)."""
    scale = max(float(np.max(u.values)), 0.0)
    return max_radial_increase(u) <= tol * scale


def mass_balance_residual(traj: Trajectory, upto: float) -> float:
    """Relative defect of the balance law at the last report time <= upto.

    Q(t) is the trapezoid-in-time integral of int u^2 dx over the report
    series (seeded with the initial field).  For zero initial data the
    residual is reported in absolute terms.
    """
    if not traj.reports:
        raise ValueError("empty trajectory")
    last = traj.reports[-1].t
    if upto > last * (1.0 + 1e-12) + 1e-300:
        raise ValueError(f"upto={upto} exceeds final time {last}")
    times = [0.0]
    usq = [traj.u0_stats.l2**2]
    l1 = traj.u0_stats.l1
    for rep in traj.reports:
        if rep.t > upto * (1.0 + 1e-12):
            break
        times.append(rep.t)
        usq.append(rep.l2**2)
        l1 = rep.l1
    q = float(np.trapezoid(usq, times))
    alpha = traj.config.alpha
    m0 = traj.u0_stats.mass
    num = abs(l1 + (1.0 - alpha) * q - m0)
    return num / m0 if m0 > 0 else num


def potential_bounds_check(u: RadialField, r0: float, a0: float) -> PotentialBounds:
    """Two-sided potential bound estimates and the annulus minorant test.

    a0 is the caller-computed mass in the annulus r0 < |x| < 1/r0; the lower
    estimate min(phi <r>) must dominate a0 r0 / (8 pi).
    """
    if not 0.0 < r0 < 1.0:
        raise ValueError(f"r0 must lie in (0, 1), got {r0}")
    if a0 <= 0.0:
        raise ValueError("annulus mass a0 must be positive")
    pot = inverse_laplacian(u)
    weighted = pot.phi * japanese_bracket(u.grid.r)
    phi_max = float(np.max(pot.phi))
    phi_weighted_min = float(np.min(weighted))
    minorant = a0 * r0 / (8.0 * np.pi)
    return PotentialBounds(phi_max, phi_weighted_min, phi_weighted_min >= minorant)


def pointwise_monotone_bound(u: RadialField, r0: float) -> float:
    """Defect u(r0) - 3 D3 / r0^3 with D3 = int_0^{r0} u s^2 ds.

    Nonpositive (within TOL_MONO_BOUND * max u) for any nonnegative radially
    non-increasing field; constants saturate the bound exactly.
    """
    grid = u.grid
    if not 0.0 < r0 <= grid.radius:
        raise ValueError(f"r0 must lie in (0, {grid.radius}], got {r0}")
    if not is_non_increasing(u):
        raise ValueError("pointwise_monotone_bound requires non-increasing data")
    u_r0 = float(np.interp(r0, grid.r, u.values))
    d3 = radial_second_moment(u, 0.0, r0)
    return u_r0 - 3.0 * d3 / r0**3


def weighted_h2(u: RadialField) -> float:
    """||<r>^(1/2) lap_h u||_L2, the monitored weighted curvature norm."""
    lap = laplacian_radial(u)
    grid = u.grid
    integrand = japanese_bracket(grid.r) * lap.values**2
    return float(np.sqrt(grid.w @ integrand))


def tail_guard(u: RadialField) -> bool:
    """True iff u is numerically zero on the outermost nodes.

    Certifies the truncated Newton formula: the free-space potential is
    exact only when the source vanishes beyond the mesh radius.
    """
    if u.grid.kind is not DomainKind.FREE:
        raise ValueError("tail_guard applies to free-space grids")
    n = u.grid.n
    k = max(1, math.ceil(TAIL_FRACTION * n))
    scale = max(float(np.max(u.values)), 0.0)
    return bool(np.all(np.abs(u.values[n - k :]) <= TAIL_RTOL * scale))


def _norm_series(traj: Trajectory, q: float) -> tuple[list[int], list[float]]:
    """(step indices, ||u||_q) series for the trajectory, seeded at step 0.

    Dense from reports when q matches a recorded column (1, 2, or 2+delta),
    otherwise sparse from stored snapshots.
    """
    cfg = traj.config
    dense = {1.0: "l1", 2.0: "l2", 2.0 + cfg.delta: "l2pd"}
    for qq, attr in dense.items():
        if abs(q - qq) <= 1e-12:
            idx = [0] + list(range(1, len(traj.reports) + 1))
            vals = [getattr(traj.u0_stats, attr)] + [
                getattr(rep, attr) for rep in traj.reports
            ]
            return idx, vals
    idx = [0]
    vals = [lq_norm(traj.u0, q)]
    for snap in traj.snapshots:
        idx.append(snap.step_index)
        vals.append(lq_norm(snap.field, q))
    return idx, vals


def decay_tracker(traj: Trajectory, q: float) -> DecayReport:
    """Monotone-decay trend and terminal ratio of the L^q norm series.

    The regime check follows the decay theory: q in (1, 2] for alpha < 1/2,
    q in (1, 3/2] for alpha in [1/2, 2/3).  Out-of-regime q is still
    computed, only flagged.
    """
    alpha = traj.config.alpha
    if 0.5 <= alpha < 2.0 / 3.0:
        in_regime = 1.0 < q <= 1.5
    else:
        in_regime = 1.0 < q <= 2.0
    idx, vals = _norm_series(traj, q)
    if vals[0] == 0.0:
        return DecayReport(True, 0.0, in_regime)
    burn = math.ceil(traj.config.burnin_frac * len(traj.reports))
    tol = traj.config.decay_tol * vals[0]
    monotone = True
    for k in range(1, len(vals)):
        if idx[k] <= burn:
            continue
        if vals[k] > vals[k - 1] + tol:
            monotone = False
            break
    return DecayReport(monotone, vals[-1] / vals[0], in_regime)
