"""Time integration by frozen-coefficient implicit steps with inner Picard
iterations.

One step from u advances the linearized problem

    (I - dt diag(phi) lap_h) w = u + dt alpha u^2,      phi = (-lap)^-1 u,

a backward-Euler discretization with the nonlocal coefficient and the
quadratic source frozen at the step's starting field.  Re-freezing at the
newest iterate and re-solving is the inner Picard iteration; with the
iteration cap at 1 the scheme degenerates to the plain frozen step.

Backward Euler is chosen over Crank-Nicolson deliberately: with phi >= 0 the
step matrix has nonpositive off-diagonals and a dominant diagonal (an
M-matrix), so nonnegative data and sources produce nonnegative solutions
regardless of dt.  Step-doubling recovers an O(dt^2) error estimate when one
is needed.  On the ball the outer node carries the Dirichlet row w(R) = 0;
on free space the outer row applies the interior stencil with a zero ghost
value beyond R, which is exact for fields supported inside the mesh (the
tail guard polices that) and preserves the M-matrix sign pattern.

The run driver halves dt when the inner iteration stalls or positivity is
lost, doubles it back after ten clean steps, and stops on one of: reaching
t_end, the sup-norm growth threshold (blow-up), a tail-guard breach, or dt
starvation at dt_min.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import diagnostics as diag
from .grid import DomainKind, RadialField, integrate, lq_norm
from .operators import Potential, inverse_laplacian

CLEAN_STEPS_TO_DOUBLE = 10
FLOOR_RTOL = 1e-13  # positivity floor, relative to max(u)


class SolverError(RuntimeError):
    """Linear-algebra failure inside a step (never silently regularized)."""


@dataclass(frozen=True)
class SolverConfig:
    """Integrator parameters and diagnostic tolerances."""

    alpha: float = 0.4
    dt0: float = 1e-3
    dt_min: float = 1e-10
    dt_max: float = 1e-2
    t_end: float = 1.0
    picard_max: int = 8
    picard_tol: float = 1e-10
    blowup_threshold: float = 1e6
    snapshot_stride: int = 10
    delta: float = 0.1
    r0: float = 0.5
    tol_monotone: float = diag.TOL_MONOTONE
    tol_mono_bound: float = diag.TOL_MONO_BOUND
    tail_rtol: float = diag.TAIL_RTOL
    decay_tol: float = diag.TOL_DECAY
    burnin_frac: float = diag.BURNIN_FRACTION

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not 0 < self.dt_min <= self.dt0 <= self.dt_max:
            raise ValueError(
                f"need 0 < dt_min <= dt0 <= dt_max, got "
                f"({self.dt_min}, {self.dt0}, {self.dt_max})"
            )
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.picard_max < 1:
            raise ValueError(f"picard_max must be >= 1, got {self.picard_max}")
        if self.picard_tol <= 0:
            raise ValueError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.blowup_threshold <= 1:
            raise ValueError(
                f"blowup_threshold must exceed 1, got {self.blowup_threshold}"
            )
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.r0 < 1:
            raise ValueError(f"r0 must lie in (0, 1), got {self.r0}")


@dataclass(frozen=True)
class SolverState:
    """Resumable integrator state as of the end of a step."""

    t: float
    step_index: int
    dt_next: float
    clean_steps: int
    q_accum: float
    prev_usq: float


def positivity_floor(u: RadialField) -> RadialField:
    """Clamp O(h^2)-sized undershoots to zero.

    Values in (-eps, 0) with eps = 1e-13 max(u) are rounding debris from the
    linear solve and are zeroed; anything at or below -eps is left alone so
    the positivity check can trip on it.
    """
    eps = FLOOR_RTOL * max(float(np.max(u.values)), 0.0)
    v = u.values
    mask = (v > -eps) & (v < 0.0)
    if not mask.any():
        return u
    out = v.copy()
    out[mask] = 0.0
    return RadialField(grid=u.grid, values=out, diverged=u.diverged)


def _step_matrix(grid, phi: np.ndarray, dt: float) -> np.ndarray:
    """Banded (I - dt diag(phi) lap_h) in solve_banded layout."""
    n, h, r = grid.n, grid.h, grid.r
    theta = dt * phi
    ab = np.zeros((3, n))
    ab[1, :] = 1.0
    # origin row: lap u(0) = 6 (u1 - u0) / h^2
    ab[1, 0] += 6.0 * theta[0] / h**2
    ab[0, 1] = -6.0 * theta[0] / h**2
    # interior rows
    ri = r[1:-1]
    ti = theta[1:-1]
    ab[1, 1:-1] += 2.0 * ti / h**2
    ab[0, 2:] = -ti * (1.0 / h**2 + 1.0 / (ri * h))
    ab[2, 0:-2] = -ti * (1.0 / h**2 - 1.0 / (ri * h))
    # outer row
    if grid.kind is DomainKind.BALL:
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
    else:
        ab[1, -1] += 2.0 * theta[-1] / h**2
        ab[2, -2] = -theta[-1] * (1.0 / h**2 - 1.0 / (r[-1] * h))
    return ab


def _solve_step(grid, phi: np.ndarray, u: np.ndarray, dt: float, alpha: float) -> np.ndarray:
    rhs = u + dt * alpha * u * u
    if grid.kind is DomainKind.BALL:
        rhs = rhs.copy()
        rhs[-1] = 0.0
    ab = _step_matrix(grid, phi, dt)
    try:
        w = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - M-matrix in practice
        raise SolverError(f"singular tridiagonal step matrix: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise SolverError("tridiagonal solve produced non-finite values")
    return w


def step_frozen(u: RadialField, phi: Potential, dt: float, alpha: float) -> RadialField:
    """One backward-Euler solve with coefficient and source frozen at u."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if phi.grid != u.grid:
        raise ValueError("potential and field live on different grids")
    w = _solve_step(u.grid, phi.phi, u.values, dt, alpha)
    return RadialField(grid=u.grid, values=w)


def _picard(u: RadialField, cfg: SolverConfig, dt: float):
    """Inner iteration; returns (field, iters, last contraction ratio, converged).

    The iteration is seeded at the starting field itself, so the first solve
    is exactly the frozen step and a stationary field converges immediately.
    """
    grid = u.grid
    w_grid = grid.w
    prev = u.values
    diffs: list[float] = []
    w = prev
    for k in range(1, cfg.picard_max + 1):
        pot = inverse_laplacian(RadialField(grid=grid, values=prev))
        w = _solve_step(grid, pot.phi, u.values, dt, cfg.alpha)
        d = float(np.sqrt(w_grid @ (w - prev) ** 2))
        diffs.append(d)
        prev = w
        if d <= cfg.picard_tol * float(np.sqrt(w_grid @ (w * w))):
            break
    ratio = diffs[-1] / diffs[-2] if len(diffs) >= 2 and diffs[-2] > 0 else 0.0
    # picard_max == 1 is the single-solve IMEX mode: accepted by definition
    converged = cfg.picard_max == 1 or diffs[-1] <= cfg.picard_tol * float(
        np.sqrt(w_grid @ (w * w))
    )
    field = RadialField(grid=grid, values=w)
    return field, len(diffs), ratio, converged


def step_picard(u: RadialField, cfg: SolverConfig, dt: float):
    """Picard-iterated step: (new field, iterations used, last ratio).

    On non-convergence after picard_max solves the last iterate is returned;
    the run driver treats that as a failed attempt.
    """
    field, iters, ratio, _ = _picard(u, cfg, dt)
    return field, iters, ratio


def _u0_stats(u0: RadialField, cfg: SolverConfig) -> diag.U0Stats:
    return diag.U0Stats(
        mass=integrate(u0.grid, u0),
        l1=lq_norm(u0, 1.0),
        l2=lq_norm(u0, 2.0),
        l2pd=lq_norm(u0, 2.0 + cfg.delta),
        linf=float(np.max(np.abs(u0.values))),
        weighted_h2=diag.weighted_h2(u0),
    )


def run(
    u0: RadialField,
    cfg: SolverConfig,
    *,
    resume_field: RadialField | None = None,
    resume_state: SolverState | None = None,
) -> diag.Trajectory:
    """Advance u0 to t_end with adaptive dt, recording a report per step.

    Pass resume_field/resume_state (from a stored snapshot) to continue an
    interrupted run; the replayed step sequence is bit-identical to the
    uninterrupted one because the state carries the dt ladder and the
    time-quadrature accumulators.
    """
    if (resume_field is None) != (resume_state is None):
        raise ValueError("resume_field and resume_state must be given together")
    grid = u0.grid
    free = grid.kind is DomainKind.FREE
    if float(np.min(u0.values)) < 0:
        warnings.warn("initial data has negative values", stacklevel=2)
    if not diag.is_non_increasing(u0, cfg.tol_monotone):
        warnings.warn("initial data is not radially non-increasing", stacklevel=2)

    stats = _u0_stats(u0, cfg)
    traj = diag.Trajectory(
        reports=[],
        snapshots=[],
        config=cfg,
        u0=u0,
        u0_stats=stats,
        status=diag.StepStatus.OK,
    )
    if resume_state is not None:
        if resume_state.t >= cfg.t_end * (1.0 - 1e-12):
            traj.reason = "already complete"
            return traj
        u = resume_field
        t = resume_state.t
        step_index = resume_state.step_index
        dt_next = resume_state.dt_next
        clean = resume_state.clean_steps
        q_accum = resume_state.q_accum
        prev_usq = resume_state.prev_usq
    else:
        u = u0
        t = 0.0
        step_index = 0
        dt_next = cfg.dt0
        clean = 0
        q_accum = 0.0
        prev_usq = stats.l2**2

    linf_cap = cfg.blowup_threshold * max(stats.linf, 1e-300)
    terminal = diag.StepStatus.OK
    reason = ""

    while t < cfg.t_end and (cfg.t_end - t) > 1e-12 * cfg.t_end:
        dt = min(dt_next, cfg.t_end - t)
        # attempt the step, halving dt until it is accepted or dt starves
        while True:
            field, iters, ratio, converged = _picard(u, cfg, dt)
            field = positivity_floor(field)
            positive_ok = float(np.min(field.values)) >= 0.0
            if converged and positive_ok:
                break
            if dt <= cfg.dt_min * (1.0 + 1e-12):
                terminal = diag.StepStatus.DIVERGED
                reason = (
                    "dt_min reached without progress "
                    f"(picard converged={converged}, positive={positive_ok})"
                )
                break
            dt = max(dt / 2.0, cfg.dt_min)
            dt_next = dt
            clean = 0
        if terminal is not diag.StepStatus.OK:
            break

        u = field
        t += dt
        step_index += 1
        usq = lq_norm(u, 2.0) ** 2
        q_accum += dt * (prev_usq + usq) / 2.0
        prev_usq = usq

        l1 = lq_norm(u, 1.0)
        linf = float(np.max(np.abs(u.values)))
        num = abs(l1 + (1.0 - cfg.alpha) * q_accum - stats.mass)
        residual = num / stats.mass if stats.mass > 0 else num
        monotone_ok = diag.is_non_increasing(u, cfg.tol_monotone)
        if free:
            a0 = diag.annulus_mass(u, cfg.r0, 1.0 / cfg.r0)
            if a0 > 0:
                bounds = diag.potential_bounds_check(u, cfg.r0, a0)
                bounds_ok = bounds.ok
                traj.potential_lower.append(bounds.phi_weighted_min)
            else:
                bounds_ok = False
                traj.potential_lower.append(0.0)
            tail_ok = diag.tail_guard(u)
        else:
            bounds_ok = True  # Dirichlet potential vanishes at r=1; not applicable
            tail_ok = True
            traj.potential_lower.append(float("nan"))

        status = diag.StepStatus.OK
        if linf > linf_cap:
            status = diag.StepStatus.DIVERGED
            terminal = status
            reason = f"sup norm exceeded {cfg.blowup_threshold:g} x initial at t={t:.6g}"
        elif not tail_ok:
            status = diag.StepStatus.TAIL_BREACH
            terminal = status
            reason = f"tail guard tripped at t={t:.6g}"

        traj.reports.append(
            diag.StepReport(
                t=t,
                dt=dt,
                l1=l1,
                l2=float(np.sqrt(usq)),
                l2pd=lq_norm(u, 2.0 + cfg.delta),
                linf=linf,
                mass_balance_residual=residual,
                picard_iters=iters,
                picard_ratio=ratio,
                weighted_h2=diag.weighted_h2(u),
                monotone_ok=monotone_ok,
                positive_ok=positive_ok,
                potential_bounds_ok=bounds_ok,
                tail_ok=tail_ok,
                status=status,
            )
        )
        clean += 1
        if clean >= CLEAN_STEPS_TO_DOUBLE and dt_next < cfg.dt_max:
            dt_next = min(2.0 * dt_next, cfg.dt_max)
            clean = 0
        if step_index % cfg.snapshot_stride == 0:
            traj.snapshots.append(
                diag.Snapshot(
                    t=t,
                    step_index=step_index,
                    field=u,
                    state=SolverState(
                        t=t,
                        step_index=step_index,
                        dt_next=dt_next,
                        clean_steps=clean,
                        q_accum=q_accum,
                        prev_usq=prev_usq,
                    ),
                )
            )
        if terminal is not diag.StepStatus.OK:
            break

    # always keep the terminal field resumable/inspectable
    if traj.reports and (
        not traj.snapshots or traj.snapshots[-1].step_index != step_index
    ):
        traj.snapshots.append(
            diag.Snapshot(
                t=t,
                step_index=step_index,
                field=u,
                state=SolverState(
                    t=t,
                    step_index=step_index,
                    dt_next=dt_next,
                    clean_steps=clean,
                    q_accum=q_accum,
                    prev_usq=prev_usq,
                ),
            )
        )
    traj.status = terminal
    traj.reason = reason or ("reached t_end" if terminal is diag.StepStatus.OK else "")
    return traj
