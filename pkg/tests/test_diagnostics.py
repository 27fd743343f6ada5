import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nldlab.diagnostics import (
    StepStatus,
    annulus_mass,
    decay_tracker,
    mass_balance_residual,
    pointwise_monotone_bound,
    potential_bounds_check,
    tail_guard,
    weighted_h2,
)
from nldlab.grid import DomainKind, RadialField, make_grid
from nldlab.stepper import SolverConfig, run
from conftest import random_monotone_field


def gaussian_run(alpha=0.4, t_end=0.1, n=257, dt=1e-3, **kw):
    grid = make_grid(DomainKind.FREE, n, 8.0)
    u0 = RadialField(grid=grid, values=np.exp(-grid.r**2))
    cfg = SolverConfig(alpha=alpha, dt0=dt, dt_min=dt, dt_max=dt, t_end=t_end, **kw)
    return run(u0, cfg)


def zero_run(t_end=3e-3):
    grid = make_grid(DomainKind.FREE, 65, 8.0)
    zero = RadialField(grid=grid, values=np.zeros(grid.n))
    cfg = SolverConfig(dt0=1e-3, dt_min=1e-3, dt_max=1e-3, t_end=t_end)
    return run(zero, cfg)


class TestMassBalance:
    def test_zero_trajectory(self):
        traj = zero_run()
        assert mass_balance_residual(traj, traj.reports[-1].t) == 0.0

    def test_alpha_one_reduces_to_mass_conservation(self):
        traj = gaussian_run(alpha=1.0)
        res = mass_balance_residual(traj, 0.1)
        direct = abs(traj.reports[-1].l1 - traj.u0_stats.mass) / traj.u0_stats.mass
        assert res == pytest.approx(direct, rel=1e-12)

    def test_refinement(self):
        res_a = mass_balance_residual(gaussian_run(dt=1e-3), 0.1)
        res_b = mass_balance_residual(gaussian_run(dt=5e-4), 0.1)
        assert res_a <= 1e-3
        assert 2 / 1.5 <= res_a / res_b <= 2 * 1.5

    def test_empty_trajectory_rejected(self):
        traj = zero_run()
        traj.reports.clear()
        with pytest.raises(ValueError, match="empty"):
            mass_balance_residual(traj, 1.0)

    def test_matches_per_step_record(self):
        traj = gaussian_run()
        rep = traj.reports[-1]
        assert mass_balance_residual(traj, rep.t) == pytest.approx(
            rep.mass_balance_residual, rel=1e-9, abs=1e-15
        )


class TestPotentialBounds:
    def test_unit_ball_indicator(self):
        grid = make_grid(DomainKind.FREE, 2049, 4.0)
        vals = np.where(grid.r < 1.0, 1.0, 0.0)
        vals[grid.r == 1.0] = 0.5
        u = RadialField(grid=grid, values=vals)
        a0 = annulus_mass(u, 0.5, 2.0)
        assert a0 == pytest.approx((7 / 8) * 4 * np.pi / 3, rel=1e-4)
        bounds = potential_bounds_check(u, 0.5, a0)
        assert bounds.ok
        assert bounds.phi_weighted_min >= 1 / 6
        assert bounds.phi_max == pytest.approx(0.5, abs=1e-4)
        # minorant value the check uses
        assert a0 * 0.5 / (8 * np.pi) == pytest.approx(0.0729, abs=1e-3)

    def test_zero_annulus_mass_rejected(self, free_grid):
        u = RadialField(grid=free_grid, values=np.zeros(free_grid.n))
        with pytest.raises(ValueError, match="positive"):
            potential_bounds_check(u, 0.5, 0.0)

    def test_scaling_linearity(self, free_grid):
        u = RadialField(grid=free_grid, values=np.exp(-free_grid.r**2))
        double = RadialField(grid=free_grid, values=2 * u.values)
        a0 = annulus_mass(u, 0.5, 2.0)
        b1 = potential_bounds_check(u, 0.5, a0)
        b2 = potential_bounds_check(double, 0.5, 2 * a0)
        assert b2.phi_max == pytest.approx(2 * b1.phi_max, rel=1e-13)
        assert b2.phi_weighted_min == pytest.approx(2 * b1.phi_weighted_min, rel=1e-13)

    def test_r0_validated(self, free_grid):
        u = RadialField(grid=free_grid, values=np.exp(-free_grid.r**2))
        with pytest.raises(ValueError, match="r0"):
            potential_bounds_check(u, 1.5, 1.0)


class TestPointwiseMonotoneBound:
    def test_constant_saturates(self, ball_grid):
        c = 0.8
        u = RadialField(grid=ball_grid, values=np.full(ball_grid.n, c))
        assert pointwise_monotone_bound(u, 0.5) == pytest.approx(0.0, abs=1e-12 * c)

    def test_gaussian(self):
        grid = make_grid(DomainKind.FREE, 2049, 8.0)
        u = RadialField(grid=grid, values=np.exp(-grid.r**2))
        # oracle: u(1) - 3 int_0^1 exp(-s^2) s^2 ds
        core = quad(lambda s: np.exp(-s * s) * s * s, 0, 1)[0]
        assert core == pytest.approx(0.189472, abs=1e-6)
        expected = np.exp(-1.0) - 3 * core
        got = pointwise_monotone_bound(u, 1.0)
        assert got == pytest.approx(expected, abs=1e-6)
        assert got < 0

    def test_zero_field(self, ball_grid):
        u = RadialField(grid=ball_grid, values=np.zeros(ball_grid.n))
        assert pointwise_monotone_bound(u, 0.5) == 0.0

    def test_non_monotone_rejected(self, ball_grid):
        u = RadialField(grid=ball_grid, values=ball_grid.r.copy())
        with pytest.raises(ValueError, match="non-increasing"):
            pointwise_monotone_bound(u, 0.5)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000), r0=st.floats(0.1, 0.9))
    def test_bound_holds_for_monotone_fields(self, seed, r0):
        grid = make_grid(DomainKind.BALL, 129)
        u = random_monotone_field(grid, np.random.default_rng(seed))
        defect = pointwise_monotone_bound(u, r0)
        assert defect <= 1e-10 * np.max(u.values)


class TestWeightedH2:
    def test_zero(self, ball_grid):
        u = RadialField(grid=ball_grid, values=np.zeros(ball_grid.n))
        assert weighted_h2(u) == 0.0

    def test_quadratic_profile_on_ball(self):
        grid = make_grid(DomainKind.BALL, 1025)
        u = RadialField(grid=grid, values=1 - grid.r**2 / 6)
        # lap u = -1, so the norm is (4 pi int_0^1 sqrt(1+s^2) s^2 ds)^(1/2)
        oracle = np.sqrt(4 * np.pi * quad(lambda s: np.sqrt(1 + s * s) * s * s, 0, 1)[0])
        assert oracle == pytest.approx(2.29780, abs=1e-5)
        assert weighted_h2(u) == pytest.approx(oracle, rel=1e-6)

    def test_homogeneity(self, free_grid):
        u = RadialField(grid=free_grid, values=np.exp(-free_grid.r**2))
        double = RadialField(grid=free_grid, values=2 * u.values)
        assert weighted_h2(double) == pytest.approx(2 * weighted_h2(u), rel=1e-12)


class TestDecayTracker:
    def test_zero_trajectory_convention(self):
        traj = zero_run()
        rep = decay_tracker(traj, 2.0)
        assert rep.monotone_after_burnin
        assert rep.terminal_ratio == 0.0

    def test_decay_regime(self):
        traj = gaussian_run(alpha=0.4, t_end=0.3)
        rep = decay_tracker(traj, 2.0)
        assert rep.monotone_after_burnin
        assert rep.terminal_ratio < 1.0
        assert rep.q_in_regime

    def test_regime_flagging(self):
        traj = gaussian_run(alpha=0.6, t_end=0.02)
        assert not decay_tracker(traj, 2.0).q_in_regime
        assert decay_tracker(traj, 1.4).q_in_regime

    def test_snapshot_series_for_arbitrary_q(self):
        traj = gaussian_run(alpha=0.4, t_end=0.05, snapshot_stride=10)
        rep = decay_tracker(traj, 1.7)
        assert rep.monotone_after_burnin
        assert 0.0 < rep.terminal_ratio < 1.0


class TestTailGuard:
    def test_gaussian_passes(self, gaussian_free):
        assert tail_guard(gaussian_free)

    def test_constant_fails(self, free_grid):
        assert not tail_guard(RadialField(grid=free_grid, values=np.ones(free_grid.n)))

    def test_full_indicator_fails(self, free_grid):
        assert not tail_guard(
            RadialField(grid=free_grid, values=(free_grid.r <= free_grid.radius) * 1.0)
        )

    def test_ball_rejected(self, ball_grid):
        u = RadialField(grid=ball_grid, values=np.ones(ball_grid.n))
        with pytest.raises(ValueError, match="free-space"):
            tail_guard(u)


class TestAnnulusMass:
    def test_indicator_shell(self):
        grid = make_grid(DomainKind.FREE, 4097, 4.0)
        vals = np.where(grid.r < 1.0, 1.0, 0.0)
        vals[grid.r == 1.0] = 0.5
        u = RadialField(grid=grid, values=vals)
        expected = (7 / 8) * 4 * np.pi / 3
        assert annulus_mass(u, 0.5, 2.0) == pytest.approx(expected, rel=5e-6)

    def test_interior_endpoints(self, ball_grid):
        u = RadialField(grid=ball_grid, values=np.ones(ball_grid.n))
        got = annulus_mass(u, 0.25, 0.75)
        expected = 4 * np.pi / 3 * (0.75**3 - 0.25**3)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_empty_range(self, ball_grid):
        u = RadialField(grid=ball_grid, values=np.ones(ball_grid.n))
        assert annulus_mass(u, 0.9, 0.2) == 0.0


def test_trajectory_status_values():
    assert StepStatus.OK.value == "Ok"
    assert StepStatus.DIVERGED.value == "Diverged"
    assert StepStatus.TAIL_BREACH.value == "TailBreach"
