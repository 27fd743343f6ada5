import numpy as np
import pytest
from scipy.integrate import quad

from nldlab.grid import DomainKind, GridError, RadialField, make_grid
from nldlab.operators import (
    inverse_laplacian,
    inverse_laplacian_ball,
    inverse_laplacian_free,
    laplacian_radial,
    potential_roundtrip_residual,
)
from conftest import random_monotone_field


def indicator_field(grid, edge=1.0):
    vals = np.where(grid.r < edge, 1.0, 0.0)
    vals[grid.r == edge] = 0.5  # mean value at the jump keeps O(h^2)
    return RadialField(grid=grid, values=vals)


class TestInverseLaplacianFree:
    def test_unit_ball_indicator(self):
        grid = make_grid(DomainKind.FREE, 1025, 4.0)
        pot = inverse_laplacian_free(indicator_field(grid))
        r = grid.r
        assert pot.phi[0] == pytest.approx(0.5, abs=1e-4)
        assert pot.phi[np.searchsorted(r, 1.0)] == pytest.approx(1 / 3, abs=1e-4)
        assert pot.phi[np.searchsorted(r, 2.0)] == pytest.approx(1 / 6, abs=1e-4)

    def test_zero_source(self, free_grid):
        zero = RadialField(grid=free_grid, values=np.zeros(free_grid.n))
        pot = inverse_laplacian_free(zero)
        assert np.all(pot.phi == 0.0)
        assert np.all(pot.dphi_dr == 0.0)
        assert pot.mass == 0.0

    def test_gaussian_center_and_far_field(self):
        grid = make_grid(DomainKind.FREE, 1025, 8.0)
        u = RadialField(grid=grid, values=np.exp(-grid.r**2))
        pot = inverse_laplacian_free(u)
        # oracle: phi(0) = int_0^inf exp(-s^2) s ds = 1/2
        center = quad(lambda s: np.exp(-s * s) * s, 0, np.inf)[0]
        assert pot.phi[0] == pytest.approx(center, abs=1e-4)
        sel = grid.r >= 6.0
        target = np.sqrt(np.pi) / 4.0
        assert np.max(np.abs(grid.r[sel] * pot.phi[sel] - target)) < 1e-4

    def test_wrong_domain(self, ball_grid):
        u = RadialField(grid=ball_grid, values=np.ones(ball_grid.n))
        with pytest.raises(GridError, match="free-space"):
            inverse_laplacian_free(u)

    def test_linearity(self, free_grid):
        rng = np.random.default_rng(3)
        u = RadialField(grid=free_grid, values=rng.uniform(0, 1, free_grid.n))
        v = RadialField(grid=free_grid, values=rng.uniform(0, 1, free_grid.n))
        combo = RadialField(grid=free_grid, values=2.0 * u.values + 3.0 * v.values)
        lhs = inverse_laplacian_free(combo).phi
        rhs = 2.0 * inverse_laplacian_free(u).phi + 3.0 * inverse_laplacian_free(v).phi
        assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-15)

    def test_monotone_potential(self, free_grid):
        rng = np.random.default_rng(11)
        for _ in range(10):
            u = random_monotone_field(free_grid, rng)
            pot = inverse_laplacian_free(u)
            assert np.all(np.diff(pot.phi) <= 1e-12 * pot.phi.max())
            assert np.all(pot.phi >= 0)
            assert pot.dphi_dr[0] == 0.0
            assert np.all(pot.dphi_dr <= 0)

    def test_far_field_law_compact_support(self, free_grid):
        rng = np.random.default_rng(5)
        R = free_grid.radius
        for _ in range(5):
            u = random_monotone_field(free_grid, rng, support=R / 2)
            pot = inverse_laplacian_free(u)
            sel = free_grid.r >= 0.75 * R
            defect = np.abs(free_grid.r[sel] * pot.phi[sel] - pot.mass / (4 * np.pi))
            assert np.max(defect) <= 1e-10 * pot.mass

    def test_annulus_lower_bound(self, free_grid):
        # phi(r) >= A0 / (4 pi <r>) * min(1, r0/2) for monotone data
        from nldlab.diagnostics import annulus_mass, japanese_bracket

        rng = np.random.default_rng(17)
        r0 = 0.5
        for _ in range(10):
            u = random_monotone_field(free_grid, rng, support=free_grid.radius / 2)
            a0 = annulus_mass(u, r0, 1.0 / r0)
            if a0 <= 0:
                continue
            pot = inverse_laplacian_free(u)
            floor = a0 / (4 * np.pi * japanese_bracket(free_grid.r)) * min(1.0, r0 / 2)
            assert np.all(pot.phi >= floor - 1e-12 * pot.phi.max())


class TestInverseLaplacianBall:
    def test_constant_source(self):
        grid = make_grid(DomainKind.BALL, 2049)
        pot = inverse_laplacian_ball(RadialField(grid=grid, values=np.ones(grid.n)))
        assert np.max(np.abs(pot.phi - (1 - grid.r**2) / 6)) < 1e-6
        assert pot.phi[0] == pytest.approx(1 / 6, abs=1e-12)
        assert pot.phi[-1] == 0.0

    def test_zero_source(self, ball_grid):
        pot = inverse_laplacian_ball(
            RadialField(grid=ball_grid, values=np.zeros(ball_grid.n))
        )
        assert np.all(pot.phi == 0.0)

    def test_roundtrip_parabolic_source(self):
        grid = make_grid(DomainKind.BALL, 513)
        u = RadialField(grid=grid, values=1 - grid.r**2)
        assert potential_roundtrip_residual(u) < 1e-4

    def test_wrong_domain(self, free_grid):
        u = RadialField(grid=free_grid, values=np.ones(free_grid.n))
        with pytest.raises(GridError, match="ball"):
            inverse_laplacian_ball(u)

    def test_dirichlet_potential_nonnegative(self, ball_grid):
        rng = np.random.default_rng(23)
        for _ in range(10):
            u = random_monotone_field(ball_grid, rng)
            pot = inverse_laplacian_ball(u)
            assert np.all(pot.phi >= 0)
            assert np.all(np.diff(pot.phi) <= 1e-12 * max(pot.phi.max(), 1e-300))


class TestLaplacianRadial:
    def test_gaussian(self):
        grid = make_grid(DomainKind.FREE, 1025, 6.0)
        u = RadialField(grid=grid, values=np.exp(-grid.r**2))
        lap = laplacian_radial(u).values
        exact = (4 * grid.r**2 - 6) * np.exp(-grid.r**2)
        assert lap[0] == pytest.approx(-6.0, abs=1e-3)
        assert np.max(np.abs(lap - exact)[1:-1]) < 1e-3

    def test_constant_annihilated(self, free_grid):
        u = RadialField(grid=free_grid, values=np.full(free_grid.n, 3.7))
        assert np.max(np.abs(laplacian_radial(u).values)) < 1e-10

    def test_quadratic_profile(self, free_grid):
        u = RadialField(grid=free_grid, values=1 - free_grid.r**2 / 6)
        lap = laplacian_radial(u).values
        assert np.max(np.abs(lap + 1.0)) < 1e-9


class TestRoundtrip:
    def test_gaussian_magnitude_and_order(self):
        res = {}
        for n in (1025, 2049):
            grid = make_grid(DomainKind.FREE, n, 8.0)
            u = RadialField(grid=grid, values=np.exp(-grid.r**2))
            res[n] = potential_roundtrip_residual(u)
        assert res[1025] <= 1e-3
        assert 4 / 1.5 <= res[1025] / res[2049] <= 4 * 1.5

    def test_zero(self, free_grid):
        zero = RadialField(grid=free_grid, values=np.zeros(free_grid.n))
        assert potential_roundtrip_residual(zero) == 0.0


def test_dispatch_matches_domain(ball_grid, free_grid):
    ub = RadialField(grid=ball_grid, values=np.ones(ball_grid.n))
    uf = RadialField(grid=free_grid, values=np.ones(free_grid.n))
    assert inverse_laplacian(ub).phi[-1] == 0.0
    assert inverse_laplacian(uf).phi[-1] > 0.0
