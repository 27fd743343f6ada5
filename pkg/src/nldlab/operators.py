"""Nonlocal and local operators on radial fields.

The inverse Laplacian of a radial source reduces to one-dimensional
integrals.  On (truncated) free space the Newton formula gives

    phi(r) = (1/r) int_0^r u(s) s^2 ds + int_r^R u(s) s ds,

exact whenever u vanishes beyond R.  On the unit ball with phi(1) = 0 the
Green's function solution follows from v = r phi, v'' = -r u, v(0) = v(1) = 0:

    phi(r) = int_0^1 (1-s) s u(s) ds - (1/r) int_0^r (r-s) s u(s) ds.

Both are evaluated with O(N) prefix sums of per-panel integrals of the
piecewise-linear interpolant (exact rho and rho^2 moments, extended-precision
accumulators).  In either domain the radial derivative is Gauss's law,

    phi'(r) = -(1/r^2) int_0^r u(s) s^2 ds,

so a nonnegative source always yields a nonnegative, radially non-increasing
potential, discretely as well: the panel moments satisfy the same pairwise
inequalities as the continuum integrals.

The radial Laplacian lap u = u'' + (2/r) u' uses the standard second-order
stencil, the symmetry limit 6 (u_1 - u_0) / h^2 at the origin, and one-sided
second-order differences at r = R.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DomainKind, GridError, RadialField, RadialGrid, panel_moments


@dataclass(frozen=True)
class Potential:
    """Inverse-Laplacian output: phi = (-lap)^-1 u and its radial derivative.

    mass is the total integral of the source as seen by the potential's own
    prefix sums (4 pi int_0^R u s^2 ds); the far-field law r phi -> mass/4pi
    holds exactly against this value for sources supported inside R.
    """

    grid: RadialGrid
    phi: np.ndarray = field(repr=False)
    dphi_dr: np.ndarray = field(repr=False)
    mass: float


def _prefix_integrals(u: RadialField) -> tuple[np.ndarray, np.ndarray]:
    """Running integrals P(r_i) = int_0^{r_i} u s^2 ds, T(r_i) = int_0^{r_i} u s ds."""
    grid = u.grid
    m2a, m2b, m1a, m1b = panel_moments(grid.r)
    v = u.values
    inc2 = v[:-1] * m2a + v[1:] * m2b
    inc1 = v[:-1] * m1a + v[1:] * m1b
    P = np.zeros(grid.n, dtype=np.longdouble)
    T = np.zeros(grid.n, dtype=np.longdouble)
    P[1:] = np.cumsum(inc2.astype(np.longdouble))
    T[1:] = np.cumsum(inc1.astype(np.longdouble))
    return P, T


def inverse_laplacian_free(u: RadialField) -> Potential:
    """Newton-formula potential on truncated free space."""
    grid = u.grid
    if grid.kind is not DomainKind.FREE:
        raise GridError("inverse_laplacian_free requires a free-space grid")
    P, T = _prefix_integrals(u)
    r = grid.r
    suffix = T[-1] - T
    phi = np.empty(grid.n)
    phi[0] = float(suffix[0])
    phi[1:] = (P[1:] / r[1:].astype(np.longdouble) + suffix[1:]).astype(np.float64)
    dphi = np.zeros(grid.n)
    dphi[1:] = (-P[1:] / (r[1:] ** 2).astype(np.longdouble)).astype(np.float64)
    return Potential(grid=grid, phi=phi, dphi_dr=dphi, mass=float(4.0 * np.pi * P[-1]))


def inverse_laplacian_ball(u: RadialField) -> Potential:
    """Dirichlet potential on the unit ball, phi(1) = 0 exactly."""
    grid = u.grid
    if grid.kind is not DomainKind.BALL:
        raise GridError("inverse_laplacian_ball requires a ball grid")
    P, T = _prefix_integrals(u)
    r = grid.r
    c = T[-1] - P[-1]
    phi = np.empty(grid.n)
    phi[0] = float(c)
    phi[1:] = (c - T[1:] + P[1:] / r[1:].astype(np.longdouble)).astype(np.float64)
    phi[-1] = 0.0  # exact by construction, kill the last roundoff crumb
    dphi = np.zeros(grid.n)
    dphi[1:] = (-P[1:] / (r[1:] ** 2).astype(np.longdouble)).astype(np.float64)
    return Potential(grid=grid, phi=phi, dphi_dr=dphi, mass=float(4.0 * np.pi * P[-1]))


def inverse_laplacian(u: RadialField) -> Potential:
    """Domain-dispatching inverse Laplacian."""
    if u.grid.kind is DomainKind.BALL:
        return inverse_laplacian_ball(u)
    return inverse_laplacian_free(u)


def laplacian_radial(u: RadialField) -> RadialField:
    """Discrete radial Laplacian u'' + (2/r) u' as a field.

    Origin: lap u(0) = 6 (u_1 - u_0) / h^2 (symmetry limit with u'(0) = 0).
    Outer node: one-sided second-order stencils; on the ball the value is
    unused by the Dirichlet solve but still reported.
    """
    grid = u.grid
    if grid.n < 4:
        raise GridError("laplacian_radial needs at least 4 nodes")
    v = u.values
    r, h = grid.r, grid.h
    out = np.empty(grid.n)
    out[0] = 6.0 * (v[1] - v[0]) / h**2
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2 + (v[2:] - v[:-2]) / (
        r[1:-1] * h
    )
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2 + (
        2.0 / r[-1]
    ) * (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return RadialField(grid=grid, values=out, diverged=u.diverged)


def potential_roundtrip_residual(u: RadialField) -> float:
    """Max interior defect of lap_h((-lap)^-1 u) + u.

    Validates the quadrature-based potential against the finite-difference
    Laplacian; O(h^2) for smooth sources.
    """
    pot = inverse_laplacian(u)
    phi_field = RadialField(grid=u.grid, values=pot.phi)
    lap = laplacian_radial(phi_field).values
    return float(np.max(np.abs(lap[1:-1] + u.values[1:-1])))
