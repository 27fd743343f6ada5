"""Radial mesh, 3D quadrature, and the sampled-field container.

Everything downstream works on radial functions u(|x|) in three dimensions,
sampled on a uniform mesh over [0, R].  Volume integrals reduce to

    int_{R^3} f(|x|) dx = 4 pi int_0^R f(rho) rho^2 drho,

which we approximate with trapezoid weights in rho composed with 4 pi rho^2.
The raw trapezoid weights overshoot the exact ball volume by 4 pi R h^2 / 6,
so they are normalized once at construction; this makes the quadrature exact
for constant fields (sum of weights equals 4 pi R^3 / 3 to roundoff) while
keeping the O(h^2) behavior for everything else.

Two domains are supported: a truncated copy of R^3 with user-chosen radius R
(fields are expected to vanish near R, enforced elsewhere by the tail guard)
and the closed unit ball used for the Dirichlet blow-up experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or mismatched grid/field operands."""


class DomainKind(Enum):
    """Domain of the radial problem."""

    FREE = "free"  # truncated whole space, radius R set by the user
    BALL = "ball"  # closed unit ball, R = 1, Dirichlet potential

MIN_NODES = 8


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial mesh with 3D quadrature weights.

    Attributes:
        kind: domain (truncated free space or unit ball).
        n: number of nodes, r[0] = 0 and r[n-1] = radius.
        radius: outer radius R (1.0 for the ball).
        r: node coordinates, strictly increasing.
        w: nonnegative quadrature weights; w @ f approximates the volume
           integral of f over the 3D domain and is exact for constants.
        h: mesh spacing R / (n - 1).
    """

    kind: DomainKind
    n: int
    radius: float
    r: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    h: float

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return (self.kind, self.n, self.radius) == (other.kind, other.n, other.radius)

    def __hash__(self) -> int:
        return hash((self.kind, self.n, self.radius))

    @property
    def volume(self) -> float:
        """Exact volume of the domain, 4 pi R^3 / 3."""
        return 4.0 * np.pi * self.radius**3 / 3.0


@dataclass(frozen=True)
class RadialField:
    """Radial function sampled on a grid.

    Values must be finite unless the field is explicitly flagged as diverged
    (used when a blow-up run hands back its terminal state).
    """

    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    diverged: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.n,):
            raise GridError(
                f"field has {values.shape} values for a grid of {self.grid.n} nodes"
            )
        if not self.diverged and not np.all(np.isfinite(values)):
            raise GridError("field contains NaN/Inf and is not flagged as diverged")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def make_grid(kind: DomainKind, n: int, radius: float | None = None) -> RadialGrid:
    """Build a uniform radial grid with normalized trapezoid weights.

    The ball domain forces radius 1; passing any other value is an error.
    """
    if n < MIN_NODES:
        raise GridError(f"n too small: need at least {MIN_NODES} nodes, got {n}")
    if kind is DomainKind.BALL:
        if radius is not None and radius != 1.0:
            raise GridError("ball domain forces radius 1")
        radius = 1.0
    else:
        if radius is None or radius <= 0:
            raise GridError(f"radius must be positive, got {radius}")
    radius = float(radius)
    h = radius / (n - 1)
    r = np.linspace(0.0, radius, n)
    coeff = np.full(n, h)
    coeff[0] = coeff[-1] = h / 2.0
    w = 4.0 * np.pi * coeff * r * r
    # normalize so the constant field integrates to the exact ball volume
    vol = 4.0 * np.pi * radius**3 / 3.0
    w *= vol / w.sum()
    r.setflags(write=False)
    w.setflags(write=False)
    return RadialGrid(kind=kind, n=n, radius=radius, r=r, w=w, h=h)


def integrate(grid: RadialGrid, f: RadialField) -> float:
    """Volume integral of f over the 3D domain, sum(w_i f_i)."""
    if f.grid != grid:
        raise GridError("field lives on a different grid")
    return float(grid.w @ f.values)


def lq_norm(f: RadialField, q: float) -> float:
    """L^q norm of f over the 3D domain, (sum w_i |f_i|^q)^(1/q)."""
    if not np.isfinite(q) or q < 1.0:
        raise ValueError(f"lq_norm requires finite q >= 1, got {q}")
    return float((f.grid.w @ np.abs(f.values) ** q) ** (1.0 / q))


def panel_moments(r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Exact rho^2 and rho moments of the linear hat basis on each mesh panel.

    For a panel [a, b] and a function sampled as (f_a, f_b), the integrals of
    the linear interpolant against rho^2 and rho are

        int_a^b I[f] rho^2 drho = f_a m2a + f_b m2b,
        int_a^b I[f] rho   drho = f_a m1a + f_b m1b.

    Returns the four coefficient arrays, one entry per panel.  Computing the
    moments exactly (rather than applying trapezoid to f rho^2) keeps O(h^2)
    accuracy while avoiding the accidental exact cancellation that would make
    the inverse-Laplacian roundtrip residual pure roundoff.
    """
    a, b = r[:-1], r[1:]
    h = b - a
    m2 = (b**3 - a**3) / 3.0
    m2b = ((b**4 - a**4) / 4.0 - a * (b**3 - a**3) / 3.0) / h
    m2a = m2 - m2b
    m1 = (b**2 - a**2) / 2.0
    m1b = ((b**3 - a**3) / 3.0 - a * (b**2 - a**2) / 2.0) / h
    m1a = m1 - m1b
    return m2a, m2b, m1a, m1b
