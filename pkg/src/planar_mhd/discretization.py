"""Uniform grid and the finite-difference / quadrature operators on it.

All operators act along the last axis so multi-component fields of shape
``(C, N)`` are handled the same way as scalars of shape ``(N,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, ShapeError, StateCorruptionError


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node-centred grid on ``[-L, L]`` with an odd number of nodes.

    Nodes are placed symmetrically: ``y[k] = -y[N-1-k]`` holds bitwise,
    which keeps integrals of odd functions exactly zero.
    """

    L: float
    N: int
    dy: float = field(init=False)
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (isinstance(self.L, (int, float)) and math.isfinite(self.L) and self.L > 0):
            raise ParameterError(f"L must be positive and finite, got {self.L!r}")
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)):
            raise ParameterError(f"N must be an integer, got {self.N!r}")
        if self.N < 5 or self.N % 2 == 0:
            raise ParameterError(f"N must be odd and >= 5, got {self.N}")
        L = float(self.L)
        N = int(self.N)
        dy = 2.0 * L / (N - 1)
        half = (N - 1) // 2
        right = dy * np.arange(1, half + 1, dtype=float)
        right[-1] = L
        y = np.concatenate([-right[::-1], [0.0], right])
        y.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "dy", dy)
        object.__setattr__(self, "y", y)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.L == other.L and self.N == other.N

    def __hash__(self):
        return hash((self.L, self.N))

    def refined(self) -> "Grid":
        """Same domain, half the spacing."""
        return Grid(self.L, 2 * self.N - 1)

    def doubled(self) -> "Grid":
        """Twice the half-width at the same spacing; contains every node of self."""
        return Grid(2.0 * self.L, 2 * self.N - 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.N, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w


def _check_last_axis(f: np.ndarray, grid: Grid, name: str = "field") -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim == 0 or f.shape[-1] != grid.N:
        raise ShapeError(f"{name} has shape {f.shape}, expected last axis {grid.N}")
    return f


def ddy(f, grid: Grid) -> np.ndarray:
    """First derivative: central in the interior, second-order one-sided at the ends."""
    f = _check_last_axis(f, grid)
    out = np.empty_like(f)
    h2 = 2.0 * grid.dy
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / h2
    # Written in differences so constants give exactly zero.
    out[..., 0] = (4.0 * (f[..., 1] - f[..., 0]) - (f[..., 2] - f[..., 0])) / h2
    out[..., -1] = (4.0 * (f[..., -1] - f[..., -2]) - (f[..., -1] - f[..., -3])) / h2
    return out


def face_flux(phi, J, coeff: float, grid: Grid) -> np.ndarray:
    """``coeff * D+ phi / J_face`` at the N-1 faces, with ``J_face`` the arithmetic mean."""
    phi = _check_last_axis(phi, grid, "phi")
    J = _check_last_axis(J, grid, "J")
    if J.ndim != 1:
        raise ShapeError("J must be one-dimensional")
    if np.any(J <= 0):
        raise StateCorruptionError("J must be strictly positive")
    J_face = 0.5 * (J[1:] + J[:-1])
    return coeff * (phi[..., 1:] - phi[..., :-1]) / grid.dy / J_face


def viscous_div(phi, J, coeff: float, grid: Grid) -> np.ndarray:
    """Conservative ``(coeff * phi_y / J)_y`` at interior nodes.

    Boundary entries are zero; the solver fills them according to its
    boundary policy.
    """
    flux = face_flux(phi, J, coeff, grid)
    out = np.zeros(np.shape(phi), dtype=float)
    out[..., 1:-1] = (flux[..., 1:] - flux[..., :-1]) / grid.dy
    return out


def integrate(f, grid: Grid):
    """Composite trapezoid rule with exactly rounded summation.

    The sum is formed with ``math.fsum`` which makes the result independent
    of summation order and therefore reproducible bit for bit.  Leading axes
    are integrated separately.
    """
    f = _check_last_axis(f, grid)
    if f.ndim == 1:
        return _integrate_1d(f, grid.dy)
    flat = f.reshape(-1, grid.N)
    vals = np.array([_integrate_1d(row, grid.dy) for row in flat])
    return vals.reshape(f.shape[:-1])


def _integrate_1d(f: np.ndarray, dy: float) -> float:
    terms = f.copy()
    terms[0] *= 0.5
    terms[-1] *= 0.5
    return math.fsum(terms.tolist()) * dy


def weighted_l2(f, weight, grid: Grid) -> float:
    """``sqrt( integral weight * |f|^2 )`` with |f| the Euclidean norm over leading axes."""
    f = _check_last_axis(f, grid)
    weight = _check_last_axis(weight, grid, "weight")
    if np.any(weight < 0):
        raise DomainError("weight must be non-negative")
    sq = f * f
    if sq.ndim > 1:
        sq = sq.reshape(-1, grid.N).sum(axis=0)
    return math.sqrt(integrate(weight * sq, grid))
