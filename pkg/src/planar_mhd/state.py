"""Lagrangian state container."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import Grid
from .errors import ShapeError, StateCorruptionError


@dataclass(eq=False)
class State:
    """Unknowns at one time level on a fixed Lagrangian grid.

    ``w`` and ``h`` are transverse vectors stored as ``(2, N)`` arrays.
    ``rho0`` is the reference density, carried along because every
    diagnostic needs it.
    """

    t: float
    J: np.ndarray
    u: np.ndarray
    w: np.ndarray
    h: np.ndarray
    P: np.ndarray
    rho0: np.ndarray
    grid: Grid

    def __post_init__(self):
        N = self.grid.N
        for name in ("J", "u", "P", "rho0"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (N,):
                raise ShapeError(f"{name} has shape {arr.shape}, expected ({N},)")
            setattr(self, name, arr)
        for name in ("w", "h"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (2, N):
                raise ShapeError(f"{name} has shape {arr.shape}, expected (2, {N})")
            setattr(self, name, arr)
        self.t = float(self.t)

    def copy(self) -> "State":
        return State(self.t, self.J.copy(), self.u.copy(), self.w.copy(), self.h.copy(),
                     self.P.copy(), self.rho0, self.grid)

    def check_positive_J(self) -> None:
        if not np.all(self.J > 0):
            bad = int(np.argmax(~(self.J > 0)))
            raise StateCorruptionError(f"J <= 0 at node {bad} (t={self.t})")
