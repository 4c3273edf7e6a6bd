"""Passage between Lagrangian mass coordinates and Eulerian position."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .discretization import ddy
from .errors import CrossingError, InputError, RangeError
from .fluxes import derived_fields
from .model import PhysParams
from .state import State


@dataclass(eq=False)
class FlowMap:
    """Particle positions ``eta[k]`` at ``times[k]``; ``defect[k]`` is
    ``max |d eta/dy - J|`` at that time."""

    times: np.ndarray
    eta: np.ndarray
    defect: np.ndarray


def flow_map(traj: Sequence[State]) -> FlowMap:
    """Integrate ``eta_t = u`` with the trapezoid rule along a trajectory.

    Starts from ``eta = y`` at the first state, which must be at t = 0 with
    ``J = 1``.  Raises ``CrossingError`` if particles cross.
    """
    if len(traj) < 1:
        raise InputError("empty trajectory")
    if traj[0].t != 0.0:
        raise InputError("trajectory must start at t = 0")
    grid = traj[0].grid
    ts = np.array([s.t for s in traj])
    if np.any(np.diff(ts) <= 0):
        raise InputError("trajectory times must be strictly increasing")
    eta = np.empty((len(traj), grid.N))
    eta[0] = grid.y
    for k in range(1, len(traj)):
        eta[k] = eta[k - 1] + 0.5 * (ts[k] - ts[k - 1]) * (traj[k - 1].u + traj[k].u)
        if np.any(np.diff(eta[k]) <= 0):
            i = int(np.argmax(np.diff(eta[k]) <= 0))
            raise CrossingError(f"flow map folds between nodes {i} and {i + 1} at t={ts[k]}")
    defect = np.array([np.max(np.abs(ddy(eta[k], grid) - s.J)) for k, s in enumerate(traj)])
    return FlowMap(times=ts, eta=eta, defect=defect)


EULER_COLUMNS = ("J", "u", "wx", "wy", "hx", "hy", "P", "Fx", "Fy", "G", "H", "rho", "theta")


@dataclass(eq=False)
class EulerianFields:
    """Lagrangian fields resampled at Eulerian points ``x``.

    ``y_of_x`` is the Lagrangian label of each point; ``columns`` holds the
    interpolated fields named as in ``EULER_COLUMNS`` and ``s`` is a masked
    array.
    """

    t: float
    x: np.ndarray
    y_of_x: np.ndarray
    columns: dict
    s: np.ma.MaskedArray

    @property
    def rho(self):
        return self.columns["rho"]

    @property
    def u(self):
        return self.columns["u"]


def to_eulerian(state: State, eta: np.ndarray, x: np.ndarray, params: PhysParams) -> EulerianFields:
    """Resample a state at positions ``x`` by linear interpolation.

    ``eta`` gives the current position of every node and must be strictly
    increasing; ``x`` must lie inside ``[eta[0], eta[-1]]``.
    """
    eta = np.asarray(eta, dtype=float)
    x = np.asarray(x, dtype=float)
    if eta.shape != (state.grid.N,):
        raise InputError("eta must have one entry per node")
    if np.any(np.diff(eta) <= 0):
        raise CrossingError("positions must be strictly increasing")
    if np.any(x < eta[0]) or np.any(x > eta[-1]):
        raise RangeError(f"query points must lie in [{eta[0]}, {eta[-1]}]")
    y_of_x = np.interp(x, eta, state.grid.y)
    d = derived_fields(state, params)
    src = {"J": state.J, "u": state.u, "wx": state.w[0], "wy": state.w[1], "hx": state.h[0],
           "hy": state.h[1], "P": state.P, "Fx": d.F[0], "Fy": d.F[1], "G": d.G, "H": d.H,
           "rho": d.rho, "theta": d.theta}
    cols = {k: np.interp(y_of_x, state.grid.y, v) for k, v in src.items()}
    s_vals = np.interp(y_of_x, state.grid.y, d.s.filled(np.nan))
    s = np.ma.masked_invalid(s_vals)
    return EulerianFields(t=state.t, x=x, y_of_x=y_of_x, columns=cols, s=s)
