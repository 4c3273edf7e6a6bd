"""Effective fluxes, thermodynamic fields and identity residuals.

The effective transverse and longitudinal fluxes are

    F = mu * w_y / J + h        (so that F_y = rho0 * w_t)
    G = lam * u_y / J - P - H/2 (so that G_y = rho0 * u_t)

with ``H = |h|^2``.  Residuals of the evolution identities satisfied by
these quantities are evaluated on three equally spaced time levels with a
central time difference; they vanish for exact solutions and decay with
the discretization error for numerical ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .discretization import ddy
from .errors import InputError
from .model import PhysParams
from .state import State

INTERIOR_SKIP = 3

IDENTITIES = ("F", "h", "H", "G", "P")


@dataclass(eq=False)
class DerivedFields:
    """Fluxes and thermodynamic fields at one time level.

    ``s`` is a masked array: entries are masked where the entropy is
    undefined (zero pressure).
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    s: np.ma.MaskedArray


def derived_fields(state: State, params: PhysParams) -> DerivedFields:
    state.check_positive_J()
    grid = state.grid
    J = state.J
    uy = ddy(state.u, grid)
    wy = ddy(state.w, grid)
    H = state.h[0] ** 2 + state.h[1] ** 2
    F = params.mu * wy / J + state.h
    G = params.lam * uy / J - state.P - 0.5 * H
    rho = state.rho0 / J
    theta = state.P / (params.R * rho)
    positive = state.P > 0
    safe_P = np.where(positive, state.P, 1.0)
    s_vals = params.cv * np.log(safe_P / (params.A * rho**params.gamma))
    s = np.ma.masked_array(np.where(positive, s_vals, 0.0), mask=~positive)
    return DerivedFields(F=F, G=G, H=H, rho=rho, theta=theta, s=s)


@dataclass(frozen=True)
class IdentityResidual:
    which: str
    l2: float
    linf: float
    t: float
    field: np.ndarray


def _check_triple(traj: Sequence[State]):
    if len(traj) != 3:
        raise InputError(f"need exactly three time levels, got {len(traj)}")
    a, b, c = traj
    for s in (b, c):
        if s.grid != a.grid:
            raise InputError("time levels live on different grids")
    d1 = b.t - a.t
    d2 = c.t - b.t
    if not (d1 > 0 and d2 > 0):
        raise InputError("time levels must be strictly increasing")
    if abs(d1 - d2) > 1e-9 * max(d1, d2):
        raise InputError(f"time levels are not equally spaced: {d1!r} vs {d2!r}")


def residual_fields(traj: Sequence[State], params: PhysParams) -> dict:
    """Nodewise residuals of all five identities at the middle time level."""
    _check_triple(traj)
    s0, s1, s2 = traj
    grid = s1.grid
    lam, mu, gam = params.lam, params.mu, params.gamma
    d0 = derived_fields(s0, params)
    d1 = derived_fields(s1, params)
    d2 = derived_fields(s2, params)
    two_dt = s2.t - s0.t

    def dt_(x0, x2):
        return (x2 - x0) / two_dt

    J = s1.J
    rho0 = s1.rho0
    h = s1.h
    F, G, H, P = d1.F, d1.G, d1.H, s1.P
    a = ddy(s1.u, grid) / J
    b = ddy(s1.w, grid) / J

    F_t = dt_(d0.F, d2.F)
    G_t = dt_(d0.G, d2.G)
    P_t = dt_(s0.P, s2.P)
    h_t = dt_(s0.h, s2.h)
    # H = |h|^2 is differentiated through the chain rule so that the H and
    # h residuals stay algebraically tied at the discrete level.
    H_t = 2.0 * np.sum(h * h_t, axis=0)

    r = {}
    r["F"] = F_t - (mu / J) * ddy(ddy(F, grid) / rho0, grid) + a * F - b
    r["h"] = h_t - (F - h) / mu + (h / lam) * (G + P + 0.5 * H)
    r["H"] = (H_t + H * H / lam + 2.0 * H / mu + 2.0 * H * P / lam
              - (2.0 / mu) * np.sum(F * h, axis=0) + 2.0 * H * G / lam)
    r["G"] = (G_t - (lam / J) * ddy(ddy(G, grid) / rho0, grid) + gam * a * G
              - 0.5 * (2.0 - gam) * a * H + (gam - 1.0) * mu * np.sum(b * b, axis=0)
              + np.sum(h * b, axis=0))
    r["P"] = (P_t + (P + 0.5 * (2.0 - gam) * G + 0.25 * (2.0 - gam) * H) ** 2 / lam
              - gam * gam / (4.0 * lam) * (G + 0.5 * H) ** 2
              - (gam - 1.0) / mu * np.sum((F - h) ** 2, axis=0))
    return r


def identity_residual(which: str, traj: Sequence[State], params: PhysParams) -> IdentityResidual:
    """Residual of one identity at the middle of three equally spaced levels.

    Norms are taken over interior nodes, skipping ``INTERIOR_SKIP`` nodes at
    each end where the nested one-sided stencils lose accuracy.
    """
    if which not in IDENTITIES:
        raise InputError(f"unknown identity {which!r}; expected one of {IDENTITIES}")
    field = residual_fields(traj, params)[which]
    return summarize_residual(which, field, traj[1].t, traj[1].grid.dy)


def summarize_residual(which: str, field: np.ndarray, t: float, dy: float) -> IdentityResidual:
    k = INTERIOR_SKIP
    inner = field[..., k:-k]
    sq = (inner * inner).reshape(-1, inner.shape[-1]).sum(axis=0)
    l2 = math.sqrt(math.fsum(sq.tolist()) * dy)
    linf = float(np.max(np.abs(inner)))
    return IdentityResidual(which=which, l2=l2, linf=linf, t=t, field=field)
