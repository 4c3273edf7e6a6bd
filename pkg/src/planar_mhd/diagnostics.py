"""Conserved quantities, a-priori bounds and weighted norms along a run.

``Monitor`` turns states into ``DiagnosticsRecord`` rows; the standalone
functions are usable on any state or trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .discretization import Grid, ddy, integrate, weighted_l2
from .errors import DomainError, InputError, ParameterError
from .fluxes import DerivedFields, derived_fields
from .model import PhysParams
from .state import State

DEFAULT_DELTA_FACTORS = (1e-2, 1e-4, 1e-6)
DEFAULT_FLOOR_FRACTION = 0.9
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Conserved:
    energy: float
    mom_u: float
    mom_w: Tuple[float, float]


def energy(state: State, params: PhysParams) -> float:
    """Total energy: kinetic, magnetic and internal ``J P / (gamma - 1)``."""
    g = state.grid
    dens = (0.5 * state.rho0 * (state.u**2 + np.sum(state.w**2, axis=0))
            + 0.5 * state.J * np.sum(state.h**2, axis=0)
            + state.J * state.P / (params.gamma - 1.0))
    return integrate(dens, g)


def conserved(state: State, params: PhysParams) -> Conserved:
    g = state.grid
    mom_w = integrate(state.rho0 * state.w, g)
    return Conserved(energy=energy(state, params), mom_u=integrate(state.rho0 * state.u, g),
                     mom_w=(float(mom_w[0]), float(mom_w[1])))


def j_lower_bound(E0: float, rho0_l1: float, lam: float) -> float:
    """A-priori lower bound ``exp(-(2 sqrt 2 / lam) sqrt(E0) |rho0|_1)`` on J."""
    if E0 < 0 or rho0_l1 < 0:
        raise DomainError("energy and density mass must be non-negative")
    return math.exp(-(2.0 * math.sqrt(2.0) / lam) * math.sqrt(E0) * rho0_l1)


@dataclass(frozen=True)
class JBoundCheck:
    Jmin: float
    J_bound: float
    ok: bool


def j_bound_check(state: State, E0: float, rho0_l1: float, params: PhysParams,
                  rtol: float = 1e-6) -> JBoundCheck:
    bound = j_lower_bound(E0, rho0_l1, params.lam)
    Jmin = float(np.min(state.J))
    return JBoundCheck(Jmin=Jmin, J_bound=bound, ok=Jmin >= bound * (1.0 - rtol))


def jgp(state: State, params: PhysParams) -> np.ndarray:
    return state.J**params.gamma * state.P


def jgp_monotonicity(prev: State, cur: State, params: PhysParams) -> float:
    """Smallest nodewise increment of ``J^gamma P`` between two states."""
    return float(np.min(jgp(cur, params) - jgp(prev, params)))


def rho_delta_weight(state: State, alpha: float, delta: float) -> np.ndarray:
    return state.rho0 * state.J / (state.rho0 + delta) ** (alpha + 1.0)


def weighted_norm_suite(state: State, derived: DerivedFields, alpha: float,
                        deltas: Sequence[float]) -> Dict[str, float]:
    """Raw weighted norms and their delta-regularised integrals.

    Raw norms are ``|rho0^(-alpha/2) X|_2`` for X in (F, G, H, h).  For each
    delta in ``deltas`` (in the given order) the keys ``wF_d{k}`` etc. hold
    ``integral rho0 J / (rho0 + delta)^(alpha+1) |X|^2``.
    """
    if any(not (d > 0) for d in deltas):
        raise ParameterError("regularisation parameters must be positive")
    g = state.grid
    weight = state.rho0 ** (-alpha)
    out = {
        "wF": weighted_l2(derived.F, weight, g),
        "wG": weighted_l2(derived.G, weight, g),
        "wH": weighted_l2(derived.H, weight, g),
        "wh": weighted_l2(state.h, weight, g),
    }
    F2 = np.sum(derived.F**2, axis=0)
    G2 = derived.G**2
    H2 = derived.H**2
    for k, d in enumerate(deltas, start=1):
        wd = rho_delta_weight(state, alpha, d)
        out[f"wF_d{k}"] = integrate(wd * F2, g)
        out[f"wG_d{k}"] = integrate(wd * G2, g)
        out[f"wH_d{k}"] = integrate(wd * H2, g)
    return out


def h1_norms(state: State, derived: DerivedFields, rho_floor: float) -> Dict[str, float]:
    """H1 norms of u, w and of theta restricted to ``rho0 >= rho_floor``.

    The temperature derivative is taken on the full grid and the integrand
    is then zeroed below the floor, so no artificial jump is created.
    """
    g = state.grid
    one = np.ones(g.N)
    mask = (state.rho0 >= rho_floor).astype(float)
    theta = derived.theta
    return {
        "h1_u": math.hypot(weighted_l2(state.u, one, g), weighted_l2(ddy(state.u, g), one, g)),
        "h1_w": math.hypot(weighted_l2(state.w, one, g), weighted_l2(ddy(state.w, g), one, g)),
        "h1_theta": math.hypot(weighted_l2(theta, mask, g), weighted_l2(ddy(theta, g), mask, g)),
    }


def entropy_extrema(derived: DerivedFields, rho0: np.ndarray, rho_floor: float):
    """Sup and inf of the entropy over nodes with ``rho0 >= rho_floor``.

    Nodes where the entropy is undefined are ignored; returns ``(nan, nan)``
    if no node qualifies.
    """
    s = np.ma.masked_array(derived.s, mask=np.ma.getmaskarray(derived.s) | (rho0 < rho_floor))
    if s.count() == 0:
        return float("nan"), float("nan")
    return float(s.max()), float(s.min())


def gn_ratio(v: np.ndarray, grid: Grid) -> float:
    """``|v|_inf^2 / (|v|_2 |v_y|_2)``; bounded by a constant in one dimension."""
    one = np.ones(grid.N)
    den = weighted_l2(v, one, grid) * weighted_l2(ddy(v, grid), one, grid)
    if den == 0:
        return 0.0
    return float(np.max(np.abs(v)) ** 2 / den)


def j_consistency(traj: Sequence[State], params: PhysParams) -> float:
    """``max |ln(J/J0) - (1/lam) int_0^t (G + P + H/2)|`` over a trajectory.

    The time integral uses the trapezoid rule on the (equally spaced) states.
    """
    if len(traj) < 2:
        raise InputError("need at least two states")
    ts = np.array([s.t for s in traj])
    steps = np.diff(ts)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.max():
        raise InputError("states must be equally spaced in time")
    worst = 0.0
    integral = np.zeros(traj[0].grid.N)
    prev = None
    for k, s in enumerate(traj):
        d = derived_fields(s, params)
        x = (d.G + s.P + 0.5 * d.H) / params.lam
        if prev is not None:
            integral += 0.5 * steps[k - 1] * (prev + x)
        prev = x
        worst = max(worst, float(np.max(np.abs(np.log(s.J / traj[0].J) - integral))))
    return worst


def difference_functional(a: State, b: State) -> float:
    """Squared distance between two runs at the same time and on the same grid."""
    if a.grid != b.grid:
        raise InputError("states live on different grids")
    if not np.array_equal(a.rho0, b.rho0):
        raise InputError("states use different reference densities")
    if abs(a.t - b.t) > 1e-12 * max(1.0, abs(a.t)):
        raise InputError(f"states are at different times: {a.t!r} vs {b.t!r}")
    g = a.grid
    dens = ((a.J - b.J) ** 2 + a.rho0 * (a.u - b.u) ** 2
            + a.rho0 * np.sum((a.w - b.w) ** 2, axis=0)
            + np.sum((a.h - b.h) ** 2, axis=0) + (a.P - b.P) ** 2)
    return integrate(dens, g)


def default_rho_floor(rho0: np.ndarray, grid: Grid,
                      fraction: float = DEFAULT_FLOOR_FRACTION) -> float:
    """Smallest reference density over ``|y| <= fraction * L``."""
    inside = np.abs(grid.y) <= fraction * grid.L * (1.0 + 1e-12)
    return float(np.min(rho0[inside]))


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Diagnostic settings; ``deltas`` are absolute regularisation values."""

    alpha: float
    deltas: Tuple[float, ...]
    rho_floor: float

    @classmethod
    def default(cls, rho0: np.ndarray, grid: Grid, params: PhysParams,
                alpha: Optional[float] = None,
                delta_factors: Sequence[float] = DEFAULT_DELTA_FACTORS,
                floor_fraction: float = DEFAULT_FLOOR_FRACTION) -> "DiagnosticsConfig":
        top = float(np.max(rho0))
        return cls(alpha=params.gamma if alpha is None else float(alpha),
                   deltas=tuple(f * top for f in delta_factors),
                   rho_floor=default_rho_floor(rho0, grid, floor_fraction))


BASE_COLUMNS = ("t", "energy", "E0", "mom_u", "mom_wx", "mom_wy", "Jmin", "Jmax", "J_bound",
                "jgp_min_inc", "s_sup", "s_inf", "wF", "wG", "wH", "wh")
TAIL_COLUMNS = ("h1_u", "h1_w", "h1_theta", "j_consistency", "gn_ratio")


def csv_columns(n_deltas: int) -> List[str]:
    cols = list(BASE_COLUMNS)
    for k in range(1, n_deltas + 1):
        cols += [f"wF_d{k}", f"wG_d{k}", f"wH_d{k}"]
    return cols + list(TAIL_COLUMNS)


@dataclass
class DiagnosticsRecord:
    """One row of the diagnostics table; ``values`` is keyed by column name."""

    values: Dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def t(self) -> float:
        return self.values["t"]

    def row(self, columns: Sequence[str]) -> List[float]:
        return [self.values[c] for c in columns]


class JgpTracker:
    """Per-step check that ``J^gamma P`` does not decrease beyond truncation level.

    Each step's nodewise increment is compared against ten times the local
    second time difference (a measured proxy for the step's truncation
    error), using both neighbouring steps, plus a floor of a few ulps of the
    value itself for rounding.
    """

    def __init__(self, first: np.ndarray, factor: float = 10.0):
        self.factor = factor
        self.values = [first]
        self.dts: List[float] = []
        self.incs: List[np.ndarray] = []
        self.worst_margin = math.inf
        self.min_increment = math.inf
        self.violations = 0
        self.checked = 0

    def push(self, value: np.ndarray, dt: float) -> None:
        self.incs.append(value - self.values[-1])
        self.values.append(value)
        self.dts.append(dt)
        if len(self.incs) >= 2:
            self._check(len(self.incs) - 2)
        if len(self.incs) > 3:
            del self.incs[0], self.values[0], self.dts[0]

    def finish(self) -> None:
        if self.incs:
            self._check(len(self.incs) - 1)

    def _check(self, k: int) -> None:
        inc = self.incs[k]
        trunc = np.zeros_like(inc)
        if k >= 1:
            trunc = np.maximum(trunc, np.abs(inc - self.incs[k - 1] * (self.dts[k] / self.dts[k - 1])))
        if k + 1 < len(self.incs):
            trunc = np.maximum(trunc, np.abs(self.incs[k + 1] * (self.dts[k] / self.dts[k + 1]) - inc))
        scale = np.maximum(np.abs(self.values[k]), np.abs(self.values[k + 1]))
        margin = inc + self.factor * trunc + 8.0 * _EPS * scale
        self.worst_margin = min(self.worst_margin, float(np.min(margin)))
        self.min_increment = min(self.min_increment, float(np.min(inc)))
        self.violations += int(np.count_nonzero(margin < 0))
        self.checked += 1

    @property
    def ok(self) -> bool:
        return self.violations == 0


class Monitor:
    """Builds diagnostics records along a run.

    ``log_int`` is the running time integral of ``u_y / J`` maintained by
    the integrator; it is compared against ``ln(J / J0)``.
    """

    def __init__(self, initial: State, params: PhysParams, cfg: DiagnosticsConfig):
        self.params = params
        self.cfg = cfg
        self.J0 = initial.J.copy()
        self.E0 = energy(initial, params)
        self.rho0_l1 = integrate(np.abs(initial.rho0), initial.grid)
        self.J_bound = j_lower_bound(self.E0, self.rho0_l1, params.lam)
        self._prev_jgp = jgp(initial, params)
        self._jcons = 0.0

    def record(self, state: State, log_int: np.ndarray) -> DiagnosticsRecord:
        p = self.params
        d = derived_fields(state, p)
        c = conserved(state, p)
        cur_jgp = jgp(state, p)
        jgp_inc = float(np.min(cur_jgp - self._prev_jgp))
        self._prev_jgp = cur_jgp
        self._jcons = max(self._jcons, float(np.max(np.abs(np.log(state.J / self.J0) - log_int))))
        s_sup, s_inf = entropy_extrema(d, state.rho0, self.cfg.rho_floor)
        v = {
            "t": state.t, "energy": c.energy, "E0": self.E0, "mom_u": c.mom_u,
            "mom_wx": c.mom_w[0], "mom_wy": c.mom_w[1],
            "Jmin": float(np.min(state.J)), "Jmax": float(np.max(state.J)),
            "J_bound": self.J_bound, "jgp_min_inc": jgp_inc, "s_sup": s_sup, "s_inf": s_inf,
        }
        v.update(weighted_norm_suite(state, d, self.cfg.alpha, self.cfg.deltas))
        v.update(h1_norms(state, d, self.cfg.rho_floor))
        v["j_consistency"] = self._jcons
        v["gn_ratio"] = gn_ratio(state.rho0 ** (-0.5 * self.cfg.alpha) * d.G, state.grid)
        return DiagnosticsRecord(v)

    @property
    def columns(self) -> List[str]:
        return csv_columns(len(self.cfg.deltas))
