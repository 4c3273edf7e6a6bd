"""Independent references: the exact dilation solution, manufactured
solutions with symbolically derived sources, and order-of-accuracy fits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from .discretization import Grid
from .errors import DomainError, InputError, ParameterError
from .model import PhysParams
from .state import State


class ConvergenceWarning(UserWarning):
    """Errors did not decrease monotonically under refinement."""


@dataclass(frozen=True)
class DilationSolution:
    """Uniform expansion ``u = a y`` with homogeneous J and P and no field."""

    a: float
    J: float
    P: float

    def u(self, y):
        return self.a * np.asarray(y, dtype=float)


def dilation_exact(t: float, a: float, gamma: float, lam: float, P_init: float) -> DilationSolution:
    """Closed form of the homogeneous dilation.

    With ``J = 1 + a t`` the pressure equation reduces to
    ``(J^gamma P)' = (gamma - 1) lam a^2 J^(gamma - 2)``, which integrates to
    ``P = J^-gamma (P_init + lam a (J^(gamma-1) - 1))``.
    """
    J = 1.0 + a * t
    if not (J > 0):
        raise DomainError(f"1 + a t must stay positive, got {J!r}")
    if gamma == 1.0:
        raise ParameterError("gamma must differ from 1")
    P = J ** (-gamma) * (P_init + lam * a * (J ** (gamma - 1.0) - 1.0))
    return DilationSolution(a=a, J=J, P=P)


FIELD_NAMES = ("J", "u", "wx", "wy", "hx", "hy", "P")

y_sym, t_sym = sp.symbols("y t", real=True)


@dataclass
class Envelope:
    """Compactly supported factor: ``symbol`` is replaced by ``expr`` inside
    ``(lo, hi)`` and by zero outside."""

    symbol: sp.Symbol
    expr: sp.Expr
    lo: float
    hi: float


class ManufacturedSolution:
    """Prescribed fields whose equation residuals become forcing terms.

    ``fields`` maps each of ``FIELD_NAMES`` to a sympy expression in the
    module symbols ``y_sym`` and ``t_sym`` (and optionally an envelope
    symbol).  Residuals are formed exactly by sympy and evaluated with
    common-subexpression elimination.
    """

    def __init__(self, fields: Dict[str, sp.Expr], rho0: sp.Expr, params: PhysParams,
                 envelope: Optional[Envelope] = None):
        missing = set(FIELD_NAMES) - set(fields)
        if missing:
            raise InputError(f"missing manufactured fields: {sorted(missing)}")
        self.params = params
        self.envelope = envelope
        self.rho0 = sp.sympify(rho0)
        self.fields = {k: sp.sympify(fields[k]) for k in FIELD_NAMES}
        inside = self._substitute(True)
        self._inside = self._compile(inside)
        self._outside = self._compile(self._substitute(False)) if envelope else None
        self._rho0_fn = sp.lambdify([y_sym], self.rho0, "numpy")

    def _substitute(self, inside: bool):
        fields = dict(self.fields)
        if self.envelope is not None:
            value = self.envelope.expr if inside else sp.Integer(0)
            fields = {k: v.subs(self.envelope.symbol, value) for k, v in fields.items()}
        return fields, self.residuals(fields)

    def residuals(self, f: Dict[str, sp.Expr]) -> Dict[str, sp.Expr]:
        """Residuals ``lhs - rhs`` of the five evolution equations."""
        p = self.params
        lam, mu, gam = sp.nsimplify(p.lam), sp.nsimplify(p.mu), sp.nsimplify(p.gamma)
        y, t = y_sym, t_sym
        J, u, P = f["J"], f["u"], f["P"]
        w = (f["wx"], f["wy"])
        h = (f["hx"], f["hy"])
        a = sp.diff(u, y) / J
        b = [sp.diff(wc, y) / J for wc in w]
        H = h[0] ** 2 + h[1] ** 2
        out = {
            "J": sp.diff(J, t) - sp.diff(u, y),
            "u": self.rho0 * sp.diff(u, t) - sp.diff(lam * a - P - H / 2, y),
        }
        for c, name in enumerate(("wx", "wy")):
            out[name] = self.rho0 * sp.diff(w[c], t) - sp.diff(mu * b[c] + h[c], y)
        for c, name in enumerate(("hx", "hy")):
            out[name] = sp.diff(h[c], t) + a * h[c] - b[c]
        out["P"] = (sp.diff(P, t) + gam * a * P
                    - (gam - 1) * (lam * a**2 + mu * (b[0] ** 2 + b[1] ** 2)))
        return out

    @staticmethod
    def _compile(pair):
        fields, res = pair
        exprs = [fields[k] for k in FIELD_NAMES] + [res[k] for k in FIELD_NAMES]
        return sp.lambdify([y_sym, t_sym], exprs, "numpy", cse=True)

    def _evaluate(self, y: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros((2 * len(FIELD_NAMES), y.size))
        if self.envelope is None:
            parts = [(np.ones(y.size, dtype=bool), self._inside)]
        else:
            ins = (y > self.envelope.lo) & (y < self.envelope.hi)
            parts = [(ins, self._inside), (~ins, self._outside)]
        for mask, fn in parts:
            if not np.any(mask):
                continue
            ym = y[mask]
            for k, val in enumerate(fn(ym, t)):
                out[k, mask] = np.broadcast_to(np.asarray(val, dtype=float), ym.shape)
        return out

    def state(self, grid: Grid, t: float) -> State:
        vals = self._evaluate(grid.y, t)
        return State(t, vals[0], vals[1], vals[2:4], vals[4:6], vals[6], self.rho0_on(grid),
                     grid)

    def rho0_on(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(np.asarray(self._rho0_fn(grid.y), dtype=float),
                               (grid.N,)).copy()

    def source_fn(self, grid: Grid):
        """Callable ``t -> (sJ, su, sw, sh, sP)`` for the solver."""
        y = grid.y

        def source(t: float):
            r = self._evaluate(y, t)[len(FIELD_NAMES):]
            return r[0], r[1], r[2:4], r[4:6], r[6]

        return source


def mms_sources(ms: ManufacturedSolution, grid: Grid, t: float) -> Dict[str, np.ndarray]:
    """Nodewise residual sources of a manufactured solution at time t."""
    r = ms._evaluate(grid.y, t)[len(FIELD_NAMES):]
    return {name: r[k] for k, name in enumerate(FIELD_NAMES)}


def bump_envelope(width: float, center: float = 0.0) -> Envelope:
    """Smooth envelope ``exp(1 - 1/(1 - r^2))`` on ``|y - center| < width``."""
    E = sp.Symbol("E")
    r = (y_sym - center) / width
    return Envelope(E, sp.exp(1 - 1 / (1 - r**2)), center - width, center + width)


def standard_manufactured(params: PhysParams, L: float = 4.0, Krho: float = 1.0,
                          ell: float = 1.0) -> ManufacturedSolution:
    """Travelling, compactly supported perturbations of a rest state.

    All fields equal the rest state (J = 1, u = w = h = 0, P = 1) within
    a quarter of the half-width from the ends, so the manufactured solution
    satisfies homogeneous Dirichlet conditions for u and w.
    """
    env = bump_envelope(0.7 * L)
    E, y, t = env.symbol, y_sym, t_sym
    k = sp.pi / L
    fields = {
        "J": 1 + sp.Rational(1, 5) * E * sp.sin(2 * k * y) * sp.sin(t),
        "u": sp.Rational(3, 10) * E * sp.sin(k * y + t),
        "wx": sp.Rational(1, 5) * E * sp.cos(k * y - t),
        "wy": sp.Rational(1, 10) * E * sp.sin(2 * k * y) * sp.cos(t),
        "hx": sp.Rational(3, 10) * E * sp.cos(k * y) * (1 + sp.sin(t) / 2),
        "hy": sp.Rational(1, 5) * E * sp.sin(k * y + 2 * t),
        "P": 1 + sp.Rational(1, 5) * E * sp.cos(k * y + 2 * t),
    }
    rho0 = Krho * (1 + y**2) ** (-sp.nsimplify(ell) / 2)
    return ManufacturedSolution(fields, rho0, params, envelope=env)


def dilation_manufactured(params: PhysParams, a: float, P_init: float) -> ManufacturedSolution:
    """The dilation written as a manufactured solution; its sources vanish."""
    gam = sp.nsimplify(params.gamma)
    lam = sp.nsimplify(params.lam)
    a_ = sp.nsimplify(a)
    J = 1 + a_ * t_sym
    P = J ** (-gam) * (sp.nsimplify(P_init) + lam * a_ * (J ** (gam - 1) - 1))
    zero = sp.Integer(0)
    fields = {"J": J, "u": a_ * y_sym, "wx": zero, "wy": zero, "hx": zero, "hy": zero, "P": P}
    return ManufacturedSolution(fields, sp.Integer(1), params)


def convergence_order(errors: Sequence[float],
                      factors: Union[float, Sequence[float]] = 2.0) -> float:
    """Least-squares slope of ``-log(error)`` against ``log(resolution)``.

    ``factors`` gives the refinement ratio between successive levels, either
    one number for all of them or one per gap.  A warning is issued if the
    errors do not decrease monotonically.
    """
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise InputError("need at least two error levels")
    if np.any(~(e > 0)) or not np.all(np.isfinite(e)):
        raise DomainError("errors must be positive and finite")
    if np.isscalar(factors):
        ratios = np.full(e.size - 1, float(factors))
    else:
        ratios = np.asarray(factors, dtype=float)
        if ratios.size != e.size - 1:
            raise InputError("need one refinement factor per gap between levels")
    if np.any(ratios <= 1):
        raise ParameterError("refinement factors must exceed 1")
    if np.any(np.diff(e) >= 0):
        warnings.warn("errors are not monotonically decreasing", ConvergenceWarning,
                      stacklevel=2)
    x = np.concatenate([[0.0], np.cumsum(np.log(ratios))])
    slope = np.polyfit(x, np.log(e), 1)[0]
    return float(-slope)
