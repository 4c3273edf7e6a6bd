"""Reference densities, compactly supported initial profiles, and the
checker for the structural hypotheses on initial data.

Hypotheses are checked on a truncated domain.  Whether a quantity is
"finite on the real line" is judged by recomputing it on a domain of twice
the half-width at the same spacing and asking whether it moved by less than
a relative tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from .discretization import Grid, ddy, integrate, weighted_l2
from .errors import ConfigurationError, DomainError, ParameterError, ShapeError
from .model import PhysParams, pressure_from_entropy

DEFAULT_MARGIN = 0.25
DOUBLING_RTOL = 0.01


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Reference density ``rho0`` and its derivative.

    ``kind == "power-law"`` means ``rho0 = Krho / (1 + y^2)^(ell/2)``, which
    can be evaluated anywhere.  ``kind == "tabulated"`` interpolates the
    ``(y, rho0, rho0')`` rows in ``samples`` and refuses to extrapolate.
    """

    kind: str
    Krho: float = 1.0
    ell: float = 0.0
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "power-law":
            bracket = 1.0 + y * y
            rho = self.Krho * bracket ** (-0.5 * self.ell)
            drho = -self.ell * self.Krho * y * bracket ** (-0.5 * self.ell - 1.0)
            return rho, drho
        ys = self.samples[:, 0]
        if np.any(y < ys[0]) or np.any(y > ys[-1]):
            raise DomainError("tabulated density evaluated outside its table")
        return np.interp(y, ys, self.samples[:, 1]), np.interp(y, ys, self.samples[:, 2])

    @property
    def can_extend(self) -> bool:
        return self.kind == "power-law"

    @property
    def decay_in_range(self) -> Optional[bool]:
        """Whether the power-law exponent lies in the slow-decay range [0, 2]."""
        if self.kind != "power-law":
            return None
        return 0.0 <= self.ell <= 2.0

    @property
    def rho_bar(self) -> float:
        if self.kind == "power-law":
            return self.Krho
        return float(np.max(self.samples[:, 1]))

    @property
    def K1(self) -> float:
        """``sup |rho0'| / rho0^(3/2)`` over the profile's own samples."""
        return float(np.max(np.abs(self.samples[:, 2]) / self.samples[:, 1] ** 1.5))


def power_law_density(Krho: float, ell: float, grid: Grid) -> DensityProfile:
    if not (math.isfinite(Krho) and Krho > 0):
        raise ParameterError(f"Krho must be positive, got {Krho!r}")
    if not (math.isfinite(ell) and ell >= 0):
        raise ParameterError(f"ell must be non-negative, got {ell!r}")
    proto = DensityProfile("power-law", float(Krho), float(ell))
    rho, drho = proto.evaluate(grid.y)
    samples = np.column_stack([grid.y, rho, drho])
    samples.setflags(write=False)
    return DensityProfile("power-law", float(Krho), float(ell), samples)


def tabulated_density(samples) -> DensityProfile:
    samples = np.array(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 3 or samples.shape[0] < 2:
        raise ShapeError("tabulated density needs rows of (y, rho0, rho0')")
    if np.any(np.diff(samples[:, 0]) <= 0):
        raise ParameterError("tabulated density abscissae must be strictly increasing")
    if np.any(samples[:, 1] <= 0) or not np.all(np.isfinite(samples)):
        raise ParameterError("tabulated density must be positive and finite")
    samples.setflags(write=False)
    return DensityProfile("tabulated", samples=samples)


@dataclass(frozen=True)
class Bump:
    """Smooth bump ``amplitude * exp(1 - 1/(1 - r^2))`` with ``r = (y-center)/width``.

    The peak value equals ``amplitude``; the function is exactly zero for
    ``|r| >= 1``.
    """

    center: float = 0.0
    width: float = 1.0
    amplitude: float = 0.0

    def __post_init__(self):
        if not (self.width > 0):
            raise ParameterError(f"bump width must be positive, got {self.width!r}")

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        r = (y - self.center) / self.width
        inside = np.abs(r) < 1.0
        out = np.zeros_like(y)
        ri = r[inside]
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - ri * ri))
        return out

    def support(self):
        return self.center - self.width, self.center + self.width


BUMP_FIELDS = ("u0", "w0x", "w0y", "h0x", "h0y")


@dataclass(frozen=True)
class BumpSpec:
    """One bump per initial velocity / magnetic component."""

    u0: Bump = Bump()
    w0x: Bump = Bump()
    w0y: Bump = Bump()
    h0x: Bump = Bump()
    h0y: Bump = Bump()

    @classmethod
    def standard(cls, amplitude: float = 0.1, width: float = 1.5) -> "BumpSpec":
        """Bumps of a common amplitude at staggered centres near the origin."""
        centers = {"u0": 0.0, "w0x": -0.5, "w0y": 0.5, "h0x": 0.25, "h0y": -0.25}
        return cls(**{k: Bump(c, width, amplitude) for k, c in centers.items()})

    def with_perturbation(self, name: str, extra: Bump) -> "PerturbedBumps":
        return PerturbedBumps(self, name, extra)

    def evaluate(self, name: str, y) -> np.ndarray:
        return getattr(self, name)(y)

    def bumps(self):
        return {name: getattr(self, name) for name in BUMP_FIELDS}


@dataclass(frozen=True)
class PerturbedBumps:
    """A bump set with one extra bump added to one component."""

    base: BumpSpec
    name: str
    extra: Bump

    def evaluate(self, name: str, y) -> np.ndarray:
        out = self.base.evaluate(name, y)
        if name == self.name:
            out = out + self.extra(y)
        return out

    def bumps(self):
        out = self.base.bumps()
        return {k: v for k, v in out.items()} | {f"{self.name}+": self.extra}


@dataclass(eq=False)
class InitialData:
    """Initial fields on a grid together with the recipe that produced them."""

    grid: Grid
    rho0: np.ndarray
    drho0: np.ndarray
    J0: np.ndarray
    u0: np.ndarray
    w0: np.ndarray
    h0: np.ndarray
    P0: np.ndarray
    profile: Optional[DensityProfile] = None
    bumps: Optional[Union[BumpSpec, PerturbedBumps]] = None
    s0: Optional[float] = None
    params: Optional[PhysParams] = None

    def regrid(self, grid: Grid) -> "InitialData":
        """Rebuild the same data on another grid (needs an extendable recipe)."""
        if self.profile is None or self.bumps is None or self.s0 is None:
            raise ConfigurationError("initial data has no recipe to rebuild from")
        if not self.profile.can_extend:
            raise ConfigurationError("tabulated density cannot be extended")
        profile = power_law_density(self.profile.Krho, self.profile.ell, grid)
        return build_initial_data(profile, self.bumps, self.params, grid, s0=self.s0,
                                  margin=0.0)


def _check_support(bumps, L: float, margin: float):
    lo, hi = -L + margin * L, L - margin * L
    for name, b in bumps.bumps().items():
        if b.amplitude == 0:
            continue
        a, c = b.support()
        if a <= lo or c >= hi:
            raise ConfigurationError(
                f"bump {name} support [{a}, {c}] reaches the boundary margin; "
                f"it must lie strictly inside ({lo}, {hi})"
            )


def build_initial_data(profile: DensityProfile, bumps, params: PhysParams, grid: Grid,
                       s0: float = 1.0, margin: float = DEFAULT_MARGIN) -> InitialData:
    """Assemble initial data with ``J0 = 1`` and constant initial entropy ``s0``.

    Bumps must be supported strictly inside ``[-L + margin*L, L - margin*L]``.
    """
    _check_support(bumps, grid.L, margin)
    rho0, drho0 = profile.evaluate(grid.y)
    if np.any(rho0 <= 0):
        raise DomainError("reference density must be strictly positive on the grid")
    y = grid.y
    u0 = bumps.evaluate("u0", y)
    w0 = np.vstack([bumps.evaluate("w0x", y), bumps.evaluate("w0y", y)])
    h0 = np.vstack([bumps.evaluate("h0x", y), bumps.evaluate("h0y", y)])
    P0 = pressure_from_entropy(s0, rho0, params)
    return InitialData(grid=grid, rho0=rho0, drho0=drho0, J0=np.ones(grid.N), u0=u0,
                       w0=w0, h0=h0, P0=np.asarray(P0, dtype=float), profile=profile,
                       bumps=bumps, s0=float(s0), params=params)


@dataclass
class HypothesisReport:
    """Outcome of the hypothesis checks on initial data.

    ``norms`` holds every quantity that was computed on the truncated domain;
    ``doubled`` holds the same quantities on the doubled domain when the
    data could be rebuilt there, and ``converged`` says which of them moved
    by less than the doubling tolerance.  ``strict`` records whether the
    norm flags were required to converge.
    """

    h1_ok: bool
    h2_ok: bool
    h3_ok: bool
    h4_ok: bool
    star_ok: bool
    K1: float
    A0: float
    alpha: float
    norms: Dict[str, float]
    doubled: Optional[Dict[str, float]] = None
    converged: Optional[Dict[str, bool]] = None
    strict: bool = False
    rho_bar: float = float("nan")
    decay_in_range: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok and self.h3_ok and self.h4_ok and self.star_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok, "h1_ok": self.h1_ok, "h2_ok": self.h2_ok, "h3_ok": self.h3_ok,
            "h4_ok": self.h4_ok, "star_ok": self.star_ok, "K1": self.K1, "A0": self.A0,
            "alpha": self.alpha, "rho_bar": self.rho_bar, "strict": self.strict,
            "decay_in_range": self.decay_in_range, "norms": dict(self.norms),
            "doubled": None if self.doubled is None else dict(self.doubled),
            "converged": None if self.converged is None else dict(self.converged),
        }


H2_NORMS = ("sqrt_rho0_u0", "sqrt_rho0_w0", "du0", "dw0", "h0", "P0",
            "dP0_over_sqrt_rho0", "dh0_over_sqrt_rho0", "dJ0_over_sqrt_rho0")
H3_NORMS = ("weighted_F0", "weighted_G0", "weighted_H0", "weighted_P0_H1", "weighted_h0_H1")
H4_NORMS = ("rho0_L1", "P0_L1")


def _hypothesis_quantities(data: InitialData, alpha: float, params: PhysParams) -> dict:
    g = data.grid
    rho0, drho0 = data.rho0, data.drho0
    one = np.ones(g.N)
    du0 = ddy(data.u0, g)
    dw0 = ddy(data.w0, g)
    dh0 = ddy(data.h0, g)
    dP0 = ddy(data.P0, g)
    dJ0 = ddy(data.J0, g)
    inv_sqrt = 1.0 / np.sqrt(rho0)
    q = {
        "sqrt_rho0_u0": weighted_l2(data.u0, rho0, g),
        "sqrt_rho0_w0": weighted_l2(data.w0, rho0, g),
        "du0": weighted_l2(du0, one, g),
        "dw0": weighted_l2(dw0, one, g),
        "h0": weighted_l2(data.h0, one, g),
        "P0": weighted_l2(data.P0, one, g),
        "dP0_over_sqrt_rho0": weighted_l2(dP0 * inv_sqrt, one, g),
        "dh0_over_sqrt_rho0": weighted_l2(dh0 * inv_sqrt, one, g),
        "dJ0_over_sqrt_rho0": weighted_l2(dJ0 * inv_sqrt, one, g),
    }
    H0 = np.sum(data.h0**2, axis=0)
    F0 = params.mu * dw0 / data.J0 + data.h0
    G0 = params.lam * du0 / data.J0 - data.P0 - 0.5 * H0
    wgt = rho0 ** (-alpha)
    half = rho0 ** (-0.5 * alpha)
    log_slope = 0.5 * alpha * drho0 / rho0
    wP = half * data.P0
    dwP = half * (dP0 - log_slope * data.P0)
    wh = half * data.h0
    dwh = half * (dh0 - log_slope * data.h0)
    q["weighted_F0"] = weighted_l2(F0, wgt, g)
    q["weighted_G0"] = weighted_l2(G0, wgt, g)
    q["weighted_H0"] = weighted_l2(H0, wgt, g)
    q["weighted_P0_H1"] = math.hypot(weighted_l2(wP, one, g), weighted_l2(dwP, one, g))
    q["weighted_h0_H1"] = math.hypot(weighted_l2(wh, one, g), weighted_l2(dwh, one, g))
    q["rho0_L1"] = integrate(np.abs(rho0), g)
    q["P0_L1"] = integrate(np.abs(data.P0), g)
    q["K1"] = float(np.max(np.abs(drho0) / rho0**1.5))
    q["A0"] = float(np.min(rho0 * (1.0 + np.abs(g.y)) ** 2))
    return q


def _stable(a: float, b: float, rtol: float) -> bool:
    if a == b:
        return True
    return abs(b - a) <= rtol * max(abs(a), abs(b))


def validate_hypotheses(profile: DensityProfile, data: InitialData, alpha: float,
                        params: PhysParams, strict: bool = False,
                        rtol: float = DOUBLING_RTOL) -> HypothesisReport:
    """Check the structural hypotheses on truncated-domain initial data.

    The density constant ``K1`` and the decay constant ``A0`` are always
    judged by domain doubling when the data can be rebuilt on a larger
    domain, since a supremum over a truncated domain is always finite.
    Norm finiteness uses doubling only when ``strict`` is set; otherwise a
    finite value on the truncated domain suffices.
    """
    if profile.samples is not None and profile.kind == "power-law":
        if profile.samples.shape[0] != data.grid.N or not np.array_equal(
                profile.samples[:, 0], data.grid.y):
            raise ShapeError("profile was sampled on a different grid than the data")
    if not math.isfinite(alpha):
        raise ParameterError("alpha must be finite")
    q = _hypothesis_quantities(data, alpha, params)
    doubled = converged = None
    can_double = data.profile is not None and data.profile.can_extend and data.bumps is not None
    if can_double:
        q2 = _hypothesis_quantities(data.regrid(data.grid.doubled()), alpha, params)
        doubled = q2
        converged = {k: _stable(q[k], q2[k], rtol) for k in q}

    def finite(names):
        ok = all(math.isfinite(q[n]) for n in names)
        if strict and converged is not None:
            ok = ok and all(converged[n] for n in names)
        return ok

    h1 = bool(np.all(data.rho0 > 0) and math.isfinite(float(np.max(data.rho0))))
    h2 = finite(H2_NORMS) and bool(np.all(data.P0 >= 0)) and bool(np.all(data.J0 > 0))
    K1_ok = math.isfinite(q["K1"]) and (converged is None or converged["K1"])
    h3 = K1_ok and finite(H3_NORMS)
    h4 = finite(H4_NORMS)
    star = q["A0"] > 0 and (converged is None or converged["A0"])
    norms = {k: v for k, v in q.items() if k not in ("K1", "A0")}
    return HypothesisReport(
        h1_ok=h1, h2_ok=h2, h3_ok=h3, h4_ok=h4, star_ok=bool(star), K1=q["K1"], A0=q["A0"],
        alpha=float(alpha), norms=norms, doubled=doubled, converged=converged, strict=strict,
        rho_bar=float(np.max(data.rho0)), decay_in_range=profile.decay_in_range,
    )
