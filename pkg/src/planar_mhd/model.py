"""Physical parameters and pointwise thermodynamic relations.

The gas is ideal and polytropic: ``P = R * rho * theta`` with entropy
``s = cv * ln(P / (A * rho**gamma))`` and ``gamma = R / cv + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError

_GAMMA_RTOL = 1e-12


@dataclass(frozen=True)
class PhysParams:
    """Viscosities and gas constants.

    ``lam`` and ``mu`` are the longitudinal and transverse viscosities.  The
    adiabatic exponent is derived from ``R`` and ``cv``; passing an explicit
    ``gamma`` is allowed only if it agrees with ``R / cv + 1``.
    """

    lam: float = 1.0
    mu: float = 1.0
    R: float = 0.4
    cv: float = 1.0
    A: float = 1.0
    gamma: Optional[float] = None

    def __post_init__(self):
        for name in ("lam", "mu", "R", "cv", "A"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
        derived = self.R / self.cv + 1.0
        if self.gamma is None:
            object.__setattr__(self, "gamma", derived)
        elif not math.isclose(self.gamma, derived, rel_tol=_GAMMA_RTOL, abs_tol=0.0):
            raise ParameterError(
                f"gamma={self.gamma!r} inconsistent with R/cv + 1 = {derived!r}"
            )
        # Normalise to float so that echoes and hashes are stable.
        for name in ("lam", "mu", "R", "cv", "A", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class ThermoPoint:
    """Density, temperature and entropy at one point.

    ``theta`` is None where the density vanishes; ``s`` is None wherever the
    logarithm is undefined (zero pressure or zero density).
    """

    rho: float
    theta: Optional[float]
    s: Optional[float]

    @property
    def s_defined(self) -> bool:
        return self.s is not None


def thermo_point(P: float, rho0: float, J: float, params: PhysParams) -> ThermoPoint:
    if J <= 0:
        raise DomainError(f"J must be positive, got {J!r}")
    if P < 0:
        raise DomainError(f"P must be non-negative, got {P!r}")
    if rho0 < 0:
        raise DomainError(f"rho0 must be non-negative, got {rho0!r}")
    rho = rho0 / J
    if rho == 0:
        return ThermoPoint(rho=0.0, theta=None, s=None)
    theta = P / (params.R * rho)
    if P == 0:
        return ThermoPoint(rho=rho, theta=theta, s=None)
    s = params.cv * math.log(P / (params.A * rho**params.gamma))
    return ThermoPoint(rho=rho, theta=theta, s=s)


def pressure_from_entropy(s, rho, params: PhysParams):
    """Invert the entropy relation: ``P = A exp(s / cv) rho**gamma``.

    Works on scalars and arrays; any non-positive density raises.
    """
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0):
        raise DomainError("pressure_from_entropy needs strictly positive density")
    out = params.A * np.exp(np.asarray(s, dtype=float) / params.cv) * rho_arr**params.gamma
    return float(out) if out.ndim == 0 else out
