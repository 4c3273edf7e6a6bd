"""Run configuration: strict JSON schema, validation and canonical echo.

Unknown keys are rejected everywhere.  Validation errors name the offending
field with a dotted path such as ``density.ell``.
"""

from __future__ import annotations

import hashlib
import json
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigSyntaxError, ConfigValidationError
from .model import PhysParams


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class GridSection(_Section):
    L: float = Field(16.0, gt=0)
    N: int = 2049

    @field_validator("N")
    @classmethod
    def _odd(cls, v):
        if v < 5 or v % 2 == 0:
            raise ValueError("N must be odd and at least 5")
        return v


class DensitySection(_Section):
    kind: Literal["power-law", "tabulated"] = "power-law"
    Krho: float = Field(1.0, gt=0)
    ell: float = Field(2.0, ge=0)
    table: Optional[str] = None

    @model_validator(mode="after")
    def _table_needed(self):
        if self.kind == "tabulated" and not self.table:
            raise ValueError("tabulated density needs 'table' (CSV of y, rho0, rho0')")
        return self


class BumpSection(_Section):
    center: float = 0.0
    width: float = Field(1.5, gt=0)
    amplitude: float = 0.1


def _bump(center: float) -> BumpSection:
    return BumpSection(center=center)


class BumpsSection(_Section):
    u0: BumpSection = Field(default_factory=lambda: _bump(0.0))
    w0x: BumpSection = Field(default_factory=lambda: _bump(-0.5))
    w0y: BumpSection = Field(default_factory=lambda: _bump(0.5))
    h0x: BumpSection = Field(default_factory=lambda: _bump(0.25))
    h0y: BumpSection = Field(default_factory=lambda: _bump(-0.25))


class InitialSection(_Section):
    s0: float = 1.0
    margin: float = Field(0.25, ge=0, lt=1)


class PhysicsSection(_Section):
    lam: float = Field(1.0, gt=0, alias="lambda")
    mu: float = Field(1.0, gt=0)
    R: float = Field(0.4, gt=0)
    cv: float = Field(1.0, gt=0)
    A: float = Field(1.0, gt=0)
    gamma: Optional[float] = None

    @field_validator("gamma")
    @classmethod
    def _consistent_gamma(cls, v, info):
        if v is None or "R" not in info.data or "cv" not in info.data:
            return v
        derived = info.data["R"] / info.data["cv"] + 1.0
        if abs(v - derived) > 1e-12 * derived:
            raise ValueError(f"gamma={v!r} inconsistent with R/cv + 1 = {derived!r}")
        return v

    @model_validator(mode="after")
    def _fill_gamma(self):
        self.gamma = self.R / self.cv + 1.0 if self.gamma is None else self.gamma
        return self

    def params(self) -> PhysParams:
        return PhysParams(self.lam, self.mu, self.R, self.cv, self.A, self.gamma)


class SolverSection(_Section):
    scheme: Literal["explicit-rk2", "imex-euler"] = "imex-euler"
    cfl: float = Field(0.4, gt=0, le=1)
    dt_max: float = Field(1e-3, gt=0)
    T_end: float = Field(1.0, ge=0)
    bc: Literal["homogeneous-dirichlet-uw", "dilation", "traction-free"] = "traction-free"
    bc_rate: float = 0.0
    J_floor_factor: float = Field(0.1, ge=0)


class DiagnosticsSection(_Section):
    alpha: Optional[float] = None
    deltas: List[float] = Field(default_factory=lambda: [1e-2, 1e-4, 1e-6])
    rho_floor_quantile: float = Field(0.9, gt=0, le=1)
    output_every: int = Field(10, ge=1)

    @field_validator("deltas")
    @classmethod
    def _positive(cls, v):
        if not v or any(not (d > 0) for d in v):
            raise ValueError("deltas must be a non-empty list of positive numbers")
        return v


class OutputSection(_Section):
    dir: str = "run"
    snapshot_every: int = Field(0, ge=0)
    snapshot_times: List[float] = Field(default_factory=list)
    eulerian: bool = False


class DilationStudy(_Section):
    a: float = 0.5
    P_init: float = Field(1.0, gt=0)
    L: float = Field(4.0, gt=0)
    N: int = 1025
    cfl: float = Field(0.4, gt=0, le=0.5)
    T_end: float = Field(1.0, gt=0)


class MMSStudy(_Section):
    L: float = Field(4.0, gt=0)
    levels: List[int] = Field(default_factory=lambda: [257, 513, 1025, 2049])
    T_end: float = Field(0.1, gt=0)
    cfl: float = Field(0.9, gt=0, le=1)
    Krho: float = Field(4.0, gt=0)
    ell: float = Field(1.0, ge=0)


class StudiesSection(_Section):
    dilation: DilationStudy = Field(default_factory=DilationStudy)
    mms: MMSStudy = Field(default_factory=MMSStudy)


class RunConfig(_Section):
    grid: GridSection = Field(default_factory=GridSection)
    density: DensitySection = Field(default_factory=DensitySection)
    bumps: BumpsSection = Field(default_factory=BumpsSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    physics: PhysicsSection = Field(default_factory=PhysicsSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    diagnostics: DiagnosticsSection = Field(default_factory=DiagnosticsSection)
    output: OutputSection = Field(default_factory=OutputSection)
    studies: StudiesSection = Field(default_factory=StudiesSection)

    def echo(self) -> dict:
        """Fully expanded configuration, including the derived gamma."""
        return self.model_dump(mode="json", by_alias=True)

    def digest(self) -> str:
        canon = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _field_name(loc) -> str:
    return ".".join(str(p) for p in loc) or "<root>"


def validate_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigValidationError("<root>", "configuration must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        msg = "unknown key" if err["type"] == "extra_forbidden" else err["msg"]
        raise ConfigValidationError(_field_name(err["loc"]), msg) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return validate_config(data)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
