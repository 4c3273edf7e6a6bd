"""Assembly of runs from a configuration, plus the verification studies
(homogeneous dilation and manufactured-solution convergence)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .diagnostics import DiagnosticsConfig
from .discretization import Grid, weighted_l2
from .errors import SinkError
from .initdata import (Bump, BumpSpec, DensityProfile, InitialData, build_initial_data,
                       power_law_density, tabulated_density, validate_hypotheses)
from .model import PhysParams
from .oracle import convergence_order, dilation_exact, standard_manufactured
from .serialization import DirectorySink
from .solver import RunResult, SolverConfig, run


def build_profile(cfg: RunConfig, grid: Grid) -> DensityProfile:
    d = cfg.density
    if d.kind == "power-law":
        return power_law_density(d.Krho, d.ell, grid)
    try:
        samples = np.loadtxt(d.table, delimiter=",", ndmin=2)
    except OSError as exc:
        raise SinkError(d.table, exc.strerror or str(exc)) from exc
    return tabulated_density(samples)


def build_bumps(cfg: RunConfig) -> BumpSpec:
    b = cfg.bumps
    return BumpSpec(**{name: Bump(s.center, s.width, s.amplitude)
                       for name, s in (("u0", b.u0), ("w0x", b.w0x), ("w0y", b.w0y),
                                       ("h0x", b.h0x), ("h0y", b.h0y))})


def build_initial(cfg: RunConfig):
    grid = Grid(cfg.grid.L, cfg.grid.N)
    params = cfg.physics.params()
    profile = build_profile(cfg, grid)
    init = build_initial_data(profile, build_bumps(cfg), params, grid, s0=cfg.initial.s0,
                              margin=cfg.initial.margin)
    return init, profile, params


def build_solver_config(cfg: RunConfig) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(scheme=s.scheme, cfl=s.cfl, dt_max=s.dt_max, T_end=s.T_end, bc=s.bc,
                        bc_rate=s.bc_rate, J_floor_factor=s.J_floor_factor,
                        output_every=cfg.diagnostics.output_every,
                        snapshot_every=cfg.output.snapshot_every,
                        snapshot_times=tuple(cfg.output.snapshot_times))


def build_diagnostics(cfg: RunConfig, init: InitialData, params: PhysParams) -> DiagnosticsConfig:
    d = cfg.diagnostics
    return DiagnosticsConfig.default(init.rho0, init.grid, params, alpha=d.alpha,
                                     delta_factors=d.deltas,
                                     floor_fraction=d.rho_floor_quantile)


def manifest_for(cfg: RunConfig, init: InitialData, profile: DensityProfile,
                 params: PhysParams, diag: DiagnosticsConfig) -> dict:
    from .diagnostics import energy, j_lower_bound
    from .discretization import integrate
    from .solver import initial_state

    s0 = initial_state(init, build_solver_config(cfg))
    E0 = energy(s0, params)
    l1 = integrate(np.abs(init.rho0), init.grid)
    report = validate_hypotheses(profile, init, diag.alpha, params)
    return {
        "version": __version__,
        "config_sha256": cfg.digest(),
        "config": cfg.echo(),
        "E0": E0,
        "rho0_l1": l1,
        "J_bound": j_lower_bound(E0, l1, params.lam),
        "K1": report.K1,
        "alpha": diag.alpha,
        "deltas": list(diag.deltas),
        "rho_floor": diag.rho_floor,
        "hypotheses": report.to_dict(),
    }


def simulate(cfg: RunConfig, out_dir=None, raise_on_abort: bool = True) -> RunResult:
    """Run the configured simulation, writing all artefacts to ``out_dir``."""
    init, profile, params = build_initial(cfg)
    diag = build_diagnostics(cfg, init, params)
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    sink = DirectorySink(out, manifest_for(cfg, init, profile, params, diag),
                         eulerian=cfg.output.eulerian)
    return run(init, build_solver_config(cfg), params, diag=diag, sinks=[sink],
               keep_snapshots=False, raise_on_abort=raise_on_abort)


def power_law_bump_data(grid: Grid, params: PhysParams, Krho: float = 1.0, ell: float = 2.0,
                        amplitude: float = 0.1, bumps: Optional[BumpSpec] = None) -> InitialData:
    """Power-law density, unit initial entropy and the standard bumps."""
    profile = power_law_density(Krho, ell, grid)
    return build_initial_data(profile, bumps or BumpSpec.standard(amplitude), params, grid)


# Homogeneous dilation -------------------------------------------------------

def dilation_initial_data(grid: Grid, a: float, P_init: float) -> InitialData:
    profile = power_law_density(1.0, 0.0, grid)
    N = grid.N
    return InitialData(grid=grid, rho0=np.ones(N), drho0=np.zeros(N), J0=np.ones(N),
                       u0=a * grid.y, w0=np.zeros((2, N)), h0=np.zeros((2, N)),
                       P0=np.full(N, float(P_init)), profile=profile)


@dataclass
class DilationLevel:
    N: int
    cfl: float
    steps: int
    J_err: float
    P_err: float


@dataclass
class DilationReport:
    levels: List[DilationLevel]

    @property
    def P_ratio(self) -> float:
        return self.levels[0].P_err / self.levels[1].P_err


def run_dilation(params: PhysParams, a: float, P_init: float, L: float, N: int, cfl: float,
                 T: float) -> DilationLevel:
    grid = Grid(L, N)
    init = dilation_initial_data(grid, a, P_init)
    cfg = SolverConfig(scheme="explicit-rk2", cfl=cfl, dt_max=1.0, T_end=T, bc="dilation",
                       bc_rate=a, output_every=10**9)
    res = run(init, cfg, params)
    ex = dilation_exact(T, a, params.gamma, params.lam, P_init)
    J_err = float(np.max(np.abs(res.state.J - ex.J)) / ex.J)
    P_err = float(np.max(np.abs(res.state.P - ex.P)) / ex.P)
    return DilationLevel(N=N, cfl=cfl, steps=res.steps, J_err=J_err, P_err=P_err)


def dilation_study(params: PhysParams, a: float = 0.5, P_init: float = 1.0, L: float = 4.0,
                   N: int = 1025, cfl: float = 0.4, T: float = 1.0) -> DilationReport:
    """Base run plus a run with half the spacing and half the step.

    The explicit step is proportional to ``cfl * dy^2``, so doubling the
    cfl number while halving dy halves the step.
    """
    base = run_dilation(params, a, P_init, L, N, cfl, T)
    fine = run_dilation(params, a, P_init, L, 2 * N - 1, 2 * cfl, T)
    return DilationReport([base, fine])


# Manufactured solutions -----------------------------------------------------

@dataclass
class MMSReport:
    levels: Sequence[int]
    errors: List[float]
    order: float
    steps: List[int] = field(default_factory=list)


def mms_error(ms, N: int, L: float, T: float, cfl: float, params: PhysParams,
              scheme: str = "explicit-rk2") -> tuple:
    """L2 error of all unknowns at time T for one resolution."""
    grid = Grid(L, N)
    s0 = ms.state(grid, 0.0)
    init = InitialData(grid=grid, rho0=s0.rho0, drho0=np.zeros(N), J0=s0.J, u0=s0.u, w0=s0.w,
                       h0=s0.h, P0=s0.P)
    cfg = SolverConfig(scheme=scheme, cfl=cfl, dt_max=1.0, T_end=T, output_every=10**9,
                       track_jgp=False)
    res = run(init, cfg, params, source=_memoized(ms.source_fn(grid)))
    exact = ms.state(grid, T)
    one = np.ones(N)
    err2 = sum(weighted_l2(getattr(res.state, k) - getattr(exact, k), one, grid) ** 2
               for k in ("J", "u", "w", "h", "P"))
    return float(np.sqrt(err2)), res.steps


def _memoized(fn):
    """Cache the most recent evaluation: Heun reuses the end-of-step source."""
    last = {}

    def wrapped(t):
        if last.get("t") != t:
            last["t"] = t
            last["v"] = fn(t)
        return last["v"]

    return wrapped


def mms_study(params: PhysParams, levels: Sequence[int] = (257, 513, 1025, 2049),
              L: float = 4.0, T: float = 0.1, cfl: float = 0.9, Krho: float = 4.0,
              ell: float = 1.0) -> MMSReport:
    ms = standard_manufactured(params, L=L, Krho=Krho, ell=ell)
    errors, steps = [], []
    for N in levels:
        e, n = mms_error(ms, N, L, T, cfl, params)
        errors.append(e)
        steps.append(n)
    factors = [(levels[k + 1] - 1) / (levels[k] - 1) for k in range(len(levels) - 1)]
    return MMSReport(levels=list(levels), errors=errors,
                     order=convergence_order(errors, factors), steps=steps)
