"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or input data, 3 numerical
abort, 4 I/O failure.  Reports go to stdout as JSON (CSV for ``compare``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .config import RunConfig, load_config, validate_config
from .diagnostics import difference_functional
from .errors import (ConfigSyntaxError, ConfigValidationError, InputError, NumericalAbort,
                     PlanarMHDError, SinkError)
from .fluxes import IDENTITIES, residual_fields, summarize_residual
from .initdata import validate_hypotheses
from .serialization import list_snapshots, read_snapshot, state_from_snapshot
from .studies import build_diagnostics, build_initial, dilation_study, mms_study, simulate

log = logging.getLogger("planar_mhd")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ABORT = 3
EXIT_IO = 4

# Acceptance thresholds reported by the study subcommands.
DILATION_J_TOL = 1e-8
DILATION_P_TOL = 1e-5
DILATION_RATIO = (3.5, 4.5)
MMS_ORDER = (1.85, 2.15)
SPACING_RTOL = 1e-9


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, allow_nan=True)
    sys.stdout.write("\n")


# Run directories -------------------------------------------------------------

def _run_dir(path) -> Path:
    """Accept a run directory or its ``snapshots`` subdirectory."""
    p = Path(path)
    if p.name == "snapshots" and not (p / "manifest.json").exists():
        p = p.parent
    return p


def _run_config(run_dir: Path) -> RunConfig:
    man_path = run_dir / "manifest.json"
    try:
        manifest = json.loads(man_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SinkError(man_path, exc.strerror or str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{man_path}: not valid JSON ({exc.msg})") from None
    if "config" not in manifest:
        raise InputError(f"{man_path}: no configuration echo")
    return validate_config(manifest["config"])


def _load_states(run_dir: Path):
    cfg = _run_config(run_dir)
    init, _, params = build_initial(cfg)
    states = []
    for path in list_snapshots(run_dir):
        header, cols = read_snapshot(path)
        states.append(state_from_snapshot(header, cols, init.rho0))
    return states, params


def equally_spaced_triples(times: Sequence[float], rtol: float = SPACING_RTOL) -> List[int]:
    """Indices ``k`` such that snapshots ``k-1, k, k+1`` are equally spaced."""
    out = []
    for k in range(1, len(times) - 1):
        a, b = times[k] - times[k - 1], times[k + 1] - times[k]
        if a > 0 and b > 0 and abs(a - b) <= rtol * max(a, b):
            out.append(k)
    return out


# Subcommands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output.dir
    log.info("simulating config %s into %s", cfg.digest()[:12], out)
    res = simulate(cfg, out_dir=out)
    _emit({"out": str(out), "steps": res.steps, "final_time": res.state.t,
           "J_bound": res.J_bound, "Jmin": float(res.state.J.min()),
           "wall_time": res.wall_time})
    return EXIT_OK


def cmd_check_data(args) -> int:
    cfg = load_config(args.config)
    init, profile, params = build_initial(cfg)
    diag = build_diagnostics(cfg, init, params)
    report = validate_hypotheses(profile, init, diag.alpha, params, strict=args.strict)
    _emit(report.to_dict())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_dilation(args) -> int:
    cfg = load_config(args.config)
    d = cfg.studies.dilation
    rep = dilation_study(cfg.physics.params(), a=d.a, P_init=d.P_init, L=d.L, N=d.N,
                         cfl=d.cfl, T=d.T_end)
    base = rep.levels[0]
    ok = (base.J_err <= DILATION_J_TOL and base.P_err <= DILATION_P_TOL
          and DILATION_RATIO[0] <= rep.P_ratio <= DILATION_RATIO[1])
    _emit({"levels": [vars(lv) for lv in rep.levels], "P_ratio": rep.P_ratio, "pass": ok})
    return EXIT_OK


def cmd_mms(args) -> int:
    cfg = load_config(args.config)
    m = cfg.studies.mms
    rep = mms_study(cfg.physics.params(), levels=m.levels, L=m.L, T=m.T_end, cfl=m.cfl,
                    Krho=m.Krho, ell=m.ell)
    _emit({"levels": rep.levels, "errors": rep.errors, "steps": rep.steps,
           "order": rep.order, "pass": MMS_ORDER[0] <= rep.order <= MMS_ORDER[1]})
    return EXIT_OK


def cmd_residuals(args) -> int:
    run_dir = _run_dir(args.run)
    states, params = _load_states(run_dir)
    mids = equally_spaced_triples([s.t for s in states])
    if not mids:
        raise InputError(f"{run_dir}: no three equally spaced snapshots")
    rows = []
    for k in mids:
        fields = residual_fields(states[k - 1:k + 2], params)
        s1 = states[k]
        row = {"t": s1.t}
        for name in IDENTITIES:
            r = summarize_residual(name, fields[name], s1.t, s1.grid.dy)
            row[f"{name}_l2"] = r.l2
            row[f"{name}_linf"] = r.linf
        rows.append(row)
    _emit({"run": str(run_dir), "triples": rows})
    return EXIT_OK


def _paired(a: list, b: list) -> List[Tuple]:
    if len(a) != len(b):
        raise InputError(f"runs hold {len(a)} and {len(b)} snapshots")
    return list(zip(a, b))


def cmd_compare(args) -> int:
    states_a, _ = _load_states(_run_dir(args.run_a))
    states_b, _ = _load_states(_run_dir(args.run_b))
    sys.stdout.write("t,difference\n")
    for sa, sb in _paired(states_a, states_b):
        sys.stdout.write(f"{sa.t!r},{difference_functional(sa, sb)!r}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planar-mhd",
                                description="Lagrangian planar MHD solver and verification tools")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configured simulation")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: output.dir from the config)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check-data", help="report the hypothesis checks on the initial data")
    s.add_argument("config")
    s.add_argument("--strict", action="store_true",
                   help="require norms to converge under domain doubling")
    s.set_defaults(func=cmd_check_data)

    s = sub.add_parser("dilation-test", help="compare against the exact dilation flow")
    s.add_argument("config")
    s.set_defaults(func=cmd_dilation)

    s = sub.add_parser("mms", help="manufactured-solution convergence study")
    s.add_argument("config")
    s.set_defaults(func=cmd_mms)

    s = sub.add_parser("residuals", help="identity residuals on stored snapshots")
    s.add_argument("run", help="run directory or its snapshots directory")
    s.set_defaults(func=cmd_residuals)

    s = sub.add_parser("compare", help="difference functional between two runs")
    s.add_argument("run_a")
    s.add_argument("run_b")
    s.set_defaults(func=cmd_compare)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigSyntaxError, ConfigValidationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PlanarMHDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
