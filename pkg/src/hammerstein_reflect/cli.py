"""Command-line front end: kernel dumps, bounds, certificates and solutions.

Exit codes: 0 success, 2 configuration or domain error, 3 hypothesis
violation (including non-finite f on a certification box), 4 certificate
with no guaranteed solution, 5 solver non-convergence.
"""

from __future__ import annotations

import argparse
import datetime
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, oracles
from .bounds import beta_root, phi_upper, psi_lower
from .certifier import ThresholdSource, certify, check_cone_hypotheses, discrepancy_record, resolve_thresholds
from .config import ProblemConfig, load
from .errors import ConfigError, DomainError, EvaluationError, HypothesisViolation
from .kernel import QUARTER_PI, kernel_matrix
from .nonlinearity import shift_to_f
from .solver import SymmetricGrid, picard_solve, verify_solution

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_EMPTY = 4
EXIT_NONCONVERGENCE = 5


class CommandError(Exception):
    def __init__(self, code: int, payload: dict):
        super().__init__(payload.get("error", ""))
        self.code = code
        self.payload = payload


def _finite(obj):
    """Replace non-finite floats so the output stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "NaN" if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.floating):
        return _finite(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def format_csv(header, columns) -> str:
    buf = io.StringIO()
    data = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns])
    np.savetxt(buf, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CommandError(EXIT_CONFIG, {"error": f"cannot write {out}: {exc.strerror}", "kind": "OutputError"})


def _envelope(args, cfg: ProblemConfig, source: ThresholdSource) -> dict:
    env = {"config_sha256": cfg.sha256, "threshold_source": source.value}
    if not args.no_timestamp:
        env["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return env


def _source(args, cfg: ProblemConfig) -> ThresholdSource:
    if args.threshold_source is not None:
        return ThresholdSource.parse(args.threshold_source)
    return cfg.threshold_source


def _manual(args, cfg: ProblemConfig):
    m = args.manual_m if args.manual_m is not None else cfg.manual_m
    M = args.manual_M if args.manual_M is not None else cfg.manual_M
    return m, M


# --- commands ----------------------------------------------------------------


def cmd_kernel(args, cfg: ProblemConfig) -> int:
    n = args.grid or 101
    T = cfg.params.T
    axis = np.linspace(-T, T, n)
    tt, ss = np.meshgrid(axis, axis, indexing="ij")
    kk = kernel_matrix(cfg.params, axis, axis)
    _write(format_csv(["t", "s", "k"], [tt, ss, kk]), args.out)
    return EXIT_OK


def bounds_report(cfg: ProblemConfig, source: ThresholdSource, manual_m=None, manual_M=None, table_points=21) -> dict:
    params, strip = cfg.params, cfg.strip
    flags = check_cone_hypotheses(params, strip, cfg.cone)
    th = resolve_thresholds(params, strip, cfg.cone, cfg.g, source, manual_m, manual_M)
    report = {
        "problem": {"T": params.T, "omega": params.omega, "zeta": params.zeta, "strip": [strip.a, strip.b]},
        "cone": cfg.cone.value,
        "c": th.c,
        "m": th.m,
        "m_source": th.source.value,
        "M": th.M,
        "M_source": th.source.value,
        "notes": list(th.notes),
        "flags": flags,
    }
    if params.zeta > QUARTER_PI:
        report["beta"] = beta_root(params.zeta)
    y = np.linspace(-1.0, 1.0, table_points)
    report["tables"] = {
        "y": y.tolist(),
        "phi": np.asarray(phi_upper(params, y)).tolist(),
        "psi": np.asarray(psi_lower(params, strip, y)).tolist() if cfg.cone.value != "strictly-positive" else None,
    }
    if th.source is not ThresholdSource.ORACLE and cfg.g is None:
        sup_o = oracles.sup_abs_integral_oracle(params).value
        report["oracle_check"] = {"m": 1.0 / sup_o}
        if cfg.cone.value != "strictly-positive":
            report["oracle_check"]["M"] = 1.0 / oracles.inf_strip_integral_oracle(params, strip).value
    if cfg.reference:
        ref = {k: v for k, v in cfg.reference.items() if k in ("m", "M", "c")}
        report["discrepancies"] = discrepancy_record(ref, th, [])
    return report


def cmd_bounds(args, cfg: ProblemConfig) -> int:
    source = _source(args, cfg)
    report = bounds_report(cfg, source, *_manual(args, cfg), table_points=args.grid or 21)
    report.update(_envelope(args, cfg, source))
    _write(dump_json(report), args.out)
    return EXIT_OK


def cmd_certify(args, cfg: ProblemConfig) -> int:
    source = _source(args, cfg)
    m, M = _manual(args, cfg)
    problem = cfg.certification_problem()
    if args.grid:
        problem = type(problem)(**{**problem.__dict__, "box_grid": args.grid})
    cert = certify(problem, source, m, M, reference=cfg.reference or None)
    out = cert.to_dict()
    out.update(_envelope(args, cfg, source))
    _write(dump_json(out), args.out)
    return EXIT_OK if cert.solution_count > 0 else EXIT_EMPTY


def cmd_solve(args, cfg: ProblemConfig) -> int:
    source = _source(args, cfg)
    s = cfg.solver
    params = cfg.params
    grid = SymmetricGrid(params.T, args.nodes or s.nodes)
    f = shift_to_f(cfg.h, params.omega)

    diag = {"problem": {"T": params.T, "omega": params.omega, "h": cfg.h.to_source(), "f": f.to_source()}}
    cert_summary = None
    c = None
    try:
        if cfg.radii:
            cert = certify(cfg.certification_problem(), source, *_manual(args, cfg))
            cert_summary = {"ladder": cert.ladder, "solution_count": cert.solution_count,
                            "ladder_radii": [x.rho for x in cert.verdict.witnesses]}
            c = cert.thresholds.c
        else:
            check_cone_hypotheses(params, cfg.strip, cfg.cone)
            c = resolve_thresholds(params, cfg.strip, cfg.cone, cfg.g, ThresholdSource.CLOSED_FORM).c
    except (DomainError, HypothesisViolation, EvaluationError, ValueError) as exc:
        cert_summary = {"error": str(exc)}
    diag["certificate"] = cert_summary

    if s.u0 is not None:
        u0, u0_rule = s.u0, "configured"
    elif cert_summary and cert_summary.get("ladder_radii"):
        u0, u0_rule = cert_summary["ladder_radii"][0], "smallest ladder radius"
    else:
        u0, u0_rule = 1.0 / params.omega, "1/omega"

    sol = picard_solve(params, grid, cfg.g, f, u0, s.theta, s.tol, s.max_iter, s.ceiling, s.rule,
                       cfg.strip if c is not None else None, c)
    rep = verify_solution(params, cfg.h, sol)
    diag["solver"] = {
        "nodes": grid.N,
        "rule": s.rule,
        "theta": s.theta,
        "tol": s.tol,
        "u0": u0,
        "u0_rule": u0_rule,
        "status": sol.status,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "ode_defect": sol.ode_defect,
        "periodicity_gap": sol.periodicity_gap,
        "cone_margin": sol.cone_margin,
        "sup_norm": float(np.max(np.abs(sol.values))),
        "verification": {"ode_defect": rep.ode_defect, "periodicity_defect": rep.periodicity_defect,
                         "threshold": rep.threshold, "passed": rep.passed},
    }
    diag.update(_envelope(args, cfg, source))
    if args.out is None:
        _write(dump_json(diag), None)
    else:
        _write(format_csv(["t", "u"], [grid.nodes, sol.values]), args.out)
        _write(dump_json(diag), str(Path(args.out).with_suffix(".json")))
    return EXIT_OK if sol.converged else EXIT_NONCONVERGENCE


COMMANDS = {"kernel": cmd_kernel, "bounds": cmd_bounds, "certify": cmd_certify, "solve": cmd_solve}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="problem configuration (INI)")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--grid", type=int, metavar="N",
                        help="kernel: points per axis; bounds: table points; certify: box grid per axis")
    common.add_argument("--nodes", type=int, metavar="N", help="solver node count (odd)")
    common.add_argument("--threshold-source", choices=("closed-form", "oracle", "manual"))
    common.add_argument("--manual-m", type=float, metavar="X", help="manual threshold m")
    common.add_argument("--manual-M", type=float, metavar="Y", help="manual threshold M")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-identical output")

    parser = argparse.ArgumentParser(
        prog="hammerstein-reflect",
        description="Green's function, kernel bounds, existence certificates and Nystrom solutions "
        "for u'(t) = h(t, u(t), u(-t)) with u(-T) = u(T).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("kernel", parents=[common], help="dump k(t, s) on a grid as CSV")
    sub.add_parser("bounds", parents=[common], help="cone constant, thresholds and envelope tables as JSON")
    sub.add_parser("certify", parents=[common], help="evaluate index conditions and ladders as JSON")
    sub.add_parser("solve", parents=[common], help="Nystrom/Picard solution (CSV) and diagnostics (JSON)")
    return parser


def _error_payload(exc: Exception) -> dict:
    payload = {"error": str(exc), "kind": type(exc).__name__}
    if isinstance(exc, ConfigError):
        payload.update({"line": exc.line, "key": exc.key})
    return payload


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.grid is not None and args.grid < 1:
        return _fail(EXIT_CONFIG, {"error": "--grid must be >= 1", "kind": "UsageError"})
    if args.nodes is not None and (args.nodes < 3 or args.nodes % 2 == 0):
        return _fail(EXIT_CONFIG, {"error": "--nodes must be odd and >= 3", "kind": "UsageError"})
    try:
        cfg = load(args.config)
        return COMMANDS[args.command](args, cfg)
    except CommandError as exc:
        return _fail(exc.code, exc.payload)
    except (HypothesisViolation, EvaluationError) as exc:
        return _fail(EXIT_HYPOTHESIS, _error_payload(exc))
    except (ConfigError, DomainError, ValueError) as exc:
        return _fail(EXIT_CONFIG, _error_payload(exc))


def _fail(code: int, payload: dict) -> int:
    sys.stderr.write(dump_json(payload))
    return code


if __name__ == "__main__":
    sys.exit(main())
