"""Command-line front end.

Subcommands: simulate, adiabatic, compare, design, scenarios, metrics.
Failures exit nonzero and print a machine-readable JSON error record to
stderr.  Runs are deterministic: the same config produces bit-identical
numeric output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .config import (
    RunConfig,
    normal_form,
    parse_config,
    parse_design_config,
    serialize_config,
)
from .core import FieldState, Tabulated, sample_envelope, pulse_metrics
from .diagnostics import cross_validate, reconstruct_series
from .direct import propagate
from .adiabatic import build_characteristics
from .errors import AdiabatonError, ValidationError
from .persist import load_result, metrics_document, persist_result
from .shaping import DesignProblem, builtin_scenarios, design_coupling, scenario_by_name

__all__ = ["run_command", "main"]


def _error_record(exc: AdiabatonError) -> str:
    record = {"error": {"code": exc.code, "message": str(exc)}}
    if getattr(exc, "key", None):
        record["error"]["key"] = exc.key
    if getattr(exc, "line", None):
        record["error"]["line"] = exc.line
        record["error"]["column"] = exc.column
    return json.dumps(record)


def _load_run_setup(args) -> tuple[RunConfig, dict]:
    """Resolve --config/--scenario into a RunConfig and its echo dict."""
    if bool(args.config) == bool(args.scenario):
        raise ValidationError("provide exactly one of --config or --scenario")
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        config = parse_config(text)
    else:
        config = parse_config(f"schema: 1\nscenario: {args.scenario}\n")
    out_dir = args.out or config.output_dir
    emit = bool(args.emit_plots or config.emit_plots)
    config = RunConfig(
        solver=config.solver,
        output_dir=out_dir,
        emit_plots=emit,
        scenario=config.scenario,
        problem=config.problem,
    )
    return config, normal_form(config)


def _problem_pieces(config: RunConfig):
    if config.scenario is not None:
        sc = scenario_by_name(config.scenario)
        fields = sc.input_fields()
        return fields, sc.medium, sc.tau_grid, sc.zeta_grid, sc.solver
    p = config.problem
    fields = FieldState(
        zeta=0.0,
        g_p=sample_envelope(p.probe, p.tau_grid),
        g_c=sample_envelope(p.coupling, p.tau_grid),
    )
    return fields, p.medium, p.tau_grid, p.zeta_grid, p.solver_config


def _require_out(config: RunConfig) -> Path:
    if not config.output_dir:
        raise ValidationError("an output directory is required (--out or run.output_dir)")
    return Path(config.output_dir)


def _cmd_simulate(args) -> int:
    config, echo = _load_run_setup(args)
    out = _require_out(config)
    fields, medium, tau_grid, zeta_grid, solver_cfg = _problem_pieces(config)
    result = propagate(fields, medium, tau_grid, zeta_grid, solver_cfg)
    persist_result(result, out, emit_plots=config.emit_plots, config_echo=echo)
    if not result.valid:
        print(_error_record_from_result(result), file=sys.stderr)
        return 1
    print(f"simulate: wrote {len(result.snapshots)} snapshots to {out}")
    return 0


def _error_record_from_result(result) -> str:
    err = result.error or {"code": "SOLVER_ERROR", "message": "run flagged invalid"}
    return json.dumps({"error": err})


def _cmd_adiabatic(args) -> int:
    config, echo = _load_run_setup(args)
    out = _require_out(config)
    fields, medium, tau_grid, zeta_grid, _ = _problem_pieces(config)
    chi = build_characteristics(fields, medium, tau_grid)
    result = reconstruct_series(chi, tau_grid, zeta_grid, medium)
    persist_result(result, out, emit_plots=config.emit_plots, config_echo=echo)
    print(f"adiabatic: wrote {len(result.snapshots)} snapshots to {out}")
    return 0


def _cmd_compare(args) -> int:
    config, echo = _load_run_setup(args)
    out = _require_out(config)
    fields, medium, tau_grid, zeta_grid, solver_cfg = _problem_pieces(config)

    direct = propagate(fields, medium, tau_grid, zeta_grid, solver_cfg)
    chi = build_characteristics(fields, medium, tau_grid)
    adiabatic = reconstruct_series(chi, tau_grid, zeta_grid, medium)
    persist_result(direct, out / "direct", emit_plots=config.emit_plots, config_echo=echo)
    persist_result(adiabatic, out / "adiabatic", emit_plots=config.emit_plots,
                   config_echo=echo)

    rows = cross_validate(direct, chi)
    doc = {
        "schema": 1,
        "snapshots": [
            {
                "zeta": r.zeta,
                "probe_err": None if r.flagged else r.probe_err,
                "coupling_err": None if r.flagged else r.coupling_err,
                "flagged": r.flagged,
            }
            for r in rows
        ],
        "max_probe_err": max((r.probe_err for r in rows if not r.flagged), default=None),
        "max_coupling_err": max((r.coupling_err for r in rows if not r.flagged),
                                default=None),
    }
    (out / "cross_validation.json").write_text(json.dumps(doc, indent=2) + "\n")
    if not direct.valid:
        print(_error_record_from_result(direct), file=sys.stderr)
        return 1
    print(
        f"compare: max probe err {doc['max_probe_err']:.3e}, "
        f"max coupling err {doc['max_coupling_err']:.3e}"
    )
    return 0


def _cmd_design(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    problem, run_opts = parse_design_config(text)
    out_dir = args.out or run_opts.output_dir
    if not out_dir:
        raise ValidationError("an output directory is required (--out or run.output_dir)")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    design = design_coupling(
        problem.target_probe, problem.baseline_v, problem.medium,
        problem.depth, problem.tau_grid,
    )
    doc = {
        "schema": 1,
        "depth": problem.depth,
        "medium": {"kappa_c": problem.medium.kappa_c, "kappa_p": problem.medium.kappa_p},
        "feasibility_margin": design.feasibility_margin,
        "shock_zeta": design.shock_zeta,
        "tau": list(map(float, problem.tau_grid.taus)),
        "input_probe": list(map(float, design.input_probe.values)),
        "input_coupling": list(map(float, design.input_coupling.values)),
    }
    if design.predicted_output is not None:
        doc["predicted_probe"] = list(np.abs(design.predicted_output.g_p).astype(float))
        doc["predicted_coupling"] = list(np.abs(design.predicted_output.g_c).astype(float))

    if args.direct_verify:
        grid = problem.tau_grid
        fields = FieldState(
            zeta=0.0,
            g_p=sample_envelope(design.input_probe, grid),
            g_c=sample_envelope(design.input_coupling, grid),
        )
        from .core import ZetaGrid

        n_zeta = max(1, int(round(problem.depth / 0.1)))
        result = propagate(fields, problem.medium, grid,
                           ZetaGrid(problem.depth, n_zeta, n_zeta))
        if not result.valid:
            print(_error_record_from_result(result), file=sys.stderr)
            return 1
        target = sample_envelope(problem.target_probe, grid)
        out_probe = np.abs(result.snapshots[-1].fields.g_p)
        err = float(np.linalg.norm(out_probe - target) / np.linalg.norm(target))
        m = pulse_metrics(out_probe, grid)
        doc["direct_verification"] = {
            "target_l2_error": err,
            "top_flatness": m.top_flatness,
            "n_local_maxima": m.n_local_maxima,
        }

    (out / "design.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(
        f"design: margin {design.feasibility_margin:.3f}, "
        f"shock {design.shock_zeta}, wrote {out / 'design.json'}"
    )
    return 0


def _cmd_scenarios(args) -> int:
    rows = []
    for sc in builtin_scenarios():
        rows.append(
            {
                "name": sc.name,
                "expected": sc.expected,
                "kappa_c": sc.medium.kappa_c,
                "tau_window": [sc.tau_grid.tau_min, sc.tau_grid.tau_max],
                "n_tau": sc.tau_grid.n_tau,
                "zeta_max": sc.zeta_grid.zeta_max,
                "n_zeta": sc.zeta_grid.n_zeta,
                "probe": type(sc.probe).__name__,
                "coupling": type(sc.coupling).__name__,
            }
        )
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        header = f"{'name':<24}{'expected':<18}{'kappa_c':>8}{'zeta_max':>10}{'n_tau':>7}"
        print(header)
        print("-" * len(header))
        for r in rows:
            print(
                f"{r['name']:<24}{r['expected']:<18}{r['kappa_c']:>8.3g}"
                f"{r['zeta_max']:>10.3g}{r['n_tau']:>7d}"
            )
    return 0


def _cmd_metrics(args) -> int:
    result = load_result(args.result)
    doc = metrics_document(result)
    text = json.dumps(doc, indent=2)
    print(text)
    if args.write:
        (Path(args.result) / "metrics.json").write_text(text + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adiabaton",
        description="Simulate and shape resonant pulse pairs in a CPT lambda medium.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--config", help="YAML run config")
        p.add_argument("--scenario", help="built-in scenario name")
        p.add_argument("--out", help="output directory")
        p.add_argument("--emit-plots", action="store_true",
                       help="also write gnuplot scripts")

    p = sub.add_parser("simulate", help="direct depth march")
    add_run_args(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("adiabatic", help="characteristic-solution snapshots")
    add_run_args(p)
    p.set_defaults(func=_cmd_adiabatic)

    p = sub.add_parser("compare", help="both solvers plus cross-validation")
    add_run_args(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("design", help="inverse design of the coupling envelope")
    p.add_argument("--config", required=True, help="YAML design config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--direct-verify", action="store_true",
                   help="verify the design with a direct solver run")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("scenarios", help="list built-in scenarios")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_scenarios)

    p = sub.add_parser("metrics", help="recompute diagnostics from a persisted result")
    p.add_argument("--result", required=True, help="persisted result directory")
    p.add_argument("--write", action="store_true", help="rewrite metrics.json")
    p.set_defaults(func=_cmd_metrics)
    return parser


def run_command(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except AdiabatonError as exc:
        print(_error_record(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": {"code": "IO_ERROR", "message": str(exc)}}),
              file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
