"""Run configuration: strict YAML schema, validation, and normal form.

Schema (version 1).  A run config contains exactly one of ``scenario`` or
``problem``:

    schema: 1
    run:
      solver: direct | adiabatic | both     # default direct
      output_dir: out                       # optional
      emit_plots: false                     # optional
    scenario: fig2_gaussians

or, fully explicit:

    schema: 1
    run: {solver: both, output_dir: out}
    problem:
      probe:    {kind: gaussian, amplitude: 20, center: 0, width: 1}
      coupling: {kind: gaussian, amplitude: 20, center: 0, width: 10}
      medium:   {kappa_c: 1.0}
      tau_grid: {tau_min: -40, tau_max: 40, n_tau: 4096}
      zeta_grid: {zeta_max: 100, n_zeta: 2000, snapshot_stride: 50}
      solver_config: {atom_substeps: 4, unitarity_tol: 1e-6, max_field: 1e6}

A design config replaces scenario/problem with ``design``:

    design:
      target_probe: {kind: supergaussian, amplitude: 9, center: 0, width: 2, order: 6}
      baseline_v:   {kind: tanh_step, g_low: 400, g_high: 400, t_mid: 0, rise_time: 1}
      medium: {kappa_c: 1.0}
      depth: 50
      tau_grid: {tau_min: -40, tau_max: 40, n_tau: 4096}

Unknown keys anywhere are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .core import (
    EnvelopeSpec,
    EnvelopeSum,
    Gaussian,
    LinearRamp,
    MediumSpec,
    SuperGaussian,
    Tabulated,
    TanhStep,
    TauGrid,
    ZetaGrid,
)
from .direct import SolverConfig
from .errors import InvalidEnvelope, InvalidGrid, ParseError, ValidationError
from .shaping import DesignProblem

__all__ = ["RunConfig", "Problem", "parse_config", "parse_design_config",
           "normal_form", "serialize_config"]

SCHEMA_VERSION = 1
SOLVERS = ("direct", "adiabatic", "both")


@dataclass(frozen=True)
class Problem:
    probe: EnvelopeSpec
    coupling: EnvelopeSpec
    medium: MediumSpec
    tau_grid: TauGrid
    zeta_grid: ZetaGrid
    solver_config: SolverConfig = field(default_factory=SolverConfig)


@dataclass(frozen=True)
class RunConfig:
    solver: str = "direct"
    output_dir: str | None = None
    emit_plots: bool = False
    scenario: str | None = None
    problem: Problem | None = None


class _Node:
    """A mapping wrapper that tracks key consumption for strict parsing."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ValidationError(f"{path or 'document'} must be a mapping", key=path)
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def _full(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def take(self, key: str, kind, required: bool = False, default=None):
        if key not in self.data:
            if required:
                raise ValidationError(f"missing required key {self._full(key)}",
                                      key=self._full(key))
            self.seen.add(key)
            return default
        self.seen.add(key)
        value = self.data[key]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"{self._full(key)} must be a number",
                                      key=self._full(key))
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{self._full(key)} must be an integer",
                                      key=self._full(key))
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise ValidationError(f"{self._full(key)} must be a boolean",
                                      key=self._full(key))
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ValidationError(f"{self._full(key)} must be a string",
                                      key=self._full(key))
            return value
        if kind is list:
            if not isinstance(value, list):
                raise ValidationError(f"{self._full(key)} must be a list",
                                      key=self._full(key))
            return value
        if kind is dict:
            return _Node(value, self._full(key))
        raise AssertionError(f"unsupported kind {kind}")

    def finish(self) -> None:
        unknown = set(self.data) - self.seen
        if unknown:
            name = self._full(sorted(unknown)[0])
            raise ValidationError(f"unknown key {name}", key=name)


def _parse_envelope(node: _Node) -> EnvelopeSpec:
    kind = node.take("kind", str, required=True)
    try:
        if kind == "gaussian":
            spec = Gaussian(
                amplitude=node.take("amplitude", float, required=True),
                center=node.take("center", float, required=True),
                width=node.take("width", float, required=True),
            )
        elif kind == "supergaussian":
            spec = SuperGaussian(
                amplitude=node.take("amplitude", float, required=True),
                center=node.take("center", float, required=True),
                width=node.take("width", float, required=True),
                order=node.take("order", int, required=True),
            )
        elif kind == "linear_ramp":
            spec = LinearRamp(
                g_start=node.take("g_start", float, required=True),
                g_end=node.take("g_end", float, required=True),
                t_start=node.take("t_start", float, required=True),
                t_end=node.take("t_end", float, required=True),
                shoulder=node.take("shoulder", float, default=0.0),
            )
        elif kind == "tanh_step":
            spec = TanhStep(
                g_low=node.take("g_low", float, required=True),
                g_high=node.take("g_high", float, required=True),
                t_mid=node.take("t_mid", float, required=True),
                rise_time=node.take("rise_time", float, required=True),
            )
        elif kind == "tabulated":
            spec = Tabulated(
                tau=node.take("tau", list, required=True),
                values=node.take("values", list, required=True),
            )
        elif kind == "sum":
            parts = []
            for i, raw in enumerate(node.take("parts", list, required=True)):
                sub = _Node(raw, f"{node.path}.parts[{i}]")
                parts.append(_parse_envelope(sub))
                sub.finish()
            spec = EnvelopeSum(parts)
        else:
            raise ValidationError(f"unknown envelope kind {kind!r} at {node.path}",
                                  key=node.path)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad envelope at {node.path}: {exc}", key=node.path)
    node.finish()
    try:
        spec.validate()
    except InvalidEnvelope as exc:
        raise ValidationError(f"invalid envelope at {node.path}: {exc}", key=node.path)
    return spec


def _parse_medium(node: _Node) -> MediumSpec:
    kappa_c = node.take("kappa_c", float, required=True)
    kappa_p = node.take("kappa_p", float, default=1.0)
    node.finish()
    try:
        return MediumSpec(kappa_c=kappa_c, kappa_p=kappa_p)
    except InvalidGrid as exc:
        raise ValidationError(f"invalid medium at {node.path}: {exc}", key=node.path)


def _parse_tau_grid(node: _Node) -> TauGrid:
    grid = (
        node.take("tau_min", float, required=True),
        node.take("tau_max", float, required=True),
        node.take("n_tau", int, required=True),
    )
    node.finish()
    try:
        return TauGrid(*grid)
    except InvalidGrid as exc:
        raise ValidationError(f"invalid tau_grid at {node.path}: {exc}", key=node.path)


def _parse_zeta_grid(node: _Node) -> ZetaGrid:
    grid = (
        node.take("zeta_max", float, required=True),
        node.take("n_zeta", int, required=True),
        node.take("snapshot_stride", int, default=1),
    )
    node.finish()
    try:
        return ZetaGrid(*grid)
    except InvalidGrid as exc:
        raise ValidationError(f"invalid zeta_grid at {node.path}: {exc}", key=node.path)


def _parse_solver_config(node: _Node | None) -> SolverConfig:
    if node is None:
        return SolverConfig()
    cfg = dict(
        atom_substeps=node.take("atom_substeps", int, default=4),
        unitarity_tol=node.take("unitarity_tol", float, default=1e-6),
        max_field=node.take("max_field", float, default=1e6),
    )
    node.finish()
    try:
        return SolverConfig(**cfg)
    except InvalidGrid as exc:
        raise ValidationError(f"invalid solver_config at {node.path}: {exc}",
                              key=node.path)


def _load_document(text: str) -> dict:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        raise ParseError(f"config is not valid YAML: {exc}", line=line, column=column)
    if data is None:
        raise ParseError("config document is empty")
    if not isinstance(data, dict):
        raise ParseError("config document must be a mapping")
    return data


def _check_schema(root: _Node) -> None:
    version = root.take("schema", int, required=True)
    if version != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported schema version {version}, expected {SCHEMA_VERSION}",
            key="schema",
        )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run config document (strict: unknown keys fail)."""
    root = _Node(_load_document(text), "")
    _check_schema(root)

    solver = "direct"
    output_dir = None
    emit_plots = False
    if root.has("run"):
        run = root.take("run", dict)
        solver = run.take("solver", str, default="direct")
        if solver not in SOLVERS:
            raise ValidationError(
                f"run.solver must be one of {SOLVERS}, got {solver!r}", key="run.solver"
            )
        output_dir = run.take("output_dir", str, default=None)
        emit_plots = run.take("emit_plots", bool, default=False)
        run.finish()
    else:
        root.seen.add("run")

    has_scenario = root.has("scenario")
    has_problem = root.has("problem")
    if has_scenario == has_problem:
        raise ValidationError(
            "exactly one of 'scenario' or 'problem' must be present", key="scenario"
        )

    scenario = None
    problem = None
    if has_scenario:
        scenario = root.take("scenario", str)
        from .shaping import builtin_scenarios

        names = [s.name for s in builtin_scenarios()]
        if scenario not in names:
            raise ValidationError(
                f"unknown scenario {scenario!r}; known: {', '.join(names)}",
                key="scenario",
            )
    else:
        node = root.take("problem", dict)
        problem = Problem(
            probe=_parse_envelope(node.take("probe", dict, required=True)),
            coupling=_parse_envelope(node.take("coupling", dict, required=True)),
            medium=_parse_medium(node.take("medium", dict, required=True)),
            tau_grid=_parse_tau_grid(node.take("tau_grid", dict, required=True)),
            zeta_grid=_parse_zeta_grid(node.take("zeta_grid", dict, required=True)),
            solver_config=_parse_solver_config(
                node.take("solver_config", dict) if node.has("solver_config") else None
            ),
        )
        node.finish()
    root.finish()
    return RunConfig(
        solver=solver,
        output_dir=output_dir,
        emit_plots=emit_plots,
        scenario=scenario,
        problem=problem,
    )


def parse_design_config(text: str) -> tuple[DesignProblem, RunConfig]:
    """Parse a design config; returns the problem and run options."""
    root = _Node(_load_document(text), "")
    _check_schema(root)

    output_dir = None
    emit_plots = False
    if root.has("run"):
        run = root.take("run", dict)
        output_dir = run.take("output_dir", str, default=None)
        emit_plots = run.take("emit_plots", bool, default=False)
        run.finish()
    else:
        root.seen.add("run")

    node = root.take("design", dict, required=True)
    problem = DesignProblem(
        target_probe=_parse_envelope(node.take("target_probe", dict, required=True)),
        baseline_v=_parse_envelope(node.take("baseline_v", dict, required=True)),
        medium=_parse_medium(node.take("medium", dict, required=True)),
        depth=node.take("depth", float, required=True),
        tau_grid=_parse_tau_grid(node.take("tau_grid", dict, required=True)),
    )
    if problem.depth < 0:
        raise ValidationError("design.depth must be >= 0", key="design.depth")
    node.finish()
    root.finish()
    return problem, RunConfig(output_dir=output_dir, emit_plots=emit_plots)


# ---------------------------------------------------------------------------
# Normal form
# ---------------------------------------------------------------------------


def _envelope_dict(spec: EnvelopeSpec) -> dict:
    if isinstance(spec, Gaussian):
        return {"kind": "gaussian", "amplitude": spec.amplitude,
                "center": spec.center, "width": spec.width}
    if isinstance(spec, SuperGaussian):
        return {"kind": "supergaussian", "amplitude": spec.amplitude,
                "center": spec.center, "width": spec.width, "order": spec.order}
    if isinstance(spec, LinearRamp):
        return {"kind": "linear_ramp", "g_start": spec.g_start, "g_end": spec.g_end,
                "t_start": spec.t_start, "t_end": spec.t_end,
                "shoulder": spec.shoulder}
    if isinstance(spec, TanhStep):
        return {"kind": "tanh_step", "g_low": spec.g_low, "g_high": spec.g_high,
                "t_mid": spec.t_mid, "rise_time": spec.rise_time}
    if isinstance(spec, Tabulated):
        return {"kind": "tabulated", "tau": list(spec.tau),
                "values": list(spec.values)}
    if isinstance(spec, EnvelopeSum):
        return {"kind": "sum", "parts": [_envelope_dict(p) for p in spec.parts]}
    raise AssertionError(f"unknown envelope type {type(spec)}")


def normal_form(config: RunConfig) -> dict:
    """Canonical dict representation; parsing its dump reproduces the config."""
    doc: dict = {
        "schema": SCHEMA_VERSION,
        "run": {
            "solver": config.solver,
            "emit_plots": config.emit_plots,
        },
    }
    if config.output_dir is not None:
        doc["run"]["output_dir"] = config.output_dir
    if config.scenario is not None:
        doc["scenario"] = config.scenario
    else:
        p = config.problem
        doc["problem"] = {
            "probe": _envelope_dict(p.probe),
            "coupling": _envelope_dict(p.coupling),
            "medium": {"kappa_c": p.medium.kappa_c, "kappa_p": p.medium.kappa_p},
            "tau_grid": {
                "tau_min": p.tau_grid.tau_min,
                "tau_max": p.tau_grid.tau_max,
                "n_tau": p.tau_grid.n_tau,
            },
            "zeta_grid": {
                "zeta_max": p.zeta_grid.zeta_max,
                "n_zeta": p.zeta_grid.n_zeta,
                "snapshot_stride": p.zeta_grid.snapshot_stride,
            },
            "solver_config": {
                "atom_substeps": p.solver_config.atom_substeps,
                "unitarity_tol": p.solver_config.unitarity_tol,
                "max_field": p.solver_config.max_field,
            },
        }
    return doc


def serialize_config(config: RunConfig) -> str:
    return yaml.safe_dump(normal_form(config), sort_keys=True)
