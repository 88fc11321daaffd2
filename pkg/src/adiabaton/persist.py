"""Result persistence: tabular snapshots, metrics document, manifest.

Text-first storage: snapshots are tab-separated tables with a header row
and 17-significant-digit decimals (lossless for doubles), the metrics
document and manifest are JSON.  Files are written to a temporary name and
renamed into place.  When plot emission is requested, gnuplot scripts
reproducing the usual envelope-evolution, input/output and coherence-map
views are written next to the data.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from ._version import __version__
from .core import MediumSpec, TauGrid, ZetaGrid, mixing_angle, photon_invariant, pulse_metrics
from .direct import SimulationResult, Snapshot, SolverConfig
from .errors import DegeneratePulse, IoError

__all__ = ["persist_result", "load_result", "metrics_document"]

SNAPSHOT_COLUMNS = (
    "tau",
    "gp_re", "gp_im", "gc_re", "gc_im",
    "a1_re", "a1_im", "a2_re", "a2_im", "a3_re", "a3_im",
    "theta", "v", "rho21_abs",
)
FMT = "%.17g"


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        tmp.write_text(data, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}")


def _snapshot_table(snap: Snapshot, taus: np.ndarray, medium: MediumSpec) -> str:
    theta = mixing_angle(snap.fields)
    v = photon_invariant(snap.fields, medium)
    rho21 = np.abs(np.conj(snap.atoms.a2) * snap.atoms.a1)
    cols = np.column_stack(
        [
            taus,
            snap.fields.g_p.real, snap.fields.g_p.imag,
            snap.fields.g_c.real, snap.fields.g_c.imag,
            snap.atoms.a1.real, snap.atoms.a1.imag,
            snap.atoms.a2.real, snap.atoms.a2.imag,
            snap.atoms.a3.real, snap.atoms.a3.imag,
            theta, v, rho21,
        ]
    )
    lines = ["\t".join(SNAPSHOT_COLUMNS)]
    for row in cols:
        lines.append("\t".join(FMT % x for x in row))
    return "\n".join(lines) + "\n"


def _metrics_for_envelope(amp: np.ndarray, grid: TauGrid) -> dict | None:
    try:
        m = pulse_metrics(amp, grid)
    except DegeneratePulse:
        return None
    return {
        "peak": m.peak,
        "fwhm": m.fwhm,
        "energy": m.energy,
        "centroid": m.centroid,
        "n_local_maxima": m.n_local_maxima,
        "top_flatness": m.top_flatness,
    }


def metrics_document(result: SimulationResult) -> dict:
    """All pulse metrics and diagnostics scalars of a result."""
    from .diagnostics import build_report
    from .shaping import compression_report

    grid = result.tau_grid
    per_snapshot = []
    for snap in result.snapshots:
        per_snapshot.append(
            {
                "zeta": snap.zeta,
                "conservation_residual": snap.conservation_residual,
                "adiabaticity_max": snap.adiabaticity_max,
                "unitarity_residual": snap.unitarity_residual,
                "probe": _metrics_for_envelope(np.abs(snap.fields.g_p), grid),
                "coupling": _metrics_for_envelope(np.abs(snap.fields.g_c), grid),
            }
        )
    report = build_report(result)
    doc = {
        "schema": 1,
        "per_snapshot": per_snapshot,
        "diagnostics": {
            "conservation_residual_max": report.conservation_residual_max,
            "unitarity_residual_max": report.unitarity_residual_max,
            "adiabaticity_max": report.adiabaticity_max,
            "coherence_localization": report.coherence_localization,
        },
    }
    try:
        comp = compression_report(result)
        doc["compression"] = {
            "fwhm_in": comp.fwhm_in,
            "fwhm_out": comp.fwhm_out,
            "compression_factor": comp.compression_factor,
            "energy_ratio": comp.energy_ratio,
        }
    except DegeneratePulse:
        doc["compression"] = None
    return doc


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def persist_result(
    result: SimulationResult,
    directory: str | Path,
    emit_plots: bool = False,
    config_echo: dict | None = None,
) -> Path:
    """Write snapshots, metrics and manifest; returns the manifest path."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}")

    taus = result.tau_grid.taus
    names = []
    for i, snap in enumerate(result.snapshots):
        name = f"snapshot_{i:04d}.tsv"
        _atomic_write(out / name, _snapshot_table(snap, taus, result.medium))
        names.append(name)

    _atomic_write(out / "metrics.json",
                  json.dumps(metrics_document(result), indent=2) + "\n")
    names.append("metrics.json")

    if emit_plots:
        names.extend(_write_plot_inputs(result, out))
        names.extend(_write_plot_scripts(result, out))

    files = [
        {"name": n, "sha256": _sha256(out / n), "bytes": (out / n).stat().st_size}
        for n in names
    ]
    manifest = {
        "tool": "adiabaton",
        "version": __version__,
        "schema": 1,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "run": dict(result.manifest),
        "valid": result.valid,
        "error": result.error,
        "grids": {
            "tau_grid": {
                "tau_min": result.tau_grid.tau_min,
                "tau_max": result.tau_grid.tau_max,
                "n_tau": result.tau_grid.n_tau,
            },
            "zeta_grid": {
                "zeta_max": result.zeta_grid.zeta_max,
                "n_zeta": result.zeta_grid.n_zeta,
                "snapshot_stride": result.zeta_grid.snapshot_stride,
            },
            "medium": {
                "kappa_c": result.medium.kappa_c,
                "kappa_p": result.medium.kappa_p,
            },
        },
        "snapshot_zetas": [s.zeta for s in result.snapshots],
        "config": config_echo,
        "files": files,
    }
    path = out / "manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2) + "\n")
    return path


def load_result(directory: str | Path) -> SimulationResult:
    """Rebuild a SimulationResult from a persisted directory.

    Numeric fields round-trip exactly (17 significant digits).
    """
    from .core import AtomState, FieldState

    out = Path(directory)
    try:
        manifest = json.loads((out / "manifest.json").read_text())
        metrics = json.loads((out / "metrics.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot load result from {out}: {exc}")

    g = manifest["grids"]
    tau_grid = TauGrid(**g["tau_grid"])
    zeta_grid = ZetaGrid(**g["zeta_grid"])
    medium = MediumSpec(**g["medium"])

    snapshots = []
    snap_files = sorted(
        f["name"] for f in manifest["files"] if f["name"].startswith("snapshot_")
    )
    for name, zeta, per in zip(
        snap_files, manifest["snapshot_zetas"], metrics["per_snapshot"]
    ):
        table = np.loadtxt(out / name, skiprows=1)
        fields = FieldState(
            zeta=zeta,
            g_p=table[:, 1] + 1j * table[:, 2],
            g_c=table[:, 3] + 1j * table[:, 4],
        )
        atoms = AtomState(
            a1=table[:, 5] + 1j * table[:, 6],
            a2=table[:, 7] + 1j * table[:, 8],
            a3=table[:, 9] + 1j * table[:, 10],
        )
        snapshots.append(
            Snapshot(
                zeta=zeta,
                fields=fields,
                atoms=atoms,
                conservation_residual=per["conservation_residual"],
                adiabaticity_max=per["adiabaticity_max"],
                unitarity_residual=per["unitarity_residual"],
            )
        )
    cfg_echo = manifest["run"].get("config", {}) or {}
    config = SolverConfig(
        atom_substeps=cfg_echo.get("atom_substeps", 4),
        unitarity_tol=cfg_echo.get("unitarity_tol", 1e-6),
        max_field=cfg_echo.get("max_field", 1e6),
    )
    return SimulationResult(
        tau_grid=tau_grid,
        zeta_grid=zeta_grid,
        medium=medium,
        snapshots=tuple(snapshots),
        config=config,
        manifest=manifest["run"],
        valid=manifest["valid"],
        error=manifest["error"],
    )


# ---------------------------------------------------------------------------
# Plot scripts (gnuplot)
# ---------------------------------------------------------------------------


def _write_plot_inputs(result: SimulationResult, out: Path) -> list[str]:
    # coherence map as a matrix file: rows = snapshots, columns = tau
    rows = [np.abs(np.conj(s.atoms.a2) * s.atoms.a1) for s in result.snapshots]
    m = np.vstack(rows)
    lines = []
    for row in m:
        lines.append("\t".join(FMT % x for x in row))
    _atomic_write(out / "coherence.tsv", "\n".join(lines) + "\n")
    return ["coherence.tsv"]


def _write_plot_scripts(result: SimulationResult, out: Path) -> list[str]:
    n = len(result.snapshots)
    picks = sorted(set([0, n // 3, 2 * n // 3, n - 1]))
    taus = result.tau_grid
    zetas = [result.snapshots[i].zeta for i in picks]

    evolution = [
        "# envelope evolution: |g_p| and |g_c| at a ladder of depths",
        "set terminal pngcairo size 1000,700",
        "set output 'evolution.png'",
        "set xlabel 'tau (units of T_p)'",
        "set ylabel 'normalized Rabi frequency'",
        "set key top right",
        "plot \\",
    ]
    parts = []
    for i, z in zip(picks, zetas):
        f = f"snapshot_{i:04d}.tsv"
        parts.append(
            f"  '{f}' skip 1 using 1:(sqrt($2**2+$3**2)) with lines title 'g_p z={z:g}', \\"
        )
        parts.append(
            f"  '{f}' skip 1 using 1:(sqrt($4**2+$5**2)) with lines dashtype 2 title 'g_c z={z:g}', \\"
        )
    parts[-1] = parts[-1].rstrip(", \\")
    evolution.extend(parts)

    inout = [
        "# input vs output probe and coupling envelopes",
        "set terminal pngcairo size 1000,500",
        "set output 'inout.png'",
        "set xlabel 'tau (units of T_p)'",
        "set ylabel 'normalized Rabi frequency'",
        f"plot 'snapshot_0000.tsv' skip 1 using 1:(sqrt($2**2+$3**2)) with lines title 'g_p in', \\",
        f"     'snapshot_{n-1:04d}.tsv' skip 1 using 1:(sqrt($2**2+$3**2)) with lines title 'g_p out', \\",
        f"     'snapshot_0000.tsv' skip 1 using 1:(sqrt($4**2+$5**2)) with lines dashtype 2 title 'g_c in', \\",
        f"     'snapshot_{n-1:04d}.tsv' skip 1 using 1:(sqrt($4**2+$5**2)) with lines dashtype 2 title 'g_c out'",
    ]

    zmax = result.snapshots[-1].zeta
    coherence = [
        "# |rho21| over (tau, zeta)",
        "set terminal pngcairo size 900,600",
        "set output 'coherence.png'",
        "set xlabel 'tau (units of T_p)'",
        "set ylabel 'zeta'",
        "set view map",
        f"set xrange [{taus.tau_min}:{taus.tau_max}]",
        f"set yrange [0:{zmax}]",
        "splot 'coherence.tsv' matrix "
        f"using ($1*{taus.dtau}+{taus.tau_min}):($2*{zmax/max(n-1,1)}):3 "
        "with image notitle",
    ]

    _atomic_write(out / "evolution.gp", "\n".join(evolution) + "\n")
    _atomic_write(out / "inout.gp", "\n".join(inout) + "\n")
    _atomic_write(out / "coherence.gp", "\n".join(coherence) + "\n")
    return ["evolution.gp", "inout.gp", "coherence.gp"]
