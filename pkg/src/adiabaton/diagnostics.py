"""Quantitative checks tying the two solvers together.

Conservation and unitarity residuals, direct-vs-characteristic
cross-validation, edge-steepness tracking, the Raman-coherence map, and a
self-convergence harness for the depth march.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .adiabatic import CharacteristicField, build_characteristics, reconstruct
from .core import (
    FieldState,
    MediumSpec,
    TauGrid,
    ZetaGrid,
    photon_invariant,
    pulse_metrics,
    sample_envelope,
)
from .direct import SimulationResult, Snapshot, SolverConfig, propagate
from .errors import DegeneratePulse, InvalidGrid, MultivaluedError, NonConvergent

__all__ = [
    "CrossValidation",
    "EdgeSlopes",
    "ConvergenceStudy",
    "DiagnosticsReport",
    "conservation_residual",
    "copropagation_lag",
    "cross_validate",
    "edge_slopes",
    "coherence_map",
    "convergence_study",
    "reconstruct_series",
    "build_report",
]

COHERENCE_THRESHOLD = 0.01  # |rho21| above which a cell counts as excited


def conservation_residual(result: SimulationResult) -> float:
    """Largest relative pointwise drift of V across the recorded snapshots."""
    if len(result.snapshots) < 2:
        raise InvalidGrid("conservation residual needs at least two snapshots")
    v0 = photon_invariant(result.snapshots[0].fields, result.medium)
    scale = float(np.max(v0))
    if scale == 0.0:
        scale = 1.0
    worst = 0.0
    for snap in result.snapshots[1:]:
        v = photon_invariant(snap.fields, result.medium)
        worst = max(worst, float(np.max(np.abs(v - v0))) / scale)
    return worst


@dataclass(frozen=True)
class CrossValidation:
    zeta: float
    probe_err: float
    coupling_err: float
    flagged: bool  # post-shock snapshot, not comparable


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a))
    num = float(np.linalg.norm(a - b))
    if denom == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / denom


def cross_validate(
    direct: SimulationResult, chi: CharacteristicField
) -> list[CrossValidation]:
    """Per-snapshot relative L2 distance between the two solvers.

    Snapshots past a characteristic crossing are flagged instead of
    compared.
    """
    out = []
    for snap in direct.snapshots:
        try:
            fields, _ = reconstruct(chi, snap.zeta, direct.tau_grid)
        except MultivaluedError:
            out.append(
                CrossValidation(zeta=snap.zeta, probe_err=float("nan"),
                                coupling_err=float("nan"), flagged=True)
            )
            continue
        out.append(
            CrossValidation(
                zeta=snap.zeta,
                probe_err=_rel_l2(np.abs(snap.fields.g_p), np.abs(fields.g_p)),
                coupling_err=_rel_l2(np.abs(snap.fields.g_c), np.abs(fields.g_c)),
                flagged=False,
            )
        )
    return out


@dataclass(frozen=True)
class EdgeSlopes:
    leading_max_slope: float
    trailing_max_slope: float


def edge_slopes(fields: FieldState, grid: TauGrid) -> EdgeSlopes:
    """Steepest probe-envelope slope before (leading) and after (trailing)
    the peak.  Requires a single dominant pulse."""
    amp = np.abs(fields.g_p)
    metrics = pulse_metrics(amp, grid)  # raises DegeneratePulse on zero probe
    if metrics.n_local_maxima != 1:
        raise DegeneratePulse(
            f"edge slopes need a single-peaked probe, found {metrics.n_local_maxima} peaks"
        )
    slope = np.gradient(amp, grid.dtau)
    ipk = int(np.argmax(amp))
    return EdgeSlopes(
        leading_max_slope=float(np.max(np.abs(slope[: ipk + 1]))),
        trailing_max_slope=float(np.max(np.abs(slope[ipk:]))),
    )


def coherence_map(result: SimulationResult) -> tuple[np.ndarray, float]:
    """|rho21| = |a2* a1| over (snapshot, tau), plus the fraction of cells
    above the excitation threshold."""
    rows = [np.abs(np.conj(s.atoms.a2) * s.atoms.a1) for s in result.snapshots]
    m = np.vstack(rows)
    fraction = float(np.count_nonzero(m > COHERENCE_THRESHOLD) / m.size)
    return m, fraction


def copropagation_lag(result: SimulationResult) -> list[float | None]:
    """Cross-correlation lag (in grid units) between the probe and coupling
    flux perturbations, one value per snapshot.

    The conservation law makes the flux perturbations pointwise
    complementary, so co-moving envelopes give lag 0.  Snapshots whose
    perturbation is still negligible yield None.
    """
    medium = result.medium
    first = result.snapshots[0].fields
    ip0 = np.abs(first.g_p) ** 2 / medium.kappa_p
    ic0 = np.abs(first.g_c) ** 2 / medium.kappa_c
    margin = min(40, first.n_tau // 8)
    lags: list[float | None] = []
    for snap in result.snapshots:
        dp = np.abs(snap.fields.g_p) ** 2 / medium.kappa_p - ip0
        dc = np.abs(snap.fields.g_c) ** 2 / medium.kappa_c - ic0
        if np.linalg.norm(dp) < 1e-6 * np.linalg.norm(ip0):
            lags.append(None)
            continue
        corr = np.array(
            [
                np.dot(dp[margin:-margin], -dc[margin + k : dc.size - margin + k])
                for k in range(-margin, margin + 1)
            ]
        )
        k0 = int(np.argmax(corr))
        frac = 0.0
        if 0 < k0 < corr.size - 1:
            denom = corr[k0 - 1] - 2.0 * corr[k0] + corr[k0 + 1]
            if denom != 0.0:
                frac = 0.5 * (corr[k0 - 1] - corr[k0 + 1]) / denom
        lags.append(float(k0 - margin + frac))
    return lags


def reconstruct_series(
    chi: CharacteristicField,
    tau_grid: TauGrid,
    zeta_grid: ZetaGrid,
    medium: MediumSpec,
) -> SimulationResult:
    """Characteristic-solution snapshots packaged like a direct run.

    The unitarity column reports the reconstruction's own norm excess
    |a3|^2 (the amplitudes are normalized only to first adiabatic order).
    """
    from .adiabatic import adiabaticity_ratio

    t0 = time.perf_counter()
    v0 = chi.v
    scale = float(np.max(v0))
    if scale == 0.0:
        scale = 1.0
    zetas = [
        step * zeta_grid.dzeta
        for step in range(0, zeta_grid.n_zeta + 1)
        if step % zeta_grid.snapshot_stride == 0 or step == zeta_grid.n_zeta
    ]
    snapshots = []
    for z in zetas:
        fields, atoms = reconstruct(chi, z, tau_grid)
        v = photon_invariant(fields, medium)
        snapshots.append(
            Snapshot(
                zeta=z,
                fields=fields,
                atoms=atoms,
                conservation_residual=float(np.max(np.abs(v - v0))) / scale,
                adiabaticity_max=float(np.max(adiabaticity_ratio(fields, tau_grid))),
                unitarity_residual=float(np.max(np.abs(atoms.norm_sq() - 1.0))),
            )
        )
    manifest = {
        "solver": "adiabatic",
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "config": {},
        "wall_time_s": time.perf_counter() - t0,
    }
    return SimulationResult(
        tau_grid=tau_grid,
        zeta_grid=zeta_grid,
        medium=medium,
        snapshots=tuple(snapshots),
        config=SolverConfig(),
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# Convergence harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceStudy:
    resolutions: tuple
    errors: tuple  # successive-refinement errors, len = len(resolutions) - 1
    orders: tuple  # observed orders, len = len(resolutions) - 2
    exact: bool  # errors at rounding level throughout

    def min_order(self) -> float:
        return min(self.orders) if self.orders else float("inf")


STUDY_UNITARITY_TOL = 1e-2  # coarse rungs only guard against blowup
ROUNDING_FLOOR = 1e-12


def convergence_study(scenario, resolutions, zeta_max: float | None = None) -> ConvergenceStudy:
    """Richardson-style observed order under simultaneous grid halving.

    Each resolution is (n_tau, n_zeta); successive tau grids must nest
    (n_tau - 1 doubling) so final states can be compared on the coarse
    nodes.  The observed order is log2 of the ratio of successive
    refinement errors.
    """
    if len(resolutions) < 3:
        raise InvalidGrid("convergence study needs at least three resolutions")
    for (n_a, m_a), (n_b, m_b) in zip(resolutions, resolutions[1:]):
        if n_b - 1 != 2 * (n_a - 1) or m_b != 2 * m_a:
            raise InvalidGrid("resolutions must halve both steps simultaneously")

    z_max = zeta_max if zeta_max is not None else scenario.zeta_grid.zeta_max
    finals = []
    for n_tau, n_zeta in resolutions:
        grid = TauGrid(scenario.tau_grid.tau_min, scenario.tau_grid.tau_max, n_tau)
        fields = FieldState(
            zeta=0.0,
            g_p=sample_envelope(scenario.probe, grid),
            g_c=sample_envelope(scenario.coupling, grid),
        )
        config = SolverConfig(
            atom_substeps=scenario.solver.atom_substeps,
            unitarity_tol=max(scenario.solver.unitarity_tol, STUDY_UNITARITY_TOL),
            max_field=scenario.solver.max_field,
        )
        result = propagate(
            fields,
            scenario.medium,
            grid,
            ZetaGrid(zeta_max=z_max, n_zeta=n_zeta, snapshot_stride=n_zeta),
            config,
        )
        if not result.valid:
            raise NonConvergent(f"run at resolution ({n_tau}, {n_zeta}) failed")
        finals.append(result.snapshots[-1].fields)

    errors = []
    for coarse, fine in zip(finals, finals[1:]):
        gp_f = fine.g_p[::2]
        gc_f = fine.g_c[::2]
        scale = np.linalg.norm(np.concatenate([gp_f, gc_f]))
        diff = np.linalg.norm(
            np.concatenate([coarse.g_p - gp_f, coarse.g_c - gc_f])
        )
        errors.append(float(diff / scale))

    floor = ROUNDING_FLOOR
    if all(e <= floor for e in errors):
        return ConvergenceStudy(
            resolutions=tuple(resolutions), errors=tuple(errors), orders=(), exact=True
        )
    orders = []
    for e_h, e_h2 in zip(errors, errors[1:]):
        if e_h2 >= e_h and e_h2 > floor:
            raise NonConvergent(
                f"refinement error failed to decrease: {e_h:.3e} -> {e_h2:.3e}"
            )
        orders.append(float(np.log2(e_h / max(e_h2, floor))))
    return ConvergenceStudy(
        resolutions=tuple(resolutions),
        errors=tuple(errors),
        orders=tuple(orders),
        exact=False,
    )


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsReport:
    conservation_residual_max: float
    unitarity_residual_max: float
    adiabaticity_max: float
    coherence_localization: float
    cross_validation: tuple
    edge_slopes: tuple  # per snapshot, None where the probe is degenerate


def build_report(
    result: SimulationResult, chi: CharacteristicField | None = None
) -> DiagnosticsReport:
    """All scalar diagnostics of a run, optionally cross-validated."""
    _, fraction = coherence_map(result)
    slopes = []
    for snap in result.snapshots:
        try:
            slopes.append(edge_slopes(snap.fields, result.tau_grid))
        except DegeneratePulse:
            slopes.append(None)
    xval = tuple(cross_validate(result, chi)) if chi is not None else ()
    return DiagnosticsReport(
        conservation_residual_max=conservation_residual(result),
        unitarity_residual_max=result.unitarity_residual_max,
        adiabaticity_max=max(s.adiabaticity_max for s in result.snapshots),
        coherence_localization=fraction,
        cross_validation=xval,
        edge_slopes=tuple(slopes),
    )
