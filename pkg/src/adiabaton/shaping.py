"""Scenario library and inverse temporal-shape design.

The design problem: given the probe shape wanted at the exit and the total
photon-flux profile V(tau) (which propagation conserves), find the entry
envelopes that evolve into the target.  Each exit point is decomposed into
a mixing angle, carried back along its characteristic (whose slope is set
by that same angle), and the resulting entry angle profile is turned back
into fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adiabatic import (
    CharacteristicField,
    build_characteristics,
    detect_crossing,
    reconstruct,
)
from .core import (
    EnvelopeSpec,
    FieldState,
    Gaussian,
    LinearRamp,
    MediumSpec,
    SuperGaussian,
    Tabulated,
    TanhStep,
    TauGrid,
    ZetaGrid,
    EnvelopeSum,
    constant_envelope,
    pulse_metrics,
    sample_envelope,
)
from .direct import SimulationResult, SolverConfig
from .errors import (
    CrossedCharacteristics,
    Infeasible,
    InvalidEnvelope,
    MultivaluedError,
    WindowExceeded,
)

__all__ = [
    "Scenario",
    "DesignProblem",
    "DesignResult",
    "CompressionReport",
    "builtin_scenarios",
    "builtin_designs",
    "theta_from_probe",
    "design_coupling",
    "compression_report",
]

SCENARIO_TAGS = (
    "depletion",
    "adiabaton",
    "sharpen_trailing",
    "sharpen_leading",
    "compress",
    "flat_top",
    "two_peak",
)

_SUPPORT_LEVEL = 1e-3  # relative level defining an envelope's on/off support


@dataclass(frozen=True)
class Scenario:
    """A named input configuration with its expected qualitative outcome."""

    name: str
    probe: EnvelopeSpec
    coupling: EnvelopeSpec
    medium: MediumSpec
    tau_grid: TauGrid
    zeta_grid: ZetaGrid
    expected: str
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.expected not in SCENARIO_TAGS:
            raise InvalidEnvelope(f"unknown scenario tag {self.expected!r}")
        self._check_support_order()

    def _check_support_order(self) -> None:
        # The coupling must switch on before and off after the probe.
        p = sample_envelope(self.probe, self.tau_grid)
        c = sample_envelope(self.coupling, self.tau_grid)
        if p.max() == 0.0:
            return
        p_on = np.nonzero(p >= _SUPPORT_LEVEL * p.max())[0]
        c_on = np.nonzero(c >= _SUPPORT_LEVEL * c.max())[0]
        if c_on.size == 0 or c_on[0] > p_on[0] or c_on[-1] < p_on[-1]:
            raise InvalidEnvelope(
                f"scenario {self.name!r}: coupling support must contain the probe support"
            )

    def input_fields(self) -> FieldState:
        return FieldState(
            zeta=0.0,
            g_p=sample_envelope(self.probe, self.tau_grid),
            g_c=sample_envelope(self.coupling, self.tau_grid),
        )


@dataclass(frozen=True)
class DesignProblem:
    """Inputs of one inverse-design run."""

    target_probe: EnvelopeSpec
    baseline_v: EnvelopeSpec
    medium: MediumSpec
    depth: float
    tau_grid: TauGrid


@dataclass(frozen=True)
class DesignResult:
    """Designed entry envelopes plus the adiabatic forward prediction."""

    input_probe: Tabulated
    input_coupling: Tabulated
    predicted_output: FieldState | None
    feasibility_margin: float
    shock_zeta: float | None
    chi: CharacteristicField


def theta_from_probe(gp_target, v, medium: MediumSpec):
    """Invert the probe reconstruction for the mixing angle.

    Finds the unique theta in [0, pi/2) with
    kappa_p kappa_c V sin^2(theta) / K(theta) = gp_target^2 by bisection
    (the left side is strictly increasing in theta, with supremum
    kappa_p V).  Raises Infeasible at or beyond the total-conversion bound.
    Accepts scalars or arrays.
    """
    scalar = np.ndim(gp_target) == 0 and np.ndim(v) == 0
    gp = np.atleast_1d(np.asarray(gp_target, dtype=float))
    vv = np.atleast_1d(np.asarray(v, dtype=float))
    gp, vv = np.broadcast_arrays(gp, vv)
    target_sq = gp * gp
    bound = medium.kappa_p * vv
    live = bound > 0
    if np.any(target_sq[~live] > 0) or np.any(target_sq[live] >= bound[live]):
        raise Infeasible("target probe exceeds the total conversion bound kappa_p*V")

    kp, kc = medium.kappa_p, medium.kappa_c
    lo = np.zeros_like(gp)
    hi = np.full_like(gp, math.pi / 2)

    def f(theta):
        s = np.sin(theta) ** 2
        k_eff = kp * (1.0 - s) + kc * s
        return kp * kc * vv * s / k_eff - target_sq

    while np.max(hi - lo) > 1e-12:
        mid = 0.5 * (lo + hi)
        high = f(mid) >= 0
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    theta = 0.5 * (lo + hi)
    theta = np.where(live, theta, 0.0)
    theta = np.where(target_sq == 0.0, 0.0, theta)
    return float(theta[0]) if scalar else theta


def design_coupling(
    target_probe_out: EnvelopeSpec,
    baseline_v: EnvelopeSpec,
    medium: MediumSpec,
    depth: float,
    grid: TauGrid,
) -> DesignResult:
    """Entry envelopes that evolve into ``target_probe_out`` at ``depth``.

    ``baseline_v`` is interpreted directly as the photon-flux profile
    V(tau), which the design leaves untouched; only its decomposition into
    probe and coupling is shaped.  Exit points not covered by the target
    carry angle zero (pure coupling), consistent with the coupling
    switching on first and off last.
    """
    if depth < 0:
        raise InvalidEnvelope("design depth must be >= 0")
    taus = grid.taus
    v = sample_envelope(baseline_v, grid)
    target = sample_envelope(target_probe_out, grid)
    if target.max() <= 0:
        raise InvalidEnvelope("design target is identically zero")
    edge = max(target[0], target[-1])
    if edge > 1e-6 * target.max():
        raise InvalidEnvelope("design target must be quiescent at the window edges")

    support = target > 1e-12 * target.max()
    theta_out = theta_from_probe(target, v, medium)  # raises Infeasible
    margin = float(
        np.min((medium.kappa_p * v[support] - target[support] ** 2)
               / (medium.kappa_p * v[support]))
    )

    kp_kc = medium.kappa_p * medium.kappa_c
    w = np.empty_like(v)
    w[0] = 0.0
    np.cumsum(0.5 * (v[1:] + v[:-1]) * grid.dtau, out=w[1:])

    s = np.sin(theta_out) ** 2
    k_eff = medium.kappa_p * (1.0 - s) + medium.kappa_c * s
    w_back = w - k_eff**2 * depth / kp_kc

    sup_idx = np.nonzero(support)[0]
    wb = w_back[sup_idx]
    if np.any(wb < -1e-12 * max(w[-1], 1.0)):
        raise WindowExceeded(
            "target requires characteristics entering before the window start"
        )
    wb = np.clip(wb, 0.0, None)
    eps = 1e-12 * max(w[-1], 1.0)
    if np.any(np.diff(wb) < -eps):
        raise CrossedCharacteristics(
            "target unreachable without characteristic crossing"
        )
    wb = np.maximum.accumulate(wb)

    # invert W for the entry times of the supported exit points
    idx = np.searchsorted(w, np.minimum(wb, w[-1]), side="left")
    idx = np.clip(idx, 0, w.size - 1)
    lo = np.maximum(idx - 1, 0)
    seg = w[idx] - w[lo]
    frac = np.where(seg > 0, (wb - w[lo]) / np.where(seg > 0, seg, 1.0), 1.0)
    tau0 = taus[lo] + frac * (taus[idx] - taus[lo])
    tau0 = np.maximum.accumulate(tau0)

    keep = np.concatenate(([True], np.diff(tau0) > 1e-12 * (taus[-1] - taus[0])))
    theta0 = np.interp(taus, tau0[keep], theta_out[sup_idx][keep], left=0.0, right=0.0)

    s0 = np.sin(theta0) ** 2
    k0 = medium.kappa_p * (1.0 - s0) + medium.kappa_c * s0
    amp = np.sqrt(kp_kc * v / k0)
    gp_in = amp * np.sin(theta0)
    gc_in = amp * np.cos(theta0)

    input_probe = Tabulated(taus, gp_in)
    input_coupling = Tabulated(taus, gc_in)
    chi = build_characteristics(
        FieldState(zeta=0.0, g_p=gp_in, g_c=gc_in), medium, grid
    )
    shock = detect_crossing(chi, depth) if depth > 0 else None
    try:
        predicted, _ = reconstruct(chi, depth, grid)
    except MultivaluedError:
        predicted = None
    return DesignResult(
        input_probe=input_probe,
        input_coupling=input_coupling,
        predicted_output=predicted,
        feasibility_margin=margin,
        shock_zeta=shock,
        chi=chi,
    )


# ---------------------------------------------------------------------------
# Compression metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompressionReport:
    fwhm_in: float
    fwhm_out: float
    compression_factor: float
    energy_ratio: float


def compression_report(result: SimulationResult) -> CompressionReport:
    """Probe width and energy change between the first and last snapshot."""
    first = result.snapshots[0]
    last = result.snapshots[-1]
    grid = result.tau_grid
    m_in = pulse_metrics(np.abs(first.fields.g_p), grid)
    m_out = pulse_metrics(np.abs(last.fields.g_p), grid)
    return CompressionReport(
        fwhm_in=m_in.fwhm,
        fwhm_out=m_out.fwhm,
        compression_factor=m_in.fwhm / m_out.fwhm,
        energy_ratio=m_out.energy / m_in.energy,
    )


# ---------------------------------------------------------------------------
# Built-in scenario library
# ---------------------------------------------------------------------------

_WIDE = TauGrid(tau_min=-40.0, tau_max=40.0, n_tau=4096)
_PROBE_FWHM = 2.0 * math.sqrt(math.log(2.0))  # FWHM of a width-1 gaussian


def builtin_designs() -> dict[str, DesignProblem]:
    """Design problems behind the flat_top and two_peak scenarios."""
    v0 = 400.0
    medium = MediumSpec(kappa_c=1.0)
    return {
        "flat_top": DesignProblem(
            target_probe=SuperGaussian(amplitude=9.0, center=0.0, width=2.0, order=6),
            baseline_v=constant_envelope(v0),
            medium=medium,
            depth=50.0,
            tau_grid=_WIDE,
        ),
        "two_peak": DesignProblem(
            target_probe=EnvelopeSum(
                [
                    Gaussian(amplitude=8.0, center=-3.0, width=1.0),
                    Gaussian(amplitude=8.0, center=3.0, width=1.0),
                ]
            ),
            baseline_v=constant_envelope(v0),
            medium=medium,
            depth=50.0,
            tau_grid=_WIDE,
        ),
    }


def _designed_scenario(name: str, tag: str) -> Scenario:
    problem = builtin_designs()[name]
    design = design_coupling(
        problem.target_probe,
        problem.baseline_v,
        problem.medium,
        problem.depth,
        problem.tau_grid,
    )
    n_zeta = max(1, int(round(problem.depth / 0.1)))
    return Scenario(
        name=name,
        probe=design.input_probe,
        coupling=design.input_coupling,
        medium=problem.medium,
        tau_grid=problem.tau_grid,
        zeta_grid=ZetaGrid(zeta_max=problem.depth, n_zeta=n_zeta,
                           snapshot_stride=max(1, n_zeta // 10)),
        expected=tag,
    )


def builtin_scenarios() -> list[Scenario]:
    """The scenario library used by the acceptance runs and the CLI."""
    scenarios = [
        # Gaussian probe (duration 1) inside a ten-times-longer gaussian
        # coupling, both with peak normalized Rabi frequency 20, equal
        # propagation constants.
        Scenario(
            name="fig2_gaussians",
            probe=Gaussian(amplitude=20.0, center=0.0, width=1.0),
            coupling=Gaussian(amplitude=20.0, center=0.0, width=10.0),
            medium=MediumSpec(kappa_c=1.0),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=100.0, n_zeta=2000, snapshot_stride=50),
            expected="depletion",
        ),
        # Weak probe on a constant coupling pedestal: the complementary
        # pair translates without reshaping.
        Scenario(
            name="adiabaton",
            probe=Gaussian(amplitude=3.0, center=0.0, width=1.0),
            coupling=constant_envelope(20.0),
            medium=MediumSpec(kappa_c=1.0),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=100.0, n_zeta=2000, snapshot_stride=100),
            expected="adiabaton",
        ),
        Scenario(
            name="sharpen_trailing",
            probe=Gaussian(amplitude=10.0, center=0.0, width=1.0),
            coupling=constant_envelope(10.0),
            medium=MediumSpec(kappa_c=1.25),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=200.0, n_zeta=2000, snapshot_stride=200),
            expected="sharpen_trailing",
        ),
        Scenario(
            name="sharpen_leading",
            probe=Gaussian(amplitude=10.0, center=0.0, width=1.0),
            coupling=constant_envelope(10.0),
            medium=MediumSpec(kappa_c=0.75),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=200.0, n_zeta=2000, snapshot_stride=200),
            expected="sharpen_leading",
        ),
        Scenario(
            name="sharpen_trailing_strong",
            probe=Gaussian(amplitude=10.0, center=0.0, width=1.0),
            coupling=constant_envelope(10.0),
            medium=MediumSpec(kappa_c=4.0),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=24.0, n_zeta=480, snapshot_stride=48),
            expected="sharpen_trailing",
        ),
        Scenario(
            name="sharpen_leading_strong",
            probe=Gaussian(amplitude=10.0, center=0.0, width=1.0),
            coupling=constant_envelope(10.0),
            medium=MediumSpec(kappa_c=0.25),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=100.0, n_zeta=1000, snapshot_stride=100),
            expected="sharpen_leading",
        ),
        # Pedestal plus linear amplitude rise timed so the coupling
        # intensity doubles across the probe FWHM; the trailing probe edge
        # then outruns the leading one.
        Scenario(
            name="compress_ramp",
            probe=Gaussian(amplitude=10.0, center=0.0, width=1.0),
            coupling=LinearRamp(
                g_start=20.0,
                g_end=20.0 * math.sqrt(2.0),
                t_start=-_PROBE_FWHM / 2.0,
                t_end=_PROBE_FWHM / 2.0,
                shoulder=0.2,
            ),
            medium=MediumSpec(kappa_c=1.0),
            tau_grid=_WIDE,
            zeta_grid=ZetaGrid(zeta_max=200.0, n_zeta=2000, snapshot_stride=100),
            expected="compress",
        ),
        _designed_scenario("flat_top", "flat_top"),
        _designed_scenario("two_peak", "two_peak"),
    ]
    return scenarios


def scenario_by_name(name: str) -> Scenario:
    for sc in builtin_scenarios():
        if sc.name == name:
            return sc
    raise KeyError(f"unknown scenario {name!r}")
