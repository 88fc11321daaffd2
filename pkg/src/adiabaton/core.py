"""Domain types and pointwise field quantities.

Everything is dimensionless: retarded time tau is measured in probe
durations T_p, depth zeta in units of K_p*T_p*z, and envelopes are Rabi
frequencies times T_p.  The probe coupling constant is fixed to 1 by this
normalization, so the only medium parameter left is kappa_c = K_c/K_p.

All types are immutable value objects; the wrapped numpy arrays are made
read-only so instances can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DegeneratePulse, InvalidEnvelope, InvalidGrid

__all__ = [
    "TauGrid",
    "ZetaGrid",
    "MediumSpec",
    "Gaussian",
    "SuperGaussian",
    "LinearRamp",
    "TanhStep",
    "Tabulated",
    "EnvelopeSum",
    "EnvelopeSpec",
    "FieldState",
    "AtomState",
    "PulseMetrics",
    "sample_envelope",
    "mixing_angle",
    "photon_invariant",
    "pulse_metrics",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a)
    if out is a:
        out = a.copy()
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# Grids and medium
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TauGrid:
    """Uniform retarded-time grid, in units of the probe duration."""

    tau_min: float
    tau_max: float
    n_tau: int

    def __post_init__(self) -> None:
        if self.n_tau < 16:
            raise InvalidGrid(f"n_tau must be >= 16, got {self.n_tau}")
        if not self.tau_max > self.tau_min:
            raise InvalidGrid("tau_max must exceed tau_min")

    @property
    def dtau(self) -> float:
        return (self.tau_max - self.tau_min) / (self.n_tau - 1)

    @property
    def taus(self) -> np.ndarray:
        return np.linspace(self.tau_min, self.tau_max, self.n_tau)


@dataclass(frozen=True)
class ZetaGrid:
    """Depth march: n_zeta uniform steps from 0 to zeta_max."""

    zeta_max: float
    n_zeta: int
    snapshot_stride: int = 1

    def __post_init__(self) -> None:
        if not self.zeta_max > 0:
            raise InvalidGrid("zeta_max must be positive")
        if self.n_zeta < 1:
            raise InvalidGrid("n_zeta must be >= 1")
        if not 1 <= self.snapshot_stride <= self.n_zeta:
            raise InvalidGrid("snapshot_stride must lie in [1, n_zeta]")

    @property
    def dzeta(self) -> float:
        return self.zeta_max / self.n_zeta


@dataclass(frozen=True)
class MediumSpec:
    """Dimensionless propagation constants; kappa_p is pinned by normalization."""

    kappa_c: float
    kappa_p: float = 1.0

    def __post_init__(self) -> None:
        if self.kappa_p != 1.0:
            raise InvalidGrid("kappa_p is fixed to 1 by the depth normalization")
        if not self.kappa_c > 0:
            raise InvalidGrid("kappa_c must be positive")


# ---------------------------------------------------------------------------
# Envelope specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    """g0 * exp(-((tau - center)/width)^2); width is the 1/e half-width."""

    amplitude: float
    center: float
    width: float

    def validate(self) -> None:
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise InvalidEnvelope("gaussian amplitude must be finite and >= 0")
        if self.width <= 0 or not math.isfinite(self.width):
            raise InvalidEnvelope("gaussian width must be finite and positive")

    def sample(self, tau: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-(((tau - self.center) / self.width) ** 2))


@dataclass(frozen=True)
class SuperGaussian:
    """Flat-topped g0 * exp(-((tau - center)/width)^order), order even >= 2."""

    amplitude: float
    center: float
    width: float
    order: int

    def validate(self) -> None:
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise InvalidEnvelope("supergaussian amplitude must be finite and >= 0")
        if self.width <= 0 or not math.isfinite(self.width):
            raise InvalidEnvelope("supergaussian width must be finite and positive")
        if self.order < 2 or self.order % 2 != 0:
            raise InvalidEnvelope("supergaussian order must be an even integer >= 2")

    def sample(self, tau: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-(((tau - self.center) / self.width) ** self.order))


def _smooth_clamp01(x: np.ndarray, s: float) -> np.ndarray:
    # Smooth monotone version of clip(x, 0, 1); corners rounded over scale s.
    if s <= 0:
        return np.clip(x, 0.0, 1.0)
    return 0.5 * (1.0 + np.sqrt(x * x + s * s) - np.sqrt((x - 1.0) ** 2 + s * s))


@dataclass(frozen=True)
class LinearRamp:
    """Pedestal g_start, linear rise to g_end across [t_start, t_end].

    ``shoulder`` is a smoothing time constant applied at both corners;
    zero gives hard corners.
    """

    g_start: float
    g_end: float
    t_start: float
    t_end: float
    shoulder: float = 0.0

    def validate(self) -> None:
        if min(self.g_start, self.g_end) < 0:
            raise InvalidEnvelope("ramp levels must be >= 0")
        if not self.t_end > self.t_start:
            raise InvalidEnvelope("ramp requires t_end > t_start")
        if self.shoulder < 0:
            raise InvalidEnvelope("ramp shoulder must be >= 0")
        for v in (self.g_start, self.g_end, self.t_start, self.t_end, self.shoulder):
            if not math.isfinite(v):
                raise InvalidEnvelope("ramp parameters must be finite")

    def sample(self, tau: np.ndarray) -> np.ndarray:
        span = self.t_end - self.t_start
        x = (tau - self.t_start) / span
        frac = _smooth_clamp01(x, self.shoulder / span)
        return self.g_start + (self.g_end - self.g_start) * frac


@dataclass(frozen=True)
class TanhStep:
    """Smooth step from g_low to g_high centered at t_mid."""

    g_low: float
    g_high: float
    t_mid: float
    rise_time: float

    def validate(self) -> None:
        if min(self.g_low, self.g_high) < 0:
            raise InvalidEnvelope("step levels must be >= 0")
        if self.rise_time <= 0 or not math.isfinite(self.rise_time):
            raise InvalidEnvelope("step rise_time must be finite and positive")

    def sample(self, tau: np.ndarray) -> np.ndarray:
        return self.g_low + (self.g_high - self.g_low) * 0.5 * (
            1.0 + np.tanh((tau - self.t_mid) / self.rise_time)
        )


@dataclass(frozen=True)
class Tabulated:
    """Samples on an explicit grid; linearly interpolated, zero outside."""

    tau: tuple
    values: tuple

    def __init__(self, tau: Sequence[float], values: Sequence[float]):
        object.__setattr__(self, "tau", tuple(float(t) for t in tau))
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    def validate(self) -> None:
        t = np.asarray(self.tau)
        v = np.asarray(self.values)
        if t.size != v.size or t.size < 2:
            raise InvalidEnvelope("tabulated envelope needs matching grids of >= 2 samples")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise InvalidEnvelope("tabulated samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise InvalidEnvelope("tabulated grid must be strictly increasing")
        if np.any(v < 0):
            raise InvalidEnvelope("tabulated samples must be >= 0")

    def sample(self, tau: np.ndarray) -> np.ndarray:
        return np.interp(tau, np.asarray(self.tau), np.asarray(self.values), left=0.0, right=0.0)


@dataclass(frozen=True)
class EnvelopeSum:
    """Pointwise sum of component envelopes."""

    parts: tuple

    def __init__(self, parts: Sequence["EnvelopeSpec"]):
        object.__setattr__(self, "parts", tuple(parts))

    def validate(self) -> None:
        if not self.parts:
            raise InvalidEnvelope("sum envelope needs at least one part")
        for p in self.parts:
            p.validate()

    def sample(self, tau: np.ndarray) -> np.ndarray:
        out = np.zeros_like(tau, dtype=float)
        for p in self.parts:
            out = out + p.sample(tau)
        return out


EnvelopeSpec = Union[Gaussian, SuperGaussian, LinearRamp, TanhStep, Tabulated, EnvelopeSum]


def constant_envelope(level: float) -> TanhStep:
    """Constant pedestal, expressed as a degenerate step."""
    return TanhStep(g_low=level, g_high=level, t_mid=0.0, rise_time=1.0)


def sample_envelope(spec: EnvelopeSpec, grid: TauGrid) -> np.ndarray:
    """Sample an envelope spec on a tau grid.

    Raises InvalidEnvelope when the spec violates its invariants or the
    samples come out negative or non-finite.
    """
    spec.validate()
    out = np.asarray(spec.sample(grid.taus), dtype=float)
    if not np.all(np.isfinite(out)):
        raise InvalidEnvelope("envelope samples are not finite")
    if np.any(out < 0):
        raise InvalidEnvelope("envelope samples must be >= 0")
    return out


# ---------------------------------------------------------------------------
# Field and atom states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldState:
    """Probe/coupling Rabi envelopes (times T_p) at one depth."""

    zeta: float
    g_p: np.ndarray
    g_c: np.ndarray

    def __post_init__(self) -> None:
        gp = _readonly(np.asarray(self.g_p, dtype=complex))
        gc = _readonly(np.asarray(self.g_c, dtype=complex))
        if gp.shape != gc.shape or gp.ndim != 1:
            raise InvalidGrid("probe and coupling envelopes must be 1-d and equal length")
        if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gc))):
            raise InvalidGrid("field envelopes must be finite")
        object.__setattr__(self, "g_p", gp)
        object.__setattr__(self, "g_c", gc)

    @property
    def n_tau(self) -> int:
        return self.g_p.size


@dataclass(frozen=True)
class AtomState:
    """Probability amplitudes of |1>, |2>, |3> on the tau grid."""

    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray

    def __post_init__(self) -> None:
        arrs = []
        for name in ("a1", "a2", "a3"):
            a = _readonly(np.asarray(getattr(self, name), dtype=complex))
            arrs.append(a)
            object.__setattr__(self, name, a)
        if not (arrs[0].shape == arrs[1].shape == arrs[2].shape) or arrs[0].ndim != 1:
            raise InvalidGrid("amplitude arrays must be 1-d and equal length")

    def norm_sq(self) -> np.ndarray:
        return (np.abs(self.a1) ** 2 + np.abs(self.a2) ** 2 + np.abs(self.a3) ** 2)


# ---------------------------------------------------------------------------
# Pointwise derived quantities
# ---------------------------------------------------------------------------


def mixing_angle(fields: FieldState) -> np.ndarray:
    """Pointwise mixing angle theta = atan2(|g_p|, |g_c|) in [0, pi/2].

    Where both envelopes vanish the angle is defined as 0 (ground-state
    limit, matching the initial condition a = (1, 0, 0)).
    """
    return np.arctan2(np.abs(fields.g_p), np.abs(fields.g_c))


def photon_invariant(fields: FieldState, medium: MediumSpec) -> np.ndarray:
    """Photon-number flux density V = |g_p|^2/kappa_p + |g_c|^2/kappa_c."""
    return (np.abs(fields.g_p) ** 2 / medium.kappa_p
            + np.abs(fields.g_c) ** 2 / medium.kappa_c)


@dataclass(frozen=True)
class PulseMetrics:
    """Scalar summary of a single real envelope."""

    peak: float
    fwhm: float
    energy: float
    centroid: float
    n_local_maxima: int
    top_flatness: float


def _count_maxima(values: np.ndarray, floor: float) -> int:
    """Count local maxima above ``floor``, treating plateaus as one maximum.

    Window edges count as lower neighbors, so a constant sequence has
    exactly one (global) maximum.
    """
    n = values.size
    count = 0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        left_lower = i == 0 or values[i - 1] < values[i]
        right_lower = j == n - 1 or values[j + 1] < values[j]
        if left_lower and right_lower and values[i] > floor:
            count += 1
        i = j + 1
    return count


def pulse_metrics(amplitude: np.ndarray, grid: TauGrid) -> PulseMetrics:
    """Peak, FWHM, energy, centroid, maxima count and top flatness.

    FWHM uses the outermost half-max crossings (linearly interpolated) so
    multi-peak pulses get a well-defined overall width.  Energy is the
    trapezoidal integral of the squared amplitude.  Maxima are counted
    above a floor of 0.05*peak.
    """
    a = np.asarray(amplitude, dtype=float)
    if a.size != grid.n_tau:
        raise InvalidGrid("amplitude length does not match the tau grid")
    taus = grid.taus
    peak = float(np.max(a))
    if peak <= 0.0:
        raise DegeneratePulse("pulse metrics undefined for an identically zero envelope")

    half = 0.5 * peak
    above = a >= half
    idx = np.nonzero(above)[0]
    i0, i1 = idx[0], idx[-1]
    if i0 == 0:
        t_left = taus[0]
    else:
        f = (half - a[i0 - 1]) / (a[i0] - a[i0 - 1])
        t_left = taus[i0 - 1] + f * grid.dtau
    if i1 == grid.n_tau - 1:
        t_right = taus[-1]
    else:
        f = (a[i1] - half) / (a[i1] - a[i1 + 1])
        t_right = taus[i1] + f * grid.dtau
    fwhm = float(t_right - t_left)

    intensity = a * a
    energy = float(np.trapezoid(intensity, taus))
    centroid = float(np.trapezoid(taus * intensity, taus) / energy) if energy > 0 else 0.0

    top = a[a >= 0.9 * peak]
    flatness = float(np.std(top) / np.mean(top)) if top.size else 0.0

    return PulseMetrics(
        peak=peak,
        fwhm=fwhm,
        energy=energy,
        centroid=centroid,
        n_local_maxima=_count_maxima(a, 0.05 * peak),
        top_flatness=flatness,
    )
