"""Adiabatic solution by the method of characteristics.

When the atoms follow the dark state, the mixing angle theta obeys a
quasilinear transport equation whose characteristic curves satisfy

    zeta = K(theta0)^-2 * kappa_p * kappa_c * [W(tau) - W(tau0)],

where W is the cumulative integral of the photon flux V (depth-invariant
by the conservation law) and

    K(theta) = kappa_p cos^2(theta) + kappa_c sin^2(theta).

theta is constant along each curve, and all physical quantities are
reconstructed from it:

    g_p = sqrt(kappa_p kappa_c V / K) sin(theta),
    g_c = sqrt(kappa_p kappa_c V / K) cos(theta),
    (a1, a2) = (cos(theta), -sin(theta)),
    |a3| = |d/dtau of (g_c, g_p)/|g|^2|.

The sqrt prefactor reproduces the input exactly at zeta = 0 and keeps the
photon flux identity |g_p|^2/kappa_p + |g_c|^2/kappa_c = V algebraically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AtomState,
    FieldState,
    MediumSpec,
    TauGrid,
    mixing_angle,
    photon_invariant,
)
from .errors import InvalidGrid, MultivaluedError, NoRoot, WindowExceeded

__all__ = [
    "ThetaEffectiveK",
    "CharacteristicField",
    "build_characteristics",
    "characteristic_tau",
    "trace_back",
    "detect_crossing",
    "reconstruct",
    "adiabaticity_ratio",
]

QUIESCENT_FIELD = 1e-9  # |g| below which ratio-type quantities are defined as 0


@dataclass(frozen=True)
class ThetaEffectiveK:
    """Effective propagation constant K(theta) for a given medium."""

    medium: MediumSpec

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        s = np.sin(theta) ** 2
        return self.medium.kappa_p * (1.0 - s) + self.medium.kappa_c * s


@dataclass(frozen=True)
class CharacteristicField:
    """Input mixing angle and cumulative photon integral on the input grid."""

    grid: TauGrid
    medium: MediumSpec
    theta0: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def kappa_prod(self) -> float:
        return self.medium.kappa_p * self.medium.kappa_c

    def effective_kappa(self, theta: np.ndarray) -> np.ndarray:
        return ThetaEffectiveK(self.medium)(theta)

    def theta0_at(self, tau) -> np.ndarray:
        return np.interp(tau, self.grid.taus, self.theta0)

    def w_at(self, tau) -> np.ndarray:
        return np.interp(tau, self.grid.taus, self.w)

    def v_at(self, tau) -> np.ndarray:
        return np.interp(tau, self.grid.taus, self.v)


def _cumtrapz(y: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * dx, out=out[1:])
    return out


def build_characteristics(
    input_fields: FieldState, medium: MediumSpec, grid: TauGrid
) -> CharacteristicField:
    """Precompute theta0 and W from the fields at the medium entry."""
    if input_fields.n_tau != grid.n_tau:
        raise InvalidGrid("input fields do not match the tau grid")
    theta0 = mixing_angle(input_fields)
    v = photon_invariant(input_fields, medium)
    w = _cumtrapz(v, grid.dtau)
    return CharacteristicField(grid=grid, medium=medium, theta0=theta0, v=v, w=w)


def _invert_w(chi: CharacteristicField, w_target: np.ndarray) -> np.ndarray:
    """Leftmost tau with W(tau) = w_target (W is non-decreasing)."""
    w = chi.w
    taus = chi.grid.taus
    scale = max(w[-1], 1.0)
    wt = np.atleast_1d(np.asarray(w_target, dtype=float))
    if np.any(wt > w[-1] + 1e-12 * scale):
        raise WindowExceeded("characteristic leaves the retarded-time window")
    wt = np.minimum(wt, w[-1])
    idx = np.searchsorted(w, wt, side="left")
    idx = np.clip(idx, 0, w.size - 1)
    lo = np.maximum(idx - 1, 0)
    seg = w[idx] - w[lo]
    frac = np.where(seg > 0, (wt - w[lo]) / np.where(seg > 0, seg, 1.0), 1.0)
    out = taus[lo] + frac * (taus[idx] - taus[lo])
    return out if np.ndim(w_target) else float(out[0])


def characteristic_tau(tau0, zeta: float, chi: CharacteristicField):
    """Forward map: exit time of the characteristic entering at tau0.

    Solves W(tau) = W(tau0) + K(theta0(tau0))^2 * zeta / (kappa_p kappa_c)
    by monotone inversion of W.  Raises WindowExceeded when the curve
    leaves the window before reaching depth zeta.
    """
    if zeta < 0:
        raise InvalidGrid("zeta must be >= 0")
    th0 = chi.theta0_at(tau0)
    k2 = chi.effective_kappa(th0) ** 2
    w_target = chi.w_at(tau0) + k2 * zeta / chi.kappa_prod
    return _invert_w(chi, w_target)


def _forward_w(chi: CharacteristicField, zeta: float) -> np.ndarray:
    """W-coordinate reached at depth zeta by each input grid node."""
    k2 = chi.effective_kappa(chi.theta0) ** 2
    return chi.w + k2 * zeta / chi.kappa_prod


def _crossed(chi: CharacteristicField, zeta: float) -> bool:
    a = _forward_w(chi, zeta)
    eps = 1e-12 * max(a[-1], 1.0)
    return bool(np.any(np.diff(a) < -eps))


def trace_back(tau: float, zeta: float, chi: CharacteristicField) -> float:
    """Entry time tau0 of the characteristic passing through (tau, zeta).

    Solves F(tau0) = W(tau) - W(tau0) - K(theta0(tau0))^2 zeta / (kp kc) = 0
    by bracketed bisection on [tau_min, tau].  Multiple sign changes mean
    the characteristics have crossed (MultivaluedError).  A point ahead of
    every characteristic gets the quiescent entry tau_min when the input is
    quiescent there, else NoRoot.
    """
    if zeta < 0:
        raise InvalidGrid("zeta must be >= 0")
    taus = chi.grid.taus
    if zeta == 0.0:
        return float(np.clip(tau, taus[0], taus[-1]))
    w_tau = chi.w_at(tau)
    kp = chi.kappa_prod

    def f(x):
        th = chi.theta0_at(x)
        return w_tau - chi.w_at(x) - chi.effective_kappa(th) ** 2 * zeta / kp

    nodes = taus[taus <= tau]
    if nodes.size == 0 or nodes[-1] < tau:
        nodes = np.append(nodes, tau)
    fv = f(nodes)
    scale = max(chi.w[-1], 1.0)
    tiny = 1e-12 * scale

    sign = np.where(fv > tiny, 1, np.where(fv < -tiny, -1, 0))
    nz = np.nonzero(sign)[0]
    changes = int(np.sum(sign[nz][1:] * sign[nz][:-1] < 0)) if nz.size > 1 else 0
    if changes > 1:
        raise MultivaluedError(
            f"characteristics crossed before (tau={tau:.4g}, zeta={zeta:.4g})"
        )
    zero_nodes = np.nonzero(sign == 0)[0]
    if changes == 0:
        if zero_nodes.size:
            return float(nodes[zero_nodes[0]])
        # no root: every characteristic has already passed this tau
        if chi.theta0[0] <= 1e-9:
            return float(taus[0])
        raise NoRoot("query point lies ahead of every characteristic")
    i = nz[np.nonzero(sign[nz][1:] * sign[nz][:-1] < 0)[0][0]]
    j = nz[np.nonzero(sign[nz][1:] * sign[nz][:-1] < 0)[0][0] + 1]
    lo, hi = nodes[i], nodes[j]
    flo = fv[i]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm > 0:
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-13 * (taus[-1] - taus[0]):
            break
    return float(0.5 * (lo + hi))


def _trace_back_grid(chi: CharacteristicField, zeta: float, taus: np.ndarray) -> np.ndarray:
    """Vectorized single-valued trace-back of many tau at one depth.

    Valid pre-shock only: raises MultivaluedError when the forward map is
    non-monotone at this depth.
    """
    if zeta == 0.0:
        return np.clip(taus, chi.grid.taus[0], chi.grid.taus[-1])
    if _crossed(chi, zeta):
        raise MultivaluedError(f"characteristics crossed at or before zeta={zeta:.6g}")
    a = _forward_w(chi, zeta)
    a = np.maximum.accumulate(a)  # flatten float-level wiggles in degenerate segments
    targets = chi.w_at(taus)
    idx = np.searchsorted(a, targets, side="left")
    inside = (idx > 0) & (idx < a.size)
    idx_c = np.clip(idx, 1, a.size - 1)
    lo = idx_c - 1
    seg = a[idx_c] - a[lo]
    frac = np.where(seg > 0, (targets - a[lo]) / np.where(seg > 0, seg, 1.0), 1.0)
    grid_taus = chi.grid.taus
    tau0 = grid_taus[lo] + frac * (grid_taus[idx_c] - grid_taus[lo])
    # ahead of the earliest characteristic: quiescent entry value
    tau0 = np.where(idx == 0, grid_taus[0], tau0)
    # beyond the last characteristic cannot happen: W(tau) <= W(tau_max) < a[-1]
    tau0 = np.where(inside | (idx == 0), tau0, grid_taus[-1])
    return tau0


def detect_crossing(chi: CharacteristicField, zeta_max: float) -> float | None:
    """Smallest depth at which the forward map folds over, if any.

    Scans a geometric ladder of depths up to zeta_max and refines the first
    folded rung by bisection to 1% relative accuracy.  Coincident
    characteristics (zero forward difference, e.g. in field-free regions)
    do not count as crossings.
    """
    if zeta_max <= 0:
        return None
    if not _crossed(chi, zeta_max):
        return None
    n_rungs = 60
    lo = 0.0
    hi = zeta_max
    z = zeta_max
    for _ in range(n_rungs):
        z = z / 2.0
        if _crossed(chi, z):
            hi = z
        else:
            lo = z
            break
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if _crossed(chi, mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def reconstruct(
    chi: CharacteristicField, zeta: float, grid: TauGrid
) -> tuple[FieldState, AtomState]:
    """Fields and amplitudes at depth zeta from the transported angle."""
    taus = grid.taus
    tau0 = _trace_back_grid(chi, zeta, taus)
    theta = chi.theta0_at(tau0)
    v = chi.v_at(taus)
    k_eff = chi.effective_kappa(theta)
    amp = np.sqrt(chi.kappa_prod * v / k_eff)
    g_p = amp * np.sin(theta)
    g_c = amp * np.cos(theta)
    fields = FieldState(zeta=zeta, g_p=g_p, g_c=g_c)

    g_sq = g_p * g_p + g_c * g_c
    mag = np.sqrt(g_sq)
    # the amplitude estimate diverges as 1/|g|^2 in quiescent tails where
    # there is nothing to follow; blank it below a relative floor
    quiet = mag < max(QUIESCENT_FIELD, 1e-4 * float(np.max(mag)))
    safe = np.where(quiet, 1.0, g_sq)
    u_c = np.where(quiet, 0.0, g_c / safe)
    u_p = np.where(quiet, 0.0, g_p / safe)
    du_c = np.gradient(u_c, grid.dtau)
    du_p = np.gradient(u_p, grid.dtau)
    a3 = np.hypot(du_c, du_p)
    blank = quiet.copy()
    blank[1:] |= quiet[:-1]
    blank[:-1] |= quiet[1:]
    a3[blank] = 0.0

    atoms = AtomState(a1=np.cos(theta), a2=-np.sin(theta), a3=a3)
    return fields, atoms


def adiabaticity_ratio(
    fields: FieldState, grid: TauGrid, floor: float = QUIESCENT_FIELD
) -> np.ndarray:
    """Dark-state-following criterion |g_c g_p' - g_p g_c'| / |g|^3.

    Values much below 1 mark the adiabatic region.  Defined as 0 where the
    total field is below ``floor`` (the criterion is meaningful only inside
    the pulses).  For solver output, whose quiescent tails carry
    rounding-level junk, pass a floor scaled to the field peak.
    """
    gp = np.abs(fields.g_p)
    gc = np.abs(fields.g_c)
    dgp = np.gradient(gp, grid.dtau)
    dgc = np.gradient(gc, grid.dtau)
    mag = np.hypot(gp, gc)
    quiet = mag < floor
    den = np.where(quiet, 1.0, mag**3)
    r = np.abs(gc * dgp - gp * dgc) / den
    r[quiet] = 0.0
    return r
