"""Compiled inner loops for the depth march.

The amplitude ODE da/dtau = i M(tau) a is strictly sequential in tau, so it
lives in a numba kernel; everything else in the package is vectorized numpy.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def rk4_amplitudes(g_p, g_c, dtau, substeps, a0):  # pragma: no cover - compiled
    """March a = (a1,a2,a3) from a0 across the tau grid.

    Classic fourth-order one-step method; ``substeps`` RK4 steps per grid
    interval with the envelopes linearly interpolated at stage nodes.
    Returns the amplitudes at every grid point and the largest pointwise
    deviation of |a|^2 from 1.
    """
    n = g_p.shape[0]
    out = np.empty((n, 3), dtype=np.complex128)
    a1 = a0[0]
    a2 = a0[1]
    a3 = a0[2]
    out[0, 0] = a1
    out[0, 1] = a2
    out[0, 2] = a3
    h = dtau / substeps
    max_dev = 0.0
    for i in range(n - 1):
        p0 = g_p[i]
        dp = g_p[i + 1] - p0
        c0 = g_c[i]
        dc = g_c[i + 1] - c0
        for s in range(substeps):
            f0 = s / substeps
            fm = (s + 0.5) / substeps
            f1 = (s + 1.0) / substeps
            pa = p0 + dp * f0
            ca = c0 + dc * f0
            pb = p0 + dp * fm
            cb = c0 + dc * fm
            pc = p0 + dp * f1
            cc = c0 + dc * f1

            k1_1 = 1j * np.conj(pa) * a3
            k1_2 = 1j * np.conj(ca) * a3
            k1_3 = 1j * (pa * a1 + ca * a2)

            b1 = a1 + 0.5 * h * k1_1
            b2 = a2 + 0.5 * h * k1_2
            b3 = a3 + 0.5 * h * k1_3
            k2_1 = 1j * np.conj(pb) * b3
            k2_2 = 1j * np.conj(cb) * b3
            k2_3 = 1j * (pb * b1 + cb * b2)

            b1 = a1 + 0.5 * h * k2_1
            b2 = a2 + 0.5 * h * k2_2
            b3 = a3 + 0.5 * h * k2_3
            k3_1 = 1j * np.conj(pb) * b3
            k3_2 = 1j * np.conj(cb) * b3
            k3_3 = 1j * (pb * b1 + cb * b2)

            b1 = a1 + h * k3_1
            b2 = a2 + h * k3_2
            b3 = a3 + h * k3_3
            k4_1 = 1j * np.conj(pc) * b3
            k4_2 = 1j * np.conj(cc) * b3
            k4_3 = 1j * (pc * b1 + cc * b2)

            a1 = a1 + (h / 6.0) * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1)
            a2 = a2 + (h / 6.0) * (k1_2 + 2.0 * k2_2 + 2.0 * k3_2 + k4_2)
            a3 = a3 + (h / 6.0) * (k1_3 + 2.0 * k2_3 + 2.0 * k3_3 + k4_3)
        out[i + 1, 0] = a1
        out[i + 1, 1] = a2
        out[i + 1, 2] = a3
        dev = abs(
            a1.real * a1.real + a1.imag * a1.imag
            + a2.real * a2.real + a2.imag * a2.imag
            + a3.real * a3.real + a3.imag * a3.imag
            - 1.0
        )
        if dev > max_dev:
            max_dev = dev
    return out, max_dev
