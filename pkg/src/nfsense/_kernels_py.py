"""Pure numpy implementation of the concentrated-likelihood kernel.

Used as the fallback when the compiled extension is unavailable; also the
reference the extension is tested against. See kernels.py for selection.
"""

from __future__ import annotations

import numpy as np

from .geometry import DegenerateGeometry


def objective_terms(qx, qy, x, y, k0_first, k0_step, theta, r, amplitude):
    """Numerator and denominator of the concentrated objective for a batch
    of candidate locations.

    For candidate (theta_k, r_k) with response a_m (conjugate b_m) the
    returned terms are
        num_k = sum_m tr(Y_m X_m^H A_m^H) = sum_m b_m^T Y_m X_m^H b_m,
        den_k = sum_m ||A_m X_m||_F^2  = sum_m ||a_m||^2 ||X_m^H b_m||^2,
    so the objective is |num|^2 / den and the gain estimate num / den.

    Parameters: element coordinates qx, qy (N,); transmit and receive
    frames x, y (M, N, L); first-subcarrier wavenumber k0_first and
    per-subcarrier wavenumber step k0_step; candidate arrays theta, r (K,);
    amplitude flag selecting the r0/r_n entry scaling.
    Returns (num (K,) complex128, den (K,) float64).
    """
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    m_sub = x.shape[0]
    n_ant = x.shape[1]

    rn = np.hypot(
        r[:, None] * np.cos(theta)[:, None] - qx[None, :],
        r[:, None] * np.sin(theta)[:, None] - qy[None, :],
    )
    if np.any(rn == 0.0):
        raise DegenerateGeometry("candidate location coincides with an antenna")

    if amplitude:
        amp = rn.mean(axis=1, keepdims=True) / rn
        b = amp * np.exp(1j * k0_first * rn)
        norm_a = np.einsum("kn,kn->k", amp, amp)
    else:
        b = np.exp(1j * k0_first * rn)
        norm_a = np.full(theta.shape[0], float(n_ant))
    step = np.exp(1j * k0_step * rn)

    xc = np.conj(x)
    num = np.zeros(theta.shape[0], dtype=np.complex128)
    den = np.zeros(theta.shape[0], dtype=np.float64)
    for m in range(m_sub):
        q = b @ xc[m]
        p = b @ y[m]
        num += np.einsum("kl,kl->k", p, q)
        den += norm_a * np.einsum("kl,kl->k", q.real, q.real)
        den += norm_a * np.einsum("kl,kl->k", q.imag, q.imag)
        if m + 1 < m_sub:
            b *= step
    return num, den
