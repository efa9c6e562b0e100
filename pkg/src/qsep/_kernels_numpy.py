"""Vectorized pure-numpy twin of the JIT kernel.

Used when the ``QSEP_BACKEND=numpy`` flag disables JIT compilation (or when
numba is unavailable). Semantics match ``_kernels_numba.simulate_chunk``;
floating-point results may differ in the last bits because BLAS and ufunc
evaluation order differ from the scalar loop.
"""

import math

import numpy as np
from scipy.special import erfc

_QPI = math.pi / 4.0
_TWO_PI = 2.0 * math.pi


def _qidx_from_angle(theta: np.ndarray, bins: int) -> np.ndarray:
    """Angle-bin indices with boundary ties resolved to the smaller index."""
    v = (theta - _QPI) * (bins / _TWO_PI) + 0.5
    kf = np.floor(v)
    ki = kf.astype(np.int64) & (bins - 1)
    tie = v == kf
    if np.any(tie):
        ki = np.where(tie, np.where(ki == 0, 0, ki - 1), ki)
    return ki


def _qidx_array(z: np.ndarray, bins: int) -> np.ndarray:
    return _qidx_from_angle(np.arctan2(z.imag, z.real), bins)


def theta_tilde(h: np.ndarray, bins: int) -> np.ndarray:
    """Residual angles of ``h`` against the conjugate-quantizer bin centres."""
    th = np.arctan2(h.imag, h.real)
    qi = _qidx_from_angle(-th, bins)  # conj(h) has angle -theta
    raw = _QPI + qi * (_TWO_PI / bins) + th
    out = np.mod(raw + math.pi, _TWO_PI) - math.pi
    return out


def margin_sum(h: np.ndarray, m_order: int, bins: int) -> np.ndarray:
    """Aggregate margin T = sum_i |h_i| sin(pi/M - theta_i) per trial row."""
    tilde = theta_tilde(h, bins)
    return np.sum(np.abs(h) * np.sin(math.pi / m_order - tilde), axis=-1)


def simulate_chunk(
    s_idx,
    w,
    noise,
    chol,
    weight,
    points_m,
    points_n,
    sqrt_rho,
    q_coef,
    do_mrc,
    do_amrc,
    do_mirror,
    dec_out,
    record,
):
    m_order = points_m.shape[0]
    bins = points_n.shape[0]

    h = w @ chol.T
    s = points_m[s_idx]
    y = sqrt_rho * h * s[:, None] + noise

    t_stat = margin_sum(h, m_order, bins)
    qb = 0.5 * erfc(q_coef * t_stat)
    q_sum = float(np.sum(qb))
    q2_sum = float(np.sum(qb * qb))

    err_mrc = err_amrc = err_mirror = 0
    need_r = do_mrc or do_amrc
    r = points_n[_qidx_array(y, bins)] if need_r else None
    g = h @ weight.T if (do_amrc or do_mirror) else None

    if do_mrc:
        dec = _qidx_array(np.sum(np.conj(h) * r, axis=1), m_order)
        err_mrc = int(np.sum(dec != s_idx))
        if record:
            dec_out[:, 0] = dec
    if do_amrc:
        dec = _qidx_array(np.sum(np.conj(g) * r, axis=1), m_order)
        err_amrc = int(np.sum(dec != s_idx))
        if record:
            dec_out[:, 1] = dec
    if do_mirror:
        qg = points_n[_qidx_array(g * s[:, None], bins)]
        dec = _qidx_array(s * np.sum(qg * np.conj(y), axis=1), m_order)
        err_mirror = int(np.sum(dec != s_idx))
        if record:
            dec_out[:, 2] = dec

    return err_mrc, err_amrc, err_mirror, q_sum, q2_sum
