"""Per-trial detection chain: combiners, decision devices and bound statistics.

These are straightforward single-trial reference implementations; the Monte
Carlo engine runs batched kernels that are cross-checked against the
functions here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import (
    psk_constellation,
    quantization_angle,
    quantize_index,
    quantize_points,
)
from .errors import DimensionMismatchError, InvalidParameterError
from .linalg import HermitianEigen, eig_hermitian, hermitian_function


@dataclass(frozen=True)
class TrialDraw:
    """One realization: transmitted index, channel, noise, and the derived y, r."""

    s_index: int
    h: np.ndarray
    noise: np.ndarray
    y: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class DetectionResult:
    decision_index: int
    correct: bool


@dataclass(frozen=True)
class BoundStatistics:
    """Channel-only statistics behind the conditional error bound.

    ``thetas`` are the per-antenna quantization residual angles, ``z`` the
    weighted sine terms |h_i| sin(pi/M - theta_i), ``t`` their sum and
    ``u = (2/N_r) t^2`` the squared aggregate feeding the Gaussian tail.
    """

    thetas: np.ndarray
    z: np.ndarray
    t: float
    u: float


def _check_lengths(*vectors: np.ndarray) -> int:
    n = len(vectors[0])
    for v in vectors[1:]:
        if len(v) != n:
            raise DimensionMismatchError(
                f"vector lengths disagree: {[len(x) for x in vectors]}"
            )
    return n


def received_signal(
    h: np.ndarray, s: complex, noise: np.ndarray, rho: float, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Form y = sqrt(rho) h s + noise and its n-bit phase-quantized copy r."""
    if rho <= 0.0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    h = np.asarray(h, dtype=np.complex128)
    noise = np.asarray(noise, dtype=np.complex128)
    _check_lengths(h, noise)
    y = np.sqrt(rho) * h * s + noise
    return y, quantize_points(y, n)


def mrc_detect(h: np.ndarray, r: np.ndarray, m: int, s_index: int) -> DetectionResult:
    """Conjugate-channel combining h^H r followed by the M-ary decision device."""
    _check_lengths(h, r)
    z = np.vdot(h, r)  # vdot conjugates its first argument
    idx = quantize_index(complex(z), int(math.log2(m)))
    return DetectionResult(idx, idx == s_index)


def amrc_detect(
    h: np.ndarray, r: np.ndarray, weight: np.ndarray, m: int, s_index: int
) -> DetectionResult:
    """Surrogate combining g^H r with g = W h, then the M-ary decision device."""
    _check_lengths(h, r)
    g = weight @ np.asarray(h, dtype=np.complex128)
    idx = quantize_index(complex(np.vdot(g, r)), int(math.log2(m)))
    return DetectionResult(idx, idx == s_index)


def mirror_detect(trial: TrialDraw, weight: np.ndarray, m: int, n: int) -> DetectionResult:
    """Symbol-conditioned mirror of the surrogate detector.

    Quantizes the scaled combiner instead of the received vector:
    decision = Q_m(s * (Q_n(g s))^T conj(y)). The decision statistic depends
    on the true transmitted symbol, so this is a validation device, not a
    practical detector.
    """
    g = weight @ trial.h
    s = psk_constellation(m).point(trial.s_index)
    qg = quantize_points(g * s, n)
    stat = s * np.sum(qg * np.conj(trial.y))
    idx = quantize_index(complex(stat), int(math.log2(m)))
    return DetectionResult(idx, idx == trial.s_index)


def bound_statistics(h: np.ndarray, m: int, n: int) -> BoundStatistics:
    """Quantization residual angles and the aggregate bound statistic U."""
    if m > (1 << n):
        raise InvalidParameterError(f"M = {m} exceeds the quantizer order 2^{n}")
    h = np.asarray(h, dtype=np.complex128)
    thetas = np.array([quantization_angle(hi, n) for hi in h])
    z = np.abs(h) * np.sin(np.pi / m - thetas)
    t = float(np.sum(z))
    return BoundStatistics(thetas, z, t, 2.0 * t * t / len(h))


def siso_equivalent_gain(h: np.ndarray, n: int, combiner: np.ndarray | None = None) -> complex:
    """Aggregate effective gain of the single-branch reduction.

    Sums exp(-j pi/4) Q_n(c_i exp(j pi/4)) conj(h_i) over antennas, where c
    is the combiner whose quantization enters the reduction (the channel
    itself by default; at high SNR the scaled surrogate combiner quantizes
    identically, which is what makes the default form the asymptotic one).
    The real part less the slanted imaginary penalty gives the margin used
    in the conditional error bound.
    """
    h = np.asarray(h, dtype=np.complex128)
    c = h if combiner is None else np.asarray(combiner, dtype=np.complex128)
    rot = np.exp(1j * math.pi / 4.0)
    q = quantize_points(c * rot, n)
    return complex(np.sum(q * np.conj(h)) * np.conj(rot))


def eta_margin(h_tilde: complex, m: int) -> float:
    """Decision-cone margin Re(h) - |Im(h)| cot(pi/M) of an effective gain."""
    return h_tilde.real - abs(h_tilde.imag) / math.tan(math.pi / m)


def amrc_expansion_residual(
    h: np.ndarray,
    k: np.ndarray,
    rho: float,
    eig: HermitianEigen | None = None,
) -> float:
    """Norm of the high-SNR expansion error of the scaled surrogate combiner.

    Returns ||g / sqrt(rho) - h - K^(-1) h / (2 rho)||_2, which decays as
    rho^(-2) because the next term of the matrix Taylor series is quadratic.
    """
    if rho <= 0.0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    if eig is None:
        eig = eig_hermitian(k)
    h = np.asarray(h, dtype=np.complex128)
    lam = eig.eigenvalues
    weight = hermitian_function(eig, np.sqrt(rho * lam + 1.0) / np.sqrt(lam))
    k_inv_h = hermitian_function(eig, 1.0 / lam) @ h
    resid = weight @ h / np.sqrt(rho) - h - k_inv_h / (2.0 * rho)
    return float(np.linalg.norm(resid))
