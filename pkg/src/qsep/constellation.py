"""PSK constellations and the memoryless n-bit phase quantizer.

The same point family serves three roles: transmit symbols, the per-antenna
quantizer codebook, and the final decision device. Point ``i`` of an order-M
constellation sits at angle ``pi/4 + 2*pi*i/M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError, ZeroInputError

QUARTER_PI = math.pi / 4.0
TWO_PI = 2.0 * math.pi


def is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class PskConstellation:
    """Unit-modulus point set with the index-to-angle map ``pi/4 + 2*pi*i/order``."""

    order: int
    points: np.ndarray

    def point(self, index: int) -> complex:
        return complex(self.points[index])


@dataclass(frozen=True)
class QuantizerOutput:
    index: int
    point: complex


@lru_cache(maxsize=32)
def psk_constellation(order: int) -> PskConstellation:
    """Build (and cache) the order-M PSK constellation; M must be a power of two."""
    if not is_power_of_two(order) or order < 2:
        raise InvalidParameterError(f"constellation order must be a power of two >= 2, got {order}")
    angles = QUARTER_PI + TWO_PI * np.arange(order) / order
    return PskConstellation(order, np.exp(1j * angles))


def quantize_index(x: complex, n: int) -> int:
    """Index of the nearest point of the 2^n-PSK codebook.

    Implemented by angle binning (one arctangent and one floor) instead of a
    distance scan over all 2^n points. Exact bin-boundary ties, including
    x = 0, resolve to the smallest candidate index so the map is total and
    deterministic.
    """
    if n < 1:
        raise InvalidParameterError(f"bit count must be >= 1, got {n}")
    if x == 0:
        return 0  # all points tie at distance 1, smallest index wins
    bins = 1 << n
    theta = math.atan2(x.imag, x.real)
    v = (theta - QUARTER_PI) * bins / TWO_PI + 0.5
    kf = math.floor(v)
    ki = int(kf) % bins
    if v == kf:
        # Boundary between bins ki-1 and ki: pick the smaller index
        # (which is 0 when the boundary wraps past the last bin).
        return 0 if ki == 0 else ki - 1
    return ki


def quantize(x: complex, n: int) -> QuantizerOutput:
    """Nearest-point phase quantization of ``x`` onto the 2^n-PSK codebook."""
    idx = quantize_index(complex(x), n)
    return QuantizerOutput(idx, psk_constellation(1 << n).point(idx))


def quantize_indices(y: np.ndarray, n: int) -> np.ndarray:
    """Vectorized quantizer indices for an array of complex samples."""
    if n < 1:
        raise InvalidParameterError(f"bit count must be >= 1, got {n}")
    bins = 1 << n
    y = np.asarray(y)
    theta = np.arctan2(y.imag, y.real)
    v = (theta - QUARTER_PI) * (bins / TWO_PI) + 0.5
    kf = np.floor(v)
    ki = kf.astype(np.int64) % bins
    tie = v == kf
    if np.any(tie):
        ki = np.where(tie, np.where(ki == 0, 0, ki - 1), ki)
    zero = y == 0
    if np.any(zero):
        ki = np.where(zero, 0, ki)  # all points tie, smallest index wins
    return ki


def quantize_vector(y: np.ndarray, n: int) -> list[QuantizerOutput]:
    """Element-wise quantization of a complex vector."""
    table = psk_constellation(1 << n).points
    return [QuantizerOutput(int(i), complex(table[i])) for i in quantize_indices(y, n)]


def quantize_points(y: np.ndarray, n: int) -> np.ndarray:
    """Element-wise quantization returning the codebook points as an array."""
    return psk_constellation(1 << n).points[quantize_indices(y, n)]


def quantization_angle(h: complex, n: int) -> float:
    """Residual angle arg(Q_n(conj(h)) * h), always in (-pi/2^n, pi/2^n].

    Measures how far ``h`` sits from the centre of its conjugate-quantizer
    bin. Zero input carries no angle and raises instead of returning garbage;
    it is a measure-zero event under any continuous channel law.
    """
    h = complex(h)
    if h == 0:
        raise ZeroInputError("quantization angle undefined for zero input")
    q = quantize(h.conjugate(), n)
    return math.atan2((q.point * h).imag, (q.point * h).real)
