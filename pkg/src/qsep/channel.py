"""Receive covariance construction and random synthesis of channels and noise.

Covariance kinds
----------------
* ``identity``: K = I, the spatially white case.
* ``exponential``: K_ij = alpha^|i-j| * exp(j*phi*(i-j)) with alpha in [0, 1).
* ``explicit``: any user-supplied Hermitian positive-definite matrix.

All randomness flows through counter-based Philox streams keyed by
``(seed, stream_id)`` so that every draw sequence is replayable and streams
with distinct ids are statistically independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constellation import is_power_of_two
from .errors import InvalidParameterError, NotHermitianError
from .linalg import (
    CholeskyFactor,
    HermitianEigen,
    cholesky,
    eig_hermitian,
    require_hermitian,
)

_MASK64 = (1 << 64) - 1

# Fixed per-role stream salts: channel, noise and symbol draws always come
# from distinct streams so their marginal sequences never interleave.
ROLE_CHANNEL = 1
ROLE_NOISE = 2
ROLE_SYMBOL = 3


def mix64(*words: int) -> int:
    """Mix integer words into one well-scrambled 64-bit value (splitmix64)."""
    acc = 0x9E3779B97F4A7C15
    for w in words:
        acc = (acc ^ (int(w) & _MASK64)) * 0xBF58476D1CE4E5B9 & _MASK64
        acc ^= acc >> 27
        acc = acc * 0x94D049BB133111EB & _MASK64
        acc ^= acc >> 31
    return acc


@dataclass
class RngStream:
    """Replayable random stream identified by ``(seed, stream_id)``.

    ``counter`` tracks how many draw calls have been issued, purely for
    introspection; replay determinism comes from reconstructing the stream
    from the same key.
    """

    seed: int
    stream_id: int
    counter: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = make_generator(self.seed, self.stream_id)
        return self._gen

    def _tick(self) -> np.random.Generator:
        self.counter += 1
        return self.generator()


def make_generator(seed: int, stream_id: int) -> np.random.Generator:
    """Philox generator keyed directly by the (seed, stream_id) pair."""
    key = np.array([int(seed) & _MASK64, int(stream_id) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class CorrelationSpec:
    """Which covariance to build: identity, exponential(alpha, phi) or explicit."""

    kind: str
    alpha: float = 0.0
    phi: float = 0.0
    matrix: np.ndarray | None = None

    def validate(self) -> None:
        if self.kind not in ("identity", "exponential", "explicit"):
            raise InvalidParameterError(f"unknown correlation kind {self.kind!r}")
        if self.kind == "exponential" and not 0.0 <= self.alpha < 1.0:
            raise InvalidParameterError(
                f"exponential correlation needs 0 <= alpha < 1, got {self.alpha}"
            )
        if self.kind == "explicit" and self.matrix is None:
            raise InvalidParameterError("explicit correlation requires a matrix")


@dataclass(frozen=True)
class ChannelModel:
    """Covariance K with its cached factorizations.

    The Cholesky factor drives channel sampling, the eigendecomposition
    drives the combiner weight matrix, and both are built once so the model
    is read-only afterwards and safe to share across workers.
    """

    n_r: int
    k: np.ndarray
    chol: CholeskyFactor
    eig: HermitianEigen
    det_k: float


def exponential_covariance(n_r: int, alpha: float, phi: float) -> np.ndarray:
    idx = np.arange(n_r)
    delta = idx[:, None] - idx[None, :]
    mag = np.where(delta == 0, 1.0, float(abs(alpha)) ** np.abs(delta))
    return mag * np.exp(1j * phi * delta)


def build_covariance(spec: CorrelationSpec, n_r: int) -> ChannelModel:
    """Assemble K for the requested model and cache its factorizations."""
    if n_r < 1:
        raise InvalidParameterError(f"antenna count must be >= 1, got {n_r}")
    spec.validate()
    if spec.kind == "identity" or (spec.kind == "exponential" and spec.alpha == 0.0):
        k = np.eye(n_r, dtype=np.complex128)
    elif spec.kind == "exponential":
        k = exponential_covariance(n_r, spec.alpha, spec.phi)
    else:
        k = require_hermitian(spec.matrix)
        if k.shape[0] != n_r:
            raise InvalidParameterError(
                f"explicit matrix is {k.shape[0]}x{k.shape[0]} but N_r = {n_r}"
            )
    chol = cholesky(k)  # also proves positive-definiteness
    eig = eig_hermitian(k)
    det_k = float(np.prod(np.diag(chol.lower).real ** 2))
    return ChannelModel(n_r, k, chol, eig, det_k)


def complex_normal(gen: np.random.Generator, size) -> np.ndarray:
    """Circularly symmetric unit-variance complex normals (variance 1/2 per part)."""
    out = gen.standard_normal(size=(2,) + tuple(np.atleast_1d(size)))
    return (out[0] + 1j * out[1]) / np.sqrt(2.0)


def sample_channel(model: ChannelModel, rng: RngStream) -> np.ndarray:
    """One correlated channel draw h = L w with E[h h^H] = K."""
    w = complex_normal(rng._tick(), model.n_r)
    return model.chol.lower @ w


def sample_noise(n_r: int, rng: RngStream) -> np.ndarray:
    """One white noise draw with i.i.d. unit-variance complex entries."""
    return complex_normal(rng._tick(), n_r)


def sample_symbol(m: int, rng: RngStream) -> int:
    """Uniform constellation index in 0..M-1."""
    if not is_power_of_two(m) or m < 2:
        raise InvalidParameterError(f"M must be a power of two >= 2, got {m}")
    return int(rng._tick().integers(0, m))


def load_covariance_file(path) -> np.ndarray:
    """Parse an explicit covariance from text.

    Format: first line is ``N_r``; each following non-empty line is
    ``i j re im`` with zero-based indices. Every entry must appear exactly
    once and the result must be Hermitian.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise InvalidParameterError(f"{path}: empty covariance file")
    try:
        n_r = int(lines[0])
    except ValueError as exc:
        raise InvalidParameterError(f"{path}: first line must be N_r") from exc
    if n_r < 1:
        raise InvalidParameterError(f"{path}: N_r must be >= 1")
    if len(lines) - 1 != n_r * n_r:
        raise InvalidParameterError(
            f"{path}: expected {n_r * n_r} entry lines, found {len(lines) - 1}"
        )
    k = np.full((n_r, n_r), np.nan, dtype=np.complex128)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise InvalidParameterError(f"{path}: malformed entry line {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if not (0 <= i < n_r and 0 <= j < n_r):
            raise InvalidParameterError(f"{path}: index ({i}, {j}) out of range")
        if not np.isnan(k[i, j].real):
            raise InvalidParameterError(f"{path}: duplicate entry ({i}, {j})")
        k[i, j] = float(parts[2]) + 1j * float(parts[3])
    if np.any(np.isnan(k.real)):
        raise InvalidParameterError(f"{path}: missing entries")
    try:
        return require_hermitian(k)
    except NotHermitianError as exc:
        raise NotHermitianError(f"{path}: {exc}") from exc
