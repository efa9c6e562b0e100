"""Reproducible parallel Monte Carlo estimation of symbol error probability.

Determinism contract
--------------------
A sweep's output is a pure function of its configuration. Work is split
into fixed-size chunks; chunk ``c`` of grid point ``p`` derives its three
random streams (symbols, channel, noise) from a 64-bit mix of
``(family, p, c, role)`` keyed with the run seed, and chunk results are
merged in chunk-index order. The early-stopping rule is evaluated only on
wave boundaries (a wave is a fixed number of chunks), so the set of chunks
that runs never depends on the worker count or scheduling order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .channel import (
    ROLE_CHANNEL,
    ROLE_NOISE,
    ROLE_SYMBOL,
    ChannelModel,
    CorrelationSpec,
    build_covariance,
    complex_normal,
    make_generator,
    mix64,
)
from .constellation import is_power_of_two, psk_constellation
from .errors import ConfigError, InsufficientDataError, InvalidParameterError
from .linalg import amrc_weight_matrix

DETECTOR_ORDER = ("mrc", "amrc", "mirror")

# Stream families keep unrelated experiments on disjoint random streams.
FAMILY_SWEEP = 0
FAMILY_EQUIV_LHS = 1
FAMILY_EQUIV_RHS = 2
FAMILY_VALIDATION = 3

WAVE_CHUNKS = 16
_WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class SimConfig:
    """Everything a sweep needs; immutable so workers can share it freely."""

    N_r: int
    M: int
    n: int
    rho_grid_db: tuple[float, ...]
    correlation: CorrelationSpec
    seed: int
    max_trials: int = 100_000_000
    target_errors: int = 200
    chunk_size: int = 50_000
    detectors: tuple[str, ...] = ("mrc", "amrc")

    def validate(self) -> None:
        if not is_power_of_two(self.M) or self.M < 2:
            raise ConfigError(f"M must be a power of two >= 2, got {self.M}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.M > (1 << self.n):
            raise ConfigError(f"M = {self.M} must not exceed 2^n = {1 << self.n}")
        if self.N_r < 1:
            raise ConfigError(f"N_r must be >= 1, got {self.N_r}")
        if not self.rho_grid_db:
            raise ConfigError("rho_grid_db must not be empty")
        if not 1 <= self.chunk_size <= self.max_trials:
            raise ConfigError(
                f"need 1 <= chunk_size <= max_trials, got {self.chunk_size}, {self.max_trials}"
            )
        if self.target_errors < 1:
            raise ConfigError(f"target_errors must be >= 1, got {self.target_errors}")
        if not self.detectors:
            raise ConfigError("at least one detector must be enabled")
        for det in self.detectors:
            if det not in DETECTOR_ORDER:
                raise ConfigError(f"unknown detector {det!r}")
        try:
            self.correlation.validate()
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        corr: dict = {"kind": self.correlation.kind}
        if self.correlation.kind == "exponential":
            corr["alpha"] = self.correlation.alpha
            corr["phi"] = self.correlation.phi
        if self.correlation.kind == "explicit":
            m = self.correlation.matrix
            corr["matrix_re"] = m.real.tolist()
            corr["matrix_im"] = m.imag.tolist()
        return {
            "N_r": self.N_r,
            "M": self.M,
            "n": self.n,
            "rho_grid_db": list(self.rho_grid_db),
            "correlation": corr,
            "seed": self.seed,
            "max_trials": self.max_trials,
            "target_errors": self.target_errors,
            "chunk_size": self.chunk_size,
            "detectors": list(self.detectors),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        corr = data["correlation"]
        matrix = None
        if corr["kind"] == "explicit":
            matrix = np.asarray(corr["matrix_re"]) + 1j * np.asarray(corr["matrix_im"])
        spec = CorrelationSpec(
            kind=corr["kind"],
            alpha=float(corr.get("alpha", 0.0)),
            phi=float(corr.get("phi", 0.0)),
            matrix=matrix,
        )
        cfg = cls(
            N_r=int(data["N_r"]),
            M=int(data["M"]),
            n=int(data["n"]),
            rho_grid_db=tuple(float(x) for x in data["rho_grid_db"]),
            correlation=spec,
            seed=int(data["seed"]),
            max_trials=int(data["max_trials"]),
            target_errors=int(data["target_errors"]),
            chunk_size=int(data["chunk_size"]),
            detectors=tuple(data["detectors"]),
        )
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class DetectorStats:
    errors: int
    trials: int
    sep: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class SimPoint:
    """Per-grid-point tallies for every enabled detector.

    ``mean_qbound`` is the Monte Carlo average of Q(sqrt(rho U)) over the
    same trials, with ``qbound_se`` its standard error (kept out of the CSV
    schema but used by the sandwich check).
    """

    rho_db: float
    trials: int
    detectors: dict[str, DetectorStats]
    mean_qbound: float
    qbound_se: float


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    intercept: float
    rho_window_db: tuple[float, float]
    points_used: int

    @property
    def diversity(self) -> float:
        return -self.slope


def wilson_interval(errors: int, trials: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval; well-behaved at zero and small error counts."""
    if trials <= 0:
        raise InvalidParameterError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def default_workers() -> int:
    env = os.environ.get("QSEP_WORKERS", "").strip()
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def draw_chunk(
    config: SimConfig, rho_index: int, chunk_index: int, family: int = FAMILY_SWEEP
):
    """Deterministic per-chunk draws: symbol indices, channel innovations, noise."""
    sid_s = mix64(family, rho_index, chunk_index, ROLE_SYMBOL)
    sid_c = mix64(family, rho_index, chunk_index, ROLE_CHANNEL)
    sid_n = mix64(family, rho_index, chunk_index, ROLE_NOISE)
    size = (config.chunk_size, config.N_r)
    s_idx = make_generator(config.seed, sid_s).integers(0, config.M, size=config.chunk_size)
    w = complex_normal(make_generator(config.seed, sid_c), size)
    noise = complex_normal(make_generator(config.seed, sid_n), size)
    return s_idx.astype(np.int64), w, noise


_DUMMY_DEC = np.zeros((1, 3), dtype=np.int64)


def run_chunk(
    config: SimConfig,
    model: ChannelModel,
    weight: np.ndarray,
    rho: float,
    rho_index: int,
    chunk_index: int,
    family: int = FAMILY_SWEEP,
    dec_out: np.ndarray | None = None,
):
    """Simulate one chunk through the active kernel backend."""
    s_idx, w, noise = draw_chunk(config, rho_index, chunk_index, family)
    record = dec_out is not None
    return backend.simulate_chunk(
        s_idx,
        w,
        noise,
        model.chol.lower,
        weight,
        psk_constellation(config.M).points,
        psk_constellation(1 << config.n).points,
        math.sqrt(rho),
        math.sqrt(rho / config.N_r),
        "mrc" in config.detectors,
        "amrc" in config.detectors,
        "mirror" in config.detectors,
        dec_out if record else _DUMMY_DEC,
        record,
    )


def run_point(
    config: SimConfig,
    rho_db: float,
    *,
    rho_index: int | None = None,
    model: ChannelModel | None = None,
    workers: int | None = None,
    family: int = FAMILY_SWEEP,
) -> SimPoint:
    """Accumulate one grid point until every detector has enough errors.

    Chunks run in waves of ``WAVE_CHUNKS``; the stop test (all enabled
    detectors at or past ``target_errors``) only looks at wave boundaries,
    which keeps the executed chunk set independent of parallelism.
    Exhausting ``max_trials`` first is an outcome, not an error.
    """
    config.validate()
    if rho_index is None:
        rho_index = config.rho_grid_db.index(rho_db)
    if model is None:
        model = build_covariance(config.correlation, config.N_r)
    rho = 10.0 ** (rho_db / 10.0)
    weight = amrc_weight_matrix(model.k, rho, model.eig)
    workers = workers or default_workers()
    max_chunks = config.max_trials // config.chunk_size

    errors = {det: 0 for det in config.detectors}
    q_sum = 0.0
    q2_sum = 0.0
    chunks_done = 0

    with ThreadPoolExecutor(max_workers=workers) as pool:
        while chunks_done < max_chunks:
            wave = range(chunks_done, min(chunks_done + WAVE_CHUNKS, max_chunks))
            results = list(
                pool.map(
                    lambda c: run_chunk(config, model, weight, rho, rho_index, c, family),
                    wave,
                )
            )
            for e_mrc, e_amrc, e_mirror, qs, q2s in results:
                per = {"mrc": e_mrc, "amrc": e_amrc, "mirror": e_mirror}
                for det in config.detectors:
                    errors[det] += per[det]
                q_sum += qs
                q2_sum += q2s
            chunks_done += len(wave)
            if all(errors[det] >= config.target_errors for det in config.detectors):
                break

    trials = chunks_done * config.chunk_size
    stats = {}
    for det in config.detectors:
        lo, hi = wilson_interval(errors[det], trials)
        stats[det] = DetectorStats(errors[det], trials, errors[det] / trials, lo, hi)
    mean_q = q_sum / trials
    var_q = max(0.0, q2_sum / trials - mean_q * mean_q)
    return SimPoint(rho_db, trials, stats, mean_q, math.sqrt(var_q / trials))


def run_sweep(config: SimConfig, workers: int | None = None) -> list[SimPoint]:
    """One SimPoint per grid value, on independent stream families per point."""
    config.validate()
    model = build_covariance(config.correlation, config.N_r)
    return [
        run_point(
            config, rho_db, rho_index=i, model=model, workers=workers
        )
        for i, rho_db in enumerate(config.rho_grid_db)
    ]


def estimate_slope(
    points: list[SimPoint],
    detector: str,
    window_db: tuple[float, float],
    min_errors: int = 50,
) -> SlopeEstimate:
    """Least-squares slope of log10(sep) vs log10(rho) inside a dB window.

    The diversity estimate is the negated slope (see ``SlopeEstimate``).
    Points with fewer than ``min_errors`` errors are too noisy to use.
    """
    lo, hi = window_db
    xs, ys = [], []
    for pt in points:
        if not lo <= pt.rho_db <= hi:
            continue
        st = pt.detectors.get(detector)
        if st is None or st.errors < min_errors or st.sep <= 0.0:
            continue
        xs.append(pt.rho_db / 10.0)  # log10 of linear SNR
        ys.append(math.log10(st.sep))
    if len(xs) < 3:
        raise InsufficientDataError(
            f"need >= 3 usable points in window {window_db}, found {len(xs)}"
        )
    slope, intercept = np.polyfit(np.array(xs), np.array(ys), 1)
    return SlopeEstimate(float(slope), float(intercept), (lo, hi), len(xs))


def top_decade_window(config: SimConfig, span_db: float = 10.0) -> tuple[float, float]:
    """Default slope/sandwich window: the top ``span_db`` of the grid."""
    top = max(config.rho_grid_db)
    return (top - span_db, top)


def equivalence_test(
    config: SimConfig, rho_db: float, trials: int, workers: int | None = None
) -> float:
    """Two-proportion z-statistic between the surrogate and mirror detectors.

    Runs two independent trial sets (disjoint stream families) of at least
    ``trials`` each: one measuring the surrogate detector, one the mirror
    representation. Under the distributional equivalence of the two, |z|
    stays small; |z| < 4 is the conventional pass threshold here.
    """
    if trials < 100_000:
        raise InsufficientDataError(f"equivalence test needs >= 1e5 trials, got {trials}")
    n_chunks = math.ceil(trials / config.chunk_size)
    fixed = replace(
        config,
        max_trials=n_chunks * config.chunk_size,
        target_errors=n_chunks * config.chunk_size + 1,  # never stop early
    )
    lhs = run_point(
        replace(fixed, detectors=("amrc",)),
        rho_db,
        rho_index=0,
        workers=workers,
        family=FAMILY_EQUIV_LHS,
    )
    rhs = run_point(
        replace(fixed, detectors=("mirror",)),
        rho_db,
        rho_index=0,
        workers=workers,
        family=FAMILY_EQUIV_RHS,
    )
    e1, n1 = lhs.detectors["amrc"].errors, lhs.trials
    e2, n2 = rhs.detectors["mirror"].errors, rhs.trials
    pooled = (e1 + e2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        return 0.0
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    return (e1 / n1 - e2 / n2) / se


def sandwich_check(
    points: list[SimPoint],
    window_db: tuple[float, float],
    min_errors: int = 50,
    z_slack: float = 2.0,
) -> dict:
    """Check sep_amrc against the [1x, 2x] band around mean Q(sqrt(rho U)).

    Asymptotic claim, so only points inside the high-SNR window are
    asserted. Membership is CI-adjusted: the Wilson interval of the SEP must
    intersect the band after widening it by ``z_slack`` standard errors of
    the bound average. Reports the empirical ratio sep/avg per point.
    """
    lo, hi = window_db
    entries = []
    all_ok = True
    for pt in points:
        if not lo <= pt.rho_db <= hi:
            continue
        st = pt.detectors.get("amrc")
        if st is None or st.errors < min_errors or pt.mean_qbound <= 0.0:
            continue
        band_lo = max(0.0, pt.mean_qbound - z_slack * pt.qbound_se)
        band_hi = 2.0 * (pt.mean_qbound + z_slack * pt.qbound_se)
        lower_ok = st.ci_high >= band_lo
        upper_ok = st.ci_low <= band_hi
        ok = lower_ok and upper_ok
        all_ok = all_ok and ok
        entries.append(
            {
                "rho_db": pt.rho_db,
                "sep": st.sep,
                "mean_qbound": pt.mean_qbound,
                "k_ratio": st.sep / pt.mean_qbound,
                "lower_ok": lower_ok,
                "upper_ok": upper_ok,
                "passed": ok,
            }
        )
    return {"window_db": [lo, hi], "points": entries, "passed": all_ok and bool(entries)}
