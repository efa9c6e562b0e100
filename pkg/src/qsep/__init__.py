"""Symbol error probability simulation and high-SNR analytics for
phase-quantized SIMO receivers with M-PSK over correlated Rayleigh fading."""

__version__ = "0.1.0"

from .analytic import (
    AsymptoteCurve,
    GainResult,
    asymptote_curve,
    coding_gain_heuristic,
    coding_gain_strict,
    diversity_gain,
    gamma_half_integer,
    mgf_coefficient_b,
    qfunc,
)
from .channel import (
    ChannelModel,
    CorrelationSpec,
    RngStream,
    build_covariance,
    load_covariance_file,
    sample_channel,
    sample_noise,
    sample_symbol,
)
from .constellation import (
    PskConstellation,
    QuantizerOutput,
    psk_constellation,
    quantization_angle,
    quantize,
    quantize_vector,
)
from .linalg import (
    CholeskyFactor,
    HermitianEigen,
    amrc_weight_matrix,
    cholesky,
    det_hermitian_pd,
    eig_hermitian,
)
from .montecarlo import (
    SimConfig,
    SimPoint,
    SlopeEstimate,
    equivalence_test,
    estimate_slope,
    run_point,
    run_sweep,
    sandwich_check,
)
from .receiver import (
    BoundStatistics,
    DetectionResult,
    TrialDraw,
    amrc_detect,
    amrc_expansion_residual,
    bound_statistics,
    mirror_detect,
    mrc_detect,
    received_signal,
)

__all__ = [
    "AsymptoteCurve",
    "BoundStatistics",
    "ChannelModel",
    "CholeskyFactor",
    "CorrelationSpec",
    "DetectionResult",
    "GainResult",
    "HermitianEigen",
    "PskConstellation",
    "QuantizerOutput",
    "RngStream",
    "SimConfig",
    "SimPoint",
    "SlopeEstimate",
    "TrialDraw",
    "amrc_detect",
    "amrc_expansion_residual",
    "amrc_weight_matrix",
    "asymptote_curve",
    "bound_statistics",
    "build_covariance",
    "cholesky",
    "coding_gain_heuristic",
    "coding_gain_strict",
    "det_hermitian_pd",
    "diversity_gain",
    "eig_hermitian",
    "equivalence_test",
    "estimate_slope",
    "gamma_half_integer",
    "load_covariance_file",
    "mgf_coefficient_b",
    "mirror_detect",
    "mrc_detect",
    "psk_constellation",
    "qfunc",
    "quantization_angle",
    "quantize",
    "quantize_vector",
    "received_signal",
    "run_point",
    "run_sweep",
    "sample_channel",
    "sample_noise",
    "sample_symbol",
    "sandwich_check",
]
