"""Image-level confidence estimation for binary segmentation under the Dice metric.

The package provides the soft Dice confidence and the baseline image-level
confidence scores, exact ideal-confidence computations with proven sandwich
bounds, risk-coverage analytics, a synthetic experiment harness on truncated
product label distributions, and a CLI with bit-exact file formats.
"""

from .core import (
    ForegroundStats,
    as_binary_mask,
    as_prob_vector,
    dice,
    dice_error,
    foreground_stats,
    threshold,
)
from .estimators import (
    amsp,
    ane,
    entropy_map,
    hamming_confidence,
    mmmc,
    sdc,
    tla,
    tla_fit_tau,
)
from .idc import (
    ENUM_GUARD,
    BoundReport,
    GlobalErrorBound,
    bounds,
    bounds_from_stats,
    eps_global,
    idc_enum,
    idc_full_truncated,
    idc_pb,
    poisson_binomial_pmf,
)
from .rng import Stream
from .selective import (
    RCCurve,
    ScoredPrediction,
    aurc,
    coverage_at_risk,
    oracle_curve,
    random_baseline,
    rc_curve,
)
from .synth import (
    ESTIMATORS,
    ExperimentReport,
    SweepReport,
    SynthConfig,
    SynthSample,
    calibrate_mu_z,
    draw_sample,
    marginals_from_q,
    perturb,
    run_experiment,
    run_sweep,
    sample_label,
    sample_q,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "as_prob_vector",
    "as_binary_mask",
    "threshold",
    "dice",
    "dice_error",
    "foreground_stats",
    "ForegroundStats",
    "entropy_map",
    "sdc",
    "amsp",
    "ane",
    "mmmc",
    "tla",
    "tla_fit_tau",
    "hamming_confidence",
    "ENUM_GUARD",
    "poisson_binomial_pmf",
    "idc_enum",
    "idc_pb",
    "idc_full_truncated",
    "BoundReport",
    "bounds",
    "bounds_from_stats",
    "GlobalErrorBound",
    "eps_global",
    "ScoredPrediction",
    "RCCurve",
    "rc_curve",
    "aurc",
    "oracle_curve",
    "random_baseline",
    "coverage_at_risk",
    "Stream",
    "ESTIMATORS",
    "SynthConfig",
    "SynthSample",
    "ExperimentReport",
    "SweepReport",
    "sample_q",
    "marginals_from_q",
    "sample_label",
    "perturb",
    "draw_sample",
    "calibrate_mu_z",
    "run_experiment",
    "run_sweep",
]
