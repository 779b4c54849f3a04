"""Image-level confidence scores computed from the per-pixel probability map.

All scores are deterministic, pure functions. Higher is more confident; the
entropy-based scores are negated uncertainties, so they live in [-1, 0].
"""

import math
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .core import as_binary_mask, as_prob_vector, check_gamma, threshold

__all__ = [
    "entropy_map",
    "sdc",
    "amsp",
    "ane",
    "mmmc",
    "tla",
    "tla_fit_tau",
    "hamming_confidence",
]

_LN2 = math.log(2.0)


def entropy_map(p) -> np.ndarray:
    """Per-pixel binary entropy in bits, with the exact 0*log(0) = 0 branch."""
    p = as_prob_vector(p)
    u = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / _LN2
    return u + 0.0  # normalize -0.0 at certain pixels


def sdc(p, y_hat) -> float:
    """Soft Dice confidence: the Dice formula with probabilities in place of truth.

    2 * sum(p * y_hat) / (sum(p) + sum(y_hat)), and 0 for the empty-empty pair,
    hence 0 exactly when the predicted foreground carries no probability mass.
    """
    p = as_prob_vector(p)
    y_hat = as_binary_mask(y_hat)
    if p.size != y_hat.size:
        raise ValueError(f"length mismatch: {p.size} vs {y_hat.size}")
    s = float(np.sum(p[y_hat == 1]))
    denom = float(np.sum(p)) + int(y_hat.sum())
    if denom == 0.0:
        return 0.0
    return 2.0 * s / denom


def amsp(p) -> float:
    """Average per-pixel maximum class probability, in [0.5, 1]."""
    p = as_prob_vector(p)
    return float(np.mean(np.maximum(p, 1.0 - p)))


def ane(p) -> float:
    """Average negative entropy: -mean(entropy_map(p)), in [-1, 0]."""
    return -float(np.mean(entropy_map(p))) + 0.0


def mmmc(p) -> float:
    """Median-min-max aggregation of the entropy map: -(median + min) / max.

    Returns 0 in the all-certain limit (max entropy 0).
    """
    u = entropy_map(p)
    mx = float(u.max())
    if mx == 0.0:
        return 0.0
    return -float((np.median(u) + u.min()) / mx) + 0.0


def tla(p, tau: float) -> float:
    """Mean entropy over pixels with entropy strictly above tau, negated.

    An empty selection scores 0, the supremum of attainable values, ranking
    fully-certain images as most confident.
    """
    u = entropy_map(p)
    selected = u > float(tau)
    if not selected.any():
        return 0.0
    return -float(np.mean(u[selected])) + 0.0


def tla_fit_tau(tuning_probs: Sequence, gamma: float) -> float:
    """Fit the aggregation threshold tau from unlabeled tuning probability maps.

    alpha is the mean predicted-foreground ratio over the tuning images at the
    given decision threshold; tau is the nearest-rank (1 - alpha)-quantile of
    the entropies pooled over all tuning pixels (rank ceil((1 - alpha) * M),
    values sorted ascending; rank 0 maps to the smallest pooled value).
    """
    tuning_probs = list(tuning_probs)
    if not tuning_probs:
        raise ValueError("tuning set must be nonempty")
    gamma = check_gamma(gamma)
    ratios = []
    pooled = []
    for probs in tuning_probs:
        probs = as_prob_vector(probs)
        ratios.append(float(np.mean(threshold(probs, gamma))))
        pooled.append(entropy_map(probs))
    alpha = float(np.mean(ratios))
    values = np.sort(np.concatenate(pooled))
    rank = math.ceil((1.0 - alpha) * values.size)
    idx = max(rank, 1) - 1
    return float(values[idx])


def hamming_confidence(p, y_hat) -> float:
    """Average probability of the predicted class: mean(p*y_hat + (1-p)*(1-y_hat)).

    Optimal score for the Hamming loss; coincides with amsp(p) when y_hat is
    obtained by thresholding p at 0.5 and no pixel sits on the boundary.
    """
    p = as_prob_vector(p)
    y_hat = as_binary_mask(y_hat)
    if p.size != y_hat.size:
        raise ValueError(f"length mismatch: {p.size} vs {y_hat.size}")
    yh = y_hat.astype(np.float64)
    return float(np.mean(p * yh + (1.0 - p) * (1.0 - yh)))
