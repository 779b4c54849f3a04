"""Binary-segmentation primitives: validated vectors, thresholding, Dice overlap."""

from typing import NamedTuple

import numpy as np

__all__ = [
    "as_prob_vector",
    "as_binary_mask",
    "check_gamma",
    "threshold",
    "dice",
    "dice_error",
    "foreground_stats",
    "ForegroundStats",
]


def as_prob_vector(values) -> np.ndarray:
    """Validate a per-pixel probability vector: 1-D, nonempty, entries in [0, 1]."""
    p = np.asarray(values, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be 1-D and nonempty")
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def as_binary_mask(values) -> np.ndarray:
    """Validate a hard segmentation mask: 1-D, nonempty, entries exactly 0 or 1."""
    m = np.asarray(values)
    if m.ndim != 1 or m.size == 0:
        raise ValueError("mask must be 1-D and nonempty")
    if not np.all((m == 0) | (m == 1)):
        raise ValueError("mask entries must be exactly 0 or 1")
    return m.astype(np.uint8)


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"decision threshold must lie in [0, 1], got {gamma}")
    return gamma


def _check_equal_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")


def threshold(p, gamma: float) -> np.ndarray:
    """Hard segmentation by inclusive thresholding: output is 1 where p_i >= gamma."""
    p = as_prob_vector(p)
    gamma = check_gamma(gamma)
    return (p >= gamma).astype(np.uint8)


def dice(y, y_hat) -> float:
    """Dice overlap 2|TP| / (|y| + |y_hat|); defined as 0 when both masks are empty.

    The empty-empty convention makes dice(y, 0) = dice(0, y_hat) = 0 for every mask.
    """
    y = as_binary_mask(y)
    y_hat = as_binary_mask(y_hat)
    _check_equal_length(y, y_hat)
    tp = int(np.sum(y.astype(np.int64) * y_hat))
    denom = int(y.sum()) + int(y_hat.sum())
    if denom == 0:
        return 0.0
    return 2.0 * tp / denom


def dice_error(y, y_hat) -> float:
    """Dice dissimilarity 1 - dice(y, y_hat)."""
    return 1.0 - dice(y, y_hat)


class ForegroundStats(NamedTuple):
    """Foreground summary of a (probabilities, prediction) pair.

    k: predicted-foreground pixel count, mu: mean foreground probability
    (0 when k = 0), lam: total background probability, s: total foreground
    probability (s = k * mu).
    """

    k: int
    mu: float
    lam: float
    s: float


def foreground_stats(p, y_hat) -> ForegroundStats:
    p = as_prob_vector(p)
    y_hat = as_binary_mask(y_hat)
    _check_equal_length(p, y_hat)
    fg = y_hat == 1
    k = int(np.count_nonzero(fg))
    s = float(np.sum(p[fg]))
    lam = float(np.sum(p[~fg]))
    mu = s / k if k > 0 else 0.0
    return ForegroundStats(k=k, mu=mu, lam=lam, s=s)
