"""Risk-coverage analytics for batches of scored predictions.

Prefix selective risks are accumulated exactly (rational arithmetic on the
IEEE loss values, rounded once per point), so the oracle-dominance and
final-point identities hold exactly in floating point, independent of the
order the losses arrive in.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ScoredPrediction",
    "RCCurve",
    "rc_curve",
    "aurc",
    "oracle_curve",
    "random_baseline",
    "coverage_at_risk",
]


@dataclass(frozen=True)
class ScoredPrediction:
    """One prediction feeding the analytics: unique id, confidence, Dice-error loss."""

    id: str
    confidence: float
    loss: float


@dataclass(frozen=True)
class RCCurve:
    """Discrete risk-coverage curve: one point per accepted-set size 1..N.

    coverages[i] is exactly (i + 1) / N; risks[i] is the mean loss of the
    i + 1 most confident predictions.
    """

    coverages: np.ndarray
    risks: np.ndarray


def _check_loss(loss: float, ident: str) -> float:
    loss = float(loss)
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss for {ident!r} must lie in [0, 1], got {loss}")
    return loss


def _prefix_risks(losses: Sequence[float]) -> np.ndarray:
    acc = Fraction(0)
    out = np.empty(len(losses))
    for i, x in enumerate(losses):
        acc += Fraction(x)
        out[i] = float(acc / (i + 1))
    return out


def _curve_from_ordered_losses(losses: Sequence[float]) -> RCCurve:
    n = len(losses)
    coverages = np.arange(1, n + 1, dtype=np.float64) / n
    return RCCurve(coverages=coverages, risks=_prefix_risks(losses))


def rc_curve(batch: Sequence[ScoredPrediction]) -> RCCurve:
    """Empirical risk-coverage curve of a batch, ranked by confidence.

    Predictions are sorted by descending confidence with ties broken by
    ascending id, making the curve deterministic for any score assignment.
    """
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be nonempty")
    ids = [item.id for item in batch]
    if len(set(ids)) != len(ids):
        raise ValueError("sample ids must be unique within a batch")
    for item in batch:
        if not math.isfinite(item.confidence):
            raise ValueError(f"confidence for {item.id!r} must be finite")
        _check_loss(item.loss, item.id)
    ordered = sorted(batch, key=lambda item: (-item.confidence, item.id))
    return _curve_from_ordered_losses([item.loss for item in ordered])


def aurc(curve: RCCurve) -> float:
    """Area under the RC curve: the unweighted mean of the per-prefix risks."""
    return math.fsum(curve.risks) / curve.risks.size


def oracle_curve(losses: Iterable) -> RCCurve:
    """RC curve of the loss-sorted ordering: pointwise minimal selective risk.

    Takes (id, loss) pairs; ties are broken by ascending id.
    """
    pairs = [(str(i), _check_loss(l, str(i))) for i, l in losses]
    if not pairs:
        raise ValueError("losses must be nonempty")
    if len({i for i, _ in pairs}) != len(pairs):
        raise ValueError("sample ids must be unique within a batch")
    pairs.sort(key=lambda pair: (pair[1], pair[0]))
    return _curve_from_ordered_losses([l for _, l in pairs])


def random_baseline(losses: Iterable) -> float:
    """Expected selective risk of abstaining at random: the batch mean loss.

    Equals the final point of every RC curve on the same batch, exactly.
    """
    pairs = [(str(i), _check_loss(l, str(i))) for i, l in losses]
    if not pairs:
        raise ValueError("losses must be nonempty")
    acc = Fraction(0)
    for _, l in pairs:
        acc += Fraction(l)
    return float(acc / len(pairs))


def coverage_at_risk(curve: RCCurve, target_risk: float) -> float:
    """Largest coverage whose selective risk is at most target_risk; 0 if none."""
    ok = np.flatnonzero(curve.risks <= float(target_risk))
    if ok.size == 0:
        return 0.0
    return float(curve.coverages[ok[-1]])
