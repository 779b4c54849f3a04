"""Synthetic segmentation experiments on truncated product label distributions.

Each synthetic image is a vector of Bernoulli parameters q drawn through a
logit-normal (q_i = sigmoid of a normal draw); the label is a product of
independent Bernoulli(q_i) conditioned on not being all-zero, which keeps
every image a genuine segmentation target. The marginal foreground
probabilities p follow from q by normalizing with the nonzero-label mass,
and a non-ideal probabilistic model is simulated by perturbing p at the
logit level.

Because the label space is small, the conditional expected Dice error of
each prediction is computed exactly under the truncated posterior, and the
risk-coverage analytics run on those exact losses: the emitted curves are
true RC curves, free of label-sampling noise, and the full-posterior
confidence is exactly the optimal (oracle) ranking.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, Sequence, Tuple

import numpy as np

from .core import as_prob_vector, check_gamma, threshold
from .estimators import amsp, sdc
from .idc import ENUM_GUARD, idc_full_truncated, idc_pb
from .rng import Stream
from .selective import (
    RCCurve,
    ScoredPrediction,
    aurc,
    oracle_curve,
    random_baseline,
    rc_curve,
)

__all__ = [
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

# Scores computed per sample: the soft Dice confidence and average MSP of the
# model output, the marginal-based exact confidence on the model output and on
# the true marginals, the full-posterior exact confidence, and the two
# references (rank by true loss; abstain at random).
ESTIMATORS = (
    "sdc",
    "amsp",
    "idc_pb_hat",
    "idc_pb_true",
    "idc_full",
    "oracle",
    "random",
)

MAX_LABEL_REJECTIONS = 10_000


@dataclass(frozen=True)
class SynthConfig:
    """Full specification of one synthetic experiment."""

    n: int
    mu_z: float
    samples: int
    runs: int
    seed: int
    rho_z: float = 5.0
    rho_eta: float = 0.0
    gamma: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not self.rho_z > 0.0:
            raise ValueError("rho_z must be positive")
        if self.rho_eta < 0.0:
            raise ValueError("rho_eta must be nonnegative")
        check_gamma(self.gamma)
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SynthSample:
    """One drawn image: Bernoulli parameters, true marginals, model output, label."""

    q: np.ndarray
    p: np.ndarray
    p_hat: np.ndarray
    y: np.ndarray


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logit(p: np.ndarray) -> np.ndarray:
    return np.log(p) - np.log1p(-p)


def sample_q(n: int, mu_z: float, rho_z: float, stream: Stream) -> np.ndarray:
    """Per-pixel Bernoulli parameters q_i = sigmoid(z_i), z_i ~ N(mu_z, rho_z^2)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not rho_z > 0.0:
        raise ValueError("rho_z must be positive")
    return _sigmoid(stream.normal(n, loc=mu_z, scale=rho_z))


def marginals_from_q(q) -> np.ndarray:
    """Marginal foreground probabilities p_i = q_i / (1 - prod(1 - q_j)).

    The normalizer is the nonzero-label mass of the truncated product
    distribution, computed stably through log1p/expm1.
    """
    q = as_prob_vector(q)
    if not np.any(q > 0.0):
        raise ValueError("marginals undefined for an all-zero q")
    with np.errstate(divide="ignore"):
        z = -math.expm1(float(np.sum(np.log1p(-q))))
    p = q / z
    if float(p.max()) > 1.0 + 1e-12:
        raise AssertionError("marginal normalization exceeded 1 beyond tolerance")
    return np.minimum(p, 1.0)


def _conditional_label(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact sequential sampler of a nonzero label from uniforms u.

    Pixel i is drawn conditioned on at least one success overall: while no
    success has occurred, the Bernoulli parameter is q_i / (1 - prod of
    (1 - q_j) over j >= i); afterwards it is plain q_i.
    """
    with np.errstate(divide="ignore"):
        logs = np.log1p(-q)
    suffix = np.cumsum(logs[::-1])[::-1]
    denom = -np.expm1(suffix)
    y = np.zeros(q.size, dtype=np.uint8)
    none_yet = True
    for i in range(q.size):
        if none_yet:
            prob = q[i] / denom[i] if denom[i] > 0.0 else 0.0
        else:
            prob = q[i]
        if u[i] < min(prob, 1.0):
            y[i] = 1
            none_yet = False
    return y


def sample_label(q, stream: Stream, max_rejections: int = MAX_LABEL_REJECTIONS) -> np.ndarray:
    """Draw a never-all-zero label: independent Bernoulli(q_i) with rejection.

    All-zero draws are rejected; after max_rejections rejected attempts the
    sampler switches to exact conditional sampling, which preserves the
    truncated distribution and guarantees termination for any admissible q.
    """
    q = as_prob_vector(q)
    if not np.any(q > 0.0):
        raise ValueError("label distribution undefined for an all-zero q")
    for _ in range(max_rejections):
        y = (stream.uniform(q.size) < q).astype(np.uint8)
        if y.any():
            return y
    return _conditional_label(q, stream.uniform(q.size))


def _sample_labels(q_matrix: np.ndarray, stream: Stream, max_rounds: int = 64) -> np.ndarray:
    """Vectorized truncated-label sampler for a batch of q rows.

    Batched rejection with per-round redraws of the still-rejected rows, then
    exact conditional completion; distributionally identical to sample_label.
    """
    m, n = q_matrix.shape
    y = np.zeros((m, n), dtype=np.uint8)
    pending = np.arange(m)
    for _ in range(max_rounds):
        if pending.size == 0:
            return y
        u = stream.uniform(pending.size * n).reshape(pending.size, n)
        draw = u < q_matrix[pending]
        ok = draw.any(axis=1)
        y[pending[ok]] = draw[ok]
        pending = pending[~ok]
    if pending.size:
        q = q_matrix[pending]
        with np.errstate(divide="ignore"):
            logs = np.log1p(-q)
        suffix = np.cumsum(logs[:, ::-1], axis=1)[:, ::-1]
        denom = -np.expm1(suffix)
        u = stream.uniform(pending.size * n).reshape(pending.size, n)
        rows = np.zeros((pending.size, n), dtype=np.uint8)
        none_yet = np.ones(pending.size, dtype=bool)
        for i in range(n):
            with np.errstate(divide="ignore", invalid="ignore"):
                cond = np.where(denom[:, i] > 0.0, q[:, i] / denom[:, i], 0.0)
            prob = np.where(none_yet, np.minimum(cond, 1.0), q[:, i])
            hit = u[:, i] < prob
            rows[:, i] = hit
            none_yet &= ~hit
        y[pending] = rows
    return y


def perturb(p, rho_eta: float, stream: Stream) -> np.ndarray:
    """Logit-level perturbation: p_i -> sigmoid(logit(p_i) + N(0, rho_eta^2)).

    rho_eta = 0 is the identity, bitwise, and consumes no randomness.
    Probabilities exactly 0 or 1 are fixed points for any rho_eta.
    """
    p = as_prob_vector(p)
    if rho_eta < 0.0:
        raise ValueError("rho_eta must be nonnegative")
    if rho_eta == 0.0:
        return p.copy()
    eta = stream.normal(p.size, loc=0.0, scale=rho_eta)
    out = p.copy()
    interior = (p > 0.0) & (p < 1.0)
    out[interior] = _sigmoid(_logit(p[interior]) + eta[interior])
    return out


def draw_sample(n: int, mu_z: float, rho_z: float, rho_eta: float, stream: Stream) -> SynthSample:
    """Draw one image in the documented stream order: q, then y, then the perturbation."""
    q = sample_q(n, mu_z, rho_z, stream)
    y = sample_label(q, stream)
    p = marginals_from_q(q)
    p_hat = perturb(p, rho_eta, stream)
    return SynthSample(q=q, p=p, p_hat=p_hat, y=y)


def calibrate_mu_z(
    alpha_target: float,
    n: int,
    rho_z: float,
    seed: int = 0,
    draws: int = 100_000,
    tol: float = 1e-3,
    lo: float = -20.0,
    hi: float = 20.0,
) -> float:
    """Solve for the logit mean giving an expected label foreground ratio.

    Bisection on mu_z over [lo, hi], probing the expected foreground ratio by
    Monte Carlo with `draws` label draws per probe; every probe reuses the
    stream seeded with `seed` (common random numbers), so repeated calls are
    deterministic. The bracket is shrunk below `tol`.

    Because every label has at least one foreground pixel, the achievable
    ratio is bounded below by 1/n; targets at or below that floor are not
    bracketed and raise.
    """
    if not 0.0 < alpha_target < 1.0:
        raise ValueError("alpha_target must lie strictly between 0 and 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not rho_z > 0.0:
        raise ValueError("rho_z must be positive")

    def probe(mu: float) -> float:
        stream = Stream(seed)
        z = stream.normal(draws * n).reshape(draws, n)
        q = _sigmoid(mu + rho_z * z)
        y = _sample_labels(q, stream)
        return float(np.mean(y))

    a_lo = probe(lo)
    a_hi = probe(hi)
    if not (a_lo <= alpha_target <= a_hi):
        raise ValueError(
            f"target foreground ratio {alpha_target} not bracketed on "
            f"[{lo}, {hi}] (attainable ratios are above 1/n = {1.0 / n:.4g}; "
            f"probes gave [{a_lo:.4g}, {a_hi:.4g}])"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid) < alpha_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ExperimentReport:
    """Per-run RC curves and AURCs for every requested estimator.

    risks[name] has shape (runs, samples): the selective risk at each of the
    samples coverage levels, per run. aurcs[name] has shape (runs,).
    """

    config: SynthConfig
    estimators: Tuple[str, ...]
    coverages: np.ndarray
    risks: Dict[str, np.ndarray]
    aurcs: Dict[str, np.ndarray]

    def aurc_summary(self) -> Dict[str, Tuple[float, float, float]]:
        """Per-estimator (min, mean, max) AURC across runs."""
        return {
            name: (float(v.min()), float(v.mean()), float(v.max()))
            for name, v in self.aurcs.items()
        }


def _check_estimators(estimators: Sequence[str]) -> Tuple[str, ...]:
    estimators = tuple(estimators)
    if not estimators:
        raise ValueError("at least one estimator is required")
    unknown = [name for name in estimators if name not in ESTIMATORS]
    if unknown:
        raise ValueError(f"unknown estimators {unknown}; choose from {ESTIMATORS}")
    return estimators


def _run_one(config: SynthConfig, run_index: int, estimators: Tuple[str, ...]):
    stream = Stream(int(config.seed) ^ run_index)
    n_samples = config.samples
    losses = np.empty(n_samples)
    scores = {name: np.empty(n_samples) for name in estimators if name not in ("oracle", "random")}
    for i in range(n_samples):
        sample = draw_sample(config.n, config.mu_z, config.rho_z, config.rho_eta, stream)
        y_hat = threshold(sample.p_hat, config.gamma)
        full = idc_full_truncated(sample.q, y_hat)
        losses[i] = 1.0 - full
        if "sdc" in scores:
            scores["sdc"][i] = sdc(sample.p_hat, y_hat)
        if "amsp" in scores:
            scores["amsp"][i] = amsp(sample.p_hat)
        if "idc_pb_hat" in scores:
            scores["idc_pb_hat"][i] = idc_pb(sample.p_hat, y_hat)
        if "idc_pb_true" in scores:
            scores["idc_pb_true"][i] = idc_pb(sample.p, y_hat)
        if "idc_full" in scores:
            scores["idc_full"][i] = full
    ids = [f"{i:06d}" for i in range(n_samples)]
    loss_pairs = list(zip(ids, losses))
    run_risks = {}
    run_aurcs = {}
    for name in estimators:
        if name == "oracle":
            curve = oracle_curve(loss_pairs)
        elif name == "random":
            level = random_baseline(loss_pairs)
            curve = RCCurve(
                coverages=np.arange(1, n_samples + 1, dtype=np.float64) / n_samples,
                risks=np.full(n_samples, level),
            )
        else:
            batch = [
                ScoredPrediction(id=ids[i], confidence=float(scores[name][i]), loss=float(losses[i]))
                for i in range(n_samples)
            ]
            curve = rc_curve(batch)
        run_risks[name] = curve.risks
        run_aurcs[name] = aurc(curve)
    return run_risks, run_aurcs


def run_experiment(
    config: SynthConfig,
    estimators: Sequence[str] = ESTIMATORS,
    workers: int = 1,
) -> ExperimentReport:
    """Run the repeated synthetic experiment and collect per-run RC analytics.

    Run r draws its samples from the substream seeded with seed XOR r; the
    per-sample losses are the exact conditional Dice errors under the
    truncated posterior. Runs are independent, so they may execute on worker
    threads; results are merged in run order and are bit-identical for any
    worker count.
    """
    estimators = _check_estimators(estimators)
    if config.n > ENUM_GUARD:
        raise ValueError(
            f"n={config.n} exceeds the enumeration guard ({ENUM_GUARD}); the "
            "experiment losses require the exact full-posterior confidence"
        )
    indices = range(config.runs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _run_one(config, r, estimators), indices))
    else:
        results = [_run_one(config, r, estimators) for r in indices]
    coverages = np.arange(1, config.samples + 1, dtype=np.float64) / config.samples
    risks = {
        name: np.stack([res[0][name] for res in results]) for name in estimators
    }
    aurcs = {
        name: np.array([res[1][name] for res in results]) for name in estimators
    }
    return ExperimentReport(
        config=config,
        estimators=estimators,
        coverages=coverages,
        risks=risks,
        aurcs=aurcs,
    )


@dataclass(frozen=True)
class SweepReport:
    """AURCs of repeated experiments along one swept configuration axis.

    aurcs[name] has shape (len(values), runs).
    """

    axis: str
    values: Tuple[float, ...]
    base_config: SynthConfig
    estimators: Tuple[str, ...]
    aurcs: Dict[str, np.ndarray]

    def band(self, name: str):
        """(min, mean, max) AURC arrays over runs, one entry per axis value."""
        a = self.aurcs[name]
        return a.min(axis=1), a.mean(axis=1), a.max(axis=1)


SWEEP_AXES = ("mu_z", "rho_eta")


def run_sweep(
    config: SynthConfig,
    axis: str,
    values: Sequence[float],
    estimators: Sequence[str] = ESTIMATORS,
    workers: int = 1,
) -> SweepReport:
    """Repeat the experiment along a mu_z or rho_eta grid and tabulate AURCs."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError("sweep values must be nonempty")
    estimators = _check_estimators(estimators)
    aurcs = {name: np.empty((len(values), config.runs)) for name in estimators}
    for j, value in enumerate(values):
        point = replace(config, **{axis: value})
        report = run_experiment(point, estimators, workers=workers)
        for name in estimators:
            aurcs[name][j] = report.aurcs[name]
    return SweepReport(
        axis=axis,
        values=values,
        base_config=config,
        estimators=estimators,
        aurcs=aurcs,
    )
