"""Matplotlib rendering of report figures next to the delimited output."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .selective import RCCurve
from .synth import ExperimentReport, SweepReport

__all__ = ["save_curve_figure", "save_experiment_figure", "save_sweep_figure"]

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel("coverage")
    ax.set_ylabel("selective risk")
    ax.grid(True, alpha=0.3)
    return fig, ax


def save_curve_figure(
    curve: RCCurve,
    path,
    label: str = "estimator",
    oracle: RCCurve | None = None,
    random_level: float | None = None,
) -> None:
    """Render one RC curve, optionally with oracle and random references."""
    fig, ax = _new_axes()
    ax.plot(curve.coverages, curve.risks, label=label, color=_COLORS[0])
    if oracle is not None:
        ax.plot(oracle.coverages, oracle.risks, "--", label="oracle", color="gray")
    if random_level is not None:
        ax.axhline(random_level, linestyle=":", label="random", color="black")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_experiment_figure(report: ExperimentReport, path) -> None:
    """Mean RC curve per estimator with a min/max band across runs."""
    fig, ax = _new_axes()
    for idx, name in enumerate(report.estimators):
        risks = report.risks[name]
        color = _COLORS[idx % len(_COLORS)]
        ax.plot(report.coverages, risks.mean(axis=0), label=name, color=color)
        ax.fill_between(
            report.coverages,
            risks.min(axis=0),
            risks.max(axis=0),
            color=color,
            alpha=0.2,
            linewidth=0,
        )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(report: SweepReport, path) -> None:
    """AURC versus the swept axis, mean curve with min/max band across runs."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = np.asarray(report.values)
    for idx, name in enumerate(report.estimators):
        lo, mean, hi = report.band(name)
        color = _COLORS[idx % len(_COLORS)]
        ax.plot(x, mean, marker="o", markersize=3, label=name, color=color)
        ax.fill_between(x, lo, hi, color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel(report.axis)
    ax.set_ylabel("AURC")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
