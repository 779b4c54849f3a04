"""Command-line surface: score, rc, synth, bounds, idc."""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from .core import dice_error, foreground_stats, threshold
from .estimators import amsp, ane, hamming_confidence, mmmc, sdc, tla, tla_fit_tau
from .idc import bounds_from_stats, idc_enum, idc_full_truncated, idc_pb
from .io import atomic_write_text, read_manifest, read_vector_file
from .selective import (
    ScoredPrediction,
    aurc,
    coverage_at_risk,
    oracle_curve,
    random_baseline,
    rc_curve,
)
from .synth import ESTIMATORS, SynthConfig, calibrate_mu_z, run_experiment, run_sweep

SCORE_ESTIMATORS = ("sdc", "amsp", "ane", "mmmc", "tla", "hamming")

DEFAULT_RHO_ETA_GRID = tuple(0.25 * i for i in range(13))  # 0, 0.25, ..., 3.0
DEFAULT_ALPHA_GRID = (0.01, 0.025, 0.05, 0.1, 0.175, 0.25, 0.35, 0.5)


class CliError(Exception):
    pass


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _emit(text: str, output) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(output, text)


def _score_value(name: str, p, gamma: float, tau):
    if name == "sdc":
        return sdc(p, threshold(p, gamma))
    if name == "amsp":
        return amsp(p)
    if name == "ane":
        return ane(p)
    if name == "mmmc":
        return mmmc(p)
    if name == "tla":
        return tla(p, tau)
    if name == "hamming":
        return hamming_confidence(p, threshold(p, gamma))
    raise CliError(f"unknown estimator {name!r}")


def _cmd_score(args) -> int:
    rows = read_manifest(args.manifest)
    tau = None
    if args.estimator == "tla":
        if args.tau is not None and args.tau_manifest is not None:
            raise CliError("--tau and --tau-manifest are mutually exclusive")
        if args.tau is not None:
            tau = args.tau
        elif args.tau_manifest is not None:
            tuning = [
                read_vector_file(row.prob_path, "prob")
                for row in read_manifest(args.tau_manifest)
            ]
            tau = tla_fit_tau(tuning, args.gamma)
        else:
            raise CliError("estimator 'tla' requires --tau or --tau-manifest")
    with_truth = [row.truth_path is not None for row in rows]
    if any(with_truth) and not all(with_truth):
        raise CliError("manifest mixes rows with and without truth_path")
    has_truth = all(with_truth)
    header = "sample_id,estimator,score"
    if has_truth:
        header += ",dice_error"
    lines = [header]
    for row in rows:
        try:
            p = read_vector_file(row.prob_path, "prob")
            value = _score_value(args.estimator, p, args.gamma, tau)
            fields = [row.sample_id, args.estimator, _fmt(value)]
            if has_truth:
                truth = read_vector_file(row.truth_path, "mask")
                fields.append(_fmt(dice_error(truth, threshold(p, args.gamma))))
        except ValueError as exc:
            raise CliError(f"sample {row.sample_id}: {exc}") from exc
        lines.append(",".join(fields))
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _read_scores_csv(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for required in ("sample_id", "score"):
            if required not in fields:
                raise CliError(f"{path}: scores CSV must have a {required!r} column")
        if "dice_error" not in fields:
            raise CliError(f"{path}: scores CSV lacks the dice_error loss column")
        batch = []
        label = None
        for record in reader:
            if label is None:
                label = record.get("estimator")
            try:
                batch.append(
                    ScoredPrediction(
                        id=record["sample_id"],
                        confidence=float(record["score"]),
                        loss=float(record["dice_error"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise CliError(f"{path}: bad row for sample {record.get('sample_id')!r}: {exc}")
    if not batch:
        raise CliError(f"{path}: no score rows")
    return batch, (label or "estimator")


def _cmd_rc(args) -> int:
    batch, label = _read_scores_csv(args.scores)
    try:
        curve = rc_curve(batch)
        losses = [(item.id, item.loss) for item in batch]
        oracle = oracle_curve(losses) if args.references else None
        random_level = random_baseline(losses) if args.references else None
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    header = "coverage,selective_risk"
    if args.references:
        header += ",oracle_risk,random_risk"
    lines = [header]
    for i in range(curve.risks.size):
        fields = [_fmt(curve.coverages[i]), _fmt(curve.risks[i])]
        if args.references:
            fields.extend([_fmt(oracle.risks[i]), _fmt(random_level)])
        lines.append(",".join(fields))
    lines.append(f"# aurc={_fmt(aurc(curve))}")
    if args.target_risk is not None:
        lines.append(
            f"# coverage_at_risk={_fmt(coverage_at_risk(curve, args.target_risk))}"
        )
    _emit("\n".join(lines) + "\n", args.output)
    if args.figure is not None:
        from .figures import save_curve_figure

        save_curve_figure(
            curve, args.figure, label=label, oracle=oracle, random_level=random_level
        )
    return 0


def _cmd_bounds(args) -> int:
    rows = read_manifest(args.manifest)
    lines = ["sample_id,k,mu,lambda,s,b_lower,b_upper,eps,flag"]
    eps_values = []
    for row in rows:
        try:
            p = read_vector_file(row.prob_path, "prob")
            y_hat = threshold(p, args.gamma)
            stats = foreground_stats(p, y_hat)
            if stats.s > 0.0:
                report = bounds_from_stats(stats.k, stats.mu, stats.lam)
                eps_values.append(report.eps)
                fields = [
                    row.sample_id,
                    str(stats.k),
                    _fmt(stats.mu),
                    _fmt(stats.lam),
                    _fmt(stats.s),
                    _fmt(report.b_lower),
                    _fmt(report.b_upper),
                    _fmt(report.eps),
                    "",
                ]
            else:
                fields = [
                    row.sample_id,
                    str(stats.k),
                    _fmt(stats.mu),
                    _fmt(stats.lam),
                    _fmt(stats.s),
                    "",
                    "",
                    "",
                    "zero_foreground",
                ]
        except ValueError as exc:
            raise CliError(f"sample {row.sample_id}: {exc}") from exc
        lines.append(",".join(fields))
    if eps_values:
        lines.append(f"# Max(eps)={_fmt(max(eps_values))}")
        lines.append(f"# Mean(eps)={_fmt(math.fsum(eps_values) / len(eps_values))}")
    else:
        lines.append("# Max(eps)=")
        lines.append("# Mean(eps)=")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_idc(args) -> int:
    try:
        p = read_vector_file(args.probs, "prob")
        if args.mask is not None:
            y_hat = read_vector_file(args.mask, "mask")
        else:
            y_hat = threshold(p, args.gamma)
        method = {"enum": idc_enum, "pb": idc_pb, "full": idc_full_truncated}
        value = method[args.method](p, y_hat)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    sys.stdout.write(_fmt(value) + "\n")
    return 0


def _parse_sweep_spec(axis: str, spec: str):
    if spec == "default":
        if axis == "rho-eta":
            return DEFAULT_RHO_ETA_GRID
        if axis == "alpha":
            return DEFAULT_ALPHA_GRID
        raise CliError("axis 'mu-z' has no default grid; give start:stop:step or a list")
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise CliError(f"bad sweep range {spec!r}; expected start:stop:step")
        try:
            start, stop, step = (float(x) for x in parts)
        except ValueError:
            raise CliError(f"bad sweep range {spec!r}") from None
        if step <= 0 or stop < start:
            raise CliError(f"bad sweep range {spec!r}; need step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return tuple(start + i * step for i in range(count))
    try:
        values = tuple(float(x) for x in spec.split(","))
    except ValueError:
        raise CliError(f"bad sweep list {spec!r}") from None
    if not values:
        raise CliError("empty sweep list")
    return values


def _cmd_synth(args) -> int:
    if args.mu_z is not None and args.alpha is not None:
        raise CliError("--mu-z and --alpha are mutually exclusive")
    estimators = tuple(name.strip() for name in args.estimators.split(",") if name.strip())
    sweep = None
    if args.sweep is not None:
        axis, spec = args.sweep
        if axis not in ("mu-z", "rho-eta", "alpha"):
            raise CliError(f"sweep axis must be mu-z, rho-eta or alpha, got {axis!r}")
        sweep = (axis, _parse_sweep_spec(axis, spec))

    alpha_targets = None
    try:
        if args.alpha is not None:
            mu_z = calibrate_mu_z(args.alpha, args.n, args.rho_z, seed=args.seed)
        elif args.mu_z is not None:
            mu_z = args.mu_z
        elif sweep is not None and sweep[0] in ("mu-z", "alpha"):
            mu_z = 0.0  # placeholder; every sweep point overrides it
        else:
            raise CliError("one of --mu-z or --alpha is required")

        config = SynthConfig(
            n=args.n,
            mu_z=mu_z,
            samples=args.samples,
            runs=args.runs,
            seed=args.seed,
            rho_z=args.rho_z,
            rho_eta=args.rho_eta,
            gamma=args.gamma,
        )

        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)

        if sweep is None:
            report = run_experiment(config, estimators, workers=args.workers)
            _write_experiment_csvs(out_dir, report)
            if args.figures:
                from .figures import save_experiment_figure

                save_experiment_figure(report, out_dir / "rc_curves.png")
            sweep_meta = None
        else:
            axis, values = sweep
            if axis == "rho-eta":
                sweep_report = run_sweep(config, "rho_eta", values, estimators, workers=args.workers)
            else:
                if axis == "alpha":
                    alpha_targets = values
                    values = tuple(
                        calibrate_mu_z(a, args.n, args.rho_z, seed=args.seed)
                        for a in values
                    )
                sweep_report = run_sweep(config, "mu_z", values, estimators, workers=args.workers)
            _write_sweep_csv(out_dir, sweep_report)
            if args.figures:
                from .figures import save_sweep_figure

                save_sweep_figure(sweep_report, out_dir / "sweep_aurc.png")
            sweep_meta = {
                "axis": sweep_report.axis,
                "values": list(sweep_report.values),
                "alpha_targets": list(alpha_targets) if alpha_targets else None,
            }
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    metadata = {
        "command": "synth",
        "package": "diceconf",
        "version": __version__,
        "config": {
            "n": config.n,
            "mu_z": config.mu_z,
            "rho_z": config.rho_z,
            "rho_eta": config.rho_eta,
            "samples": config.samples,
            "runs": config.runs,
            "seed": config.seed,
            "gamma": config.gamma,
        },
        "alpha_target": args.alpha,
        "estimators": list(estimators),
        "loss": "expected_dice_error",
        "sweep": sweep_meta,
        "notes": {
            "grids": "sweep grids come from invocation flags; built-in defaults are package conventions",
            "runs": "run r draws from the substream seeded with seed XOR r",
            "workers": "outputs are independent of --workers",
        },
    }
    atomic_write_text(
        out_dir / "metadata.json", json.dumps(metadata, indent=2, sort_keys=True) + "\n"
    )
    return 0


def _write_experiment_csvs(out_dir: Path, report) -> None:
    runs = report.config.runs
    for r in range(runs):
        lines = ["coverage," + ",".join(f"risk_{name}" for name in report.estimators)]
        for i in range(report.coverages.size):
            fields = [_fmt(report.coverages[i])]
            fields.extend(_fmt(report.risks[name][r, i]) for name in report.estimators)
            lines.append(",".join(fields))
        atomic_write_text(out_dir / f"run{r:02d}_rc.csv", "\n".join(lines) + "\n")
    run_cols = ",".join(f"run{r:02d}" for r in range(runs))
    lines = [f"estimator,{run_cols},min,mean,max"]
    summary = report.aurc_summary()
    for name in report.estimators:
        values = report.aurcs[name]
        lo, mean, hi = summary[name]
        fields = [name] + [_fmt(v) for v in values] + [_fmt(lo), _fmt(mean), _fmt(hi)]
        lines.append(",".join(fields))
    atomic_write_text(out_dir / "aurc_summary.csv", "\n".join(lines) + "\n")


def _write_sweep_csv(out_dir: Path, report) -> None:
    lines = [f"{report.axis},estimator,aurc_min,aurc_mean,aurc_max"]
    for j, value in enumerate(report.values):
        for name in report.estimators:
            runs = report.aurcs[name][j]
            lines.append(
                ",".join(
                    [
                        _fmt(value),
                        name,
                        _fmt(runs.min()),
                        _fmt(runs.mean()),
                        _fmt(runs.max()),
                    ]
                )
            )
    atomic_write_text(out_dir / "sweep_aurc.csv", "\n".join(lines) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diceconf",
        description="Image-level confidence scores, exact ideal-confidence bounds, "
        "risk-coverage analytics and synthetic experiments for binary "
        "segmentation under the Dice metric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score a manifest of probability maps")
    p_score.add_argument("--manifest", required=True, type=Path)
    p_score.add_argument("--estimator", required=True, choices=SCORE_ESTIMATORS)
    p_score.add_argument("--gamma", type=float, default=0.5)
    p_score.add_argument("--tau", type=float, default=None, help="explicit TLA threshold")
    p_score.add_argument(
        "--tau-manifest", type=Path, default=None, help="tuning manifest for fitting tau"
    )
    p_score.add_argument("--output", type=Path, default=None)
    p_score.set_defaults(func=_cmd_score)

    p_rc = sub.add_parser("rc", help="risk-coverage curve and AURC from a scores CSV")
    p_rc.add_argument("scores", type=Path)
    p_rc.add_argument("--output", type=Path, default=None)
    p_rc.add_argument(
        "--references", action="store_true", help="add oracle and random columns"
    )
    p_rc.add_argument("--target-risk", type=float, default=None)
    p_rc.add_argument("--figure", type=Path, default=None, help="render the curve to a PNG")
    p_rc.set_defaults(func=_cmd_rc)

    p_bounds = sub.add_parser("bounds", help="per-sample ratio bounds and error report")
    p_bounds.add_argument("--manifest", required=True, type=Path)
    p_bounds.add_argument("--gamma", type=float, default=0.5)
    p_bounds.add_argument("--output", type=Path, default=None)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_idc = sub.add_parser("idc", help="exact ideal Dice confidence of one vector file")
    p_idc.add_argument("--probs", required=True, type=Path)
    p_idc.add_argument("--method", required=True, choices=("enum", "pb", "full"))
    p_idc.add_argument("--mask", type=Path, default=None, help="prediction mask file")
    p_idc.add_argument(
        "--gamma", type=float, default=0.5, help="threshold for the mask when --mask is absent"
    )
    p_idc.set_defaults(func=_cmd_idc)

    p_synth = sub.add_parser("synth", help="synthetic experiments with CSV reports")
    p_synth.add_argument("--n", required=True, type=int)
    p_synth.add_argument("--mu-z", dest="mu_z", type=float, default=None)
    p_synth.add_argument(
        "--alpha", type=float, default=None, help="calibrate mu-z to this foreground ratio"
    )
    p_synth.add_argument("--rho-z", dest="rho_z", type=float, default=5.0)
    p_synth.add_argument("--rho-eta", dest="rho_eta", type=float, default=0.0)
    p_synth.add_argument("--samples", required=True, type=int)
    p_synth.add_argument("--runs", required=True, type=int)
    p_synth.add_argument("--seed", required=True, type=int)
    p_synth.add_argument("--gamma", type=float, default=0.5)
    p_synth.add_argument(
        "--estimators",
        default=",".join(ESTIMATORS),
        help="comma list among " + ",".join(ESTIMATORS),
    )
    p_synth.add_argument(
        "--sweep",
        nargs=2,
        metavar=("AXIS", "SPEC"),
        default=None,
        help="AXIS in {mu-z, rho-eta, alpha}; SPEC is start:stop:step, a comma list, or 'default'",
    )
    p_synth.add_argument("--out", required=True, type=Path)
    p_synth.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="render figures next to the CSVs (default on)",
    )
    p_synth.add_argument("--workers", type=int, default=1)
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
