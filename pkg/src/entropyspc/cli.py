"""Command-line front end: phase-I calibration, phase-II charting, run-length
studies.

Exit codes are a stable contract for pipeline use: 0 clean, 1 a control chart
signal (including the phase-I calibration warning), 2 usage or data errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .arl import ShiftModel, TrueModel, arl_table, write_report_csv, write_report_json
from .baseline_io import load_baseline, load_coefficients_csv, save_baseline
from .config import RunConfig, parse_grid
from .estimators import Method, fit_all
from .exceptions import BaselineMismatchError, EntropySpcError
from .maxent import ConstraintPreset, SupportRegion
from .monitoring import (
    CovEstimator,
    build_baseline,
    control_limits,
    evaluate_chart,
    phase1_t2,
)
from .profiles import DesignVector, Phase, load_dataset
from .svgchart import render_beta_curves, render_control_chart


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--method", choices=["me", "lr", "both"], help="estimator route")
    parser.add_argument("--alpha", type=float, help="false-alarm rate (default 0.05)")
    parser.add_argument("--seed", type=int, help="master seed (env ENTROPYSPC_SEED as fallback)")
    parser.add_argument("--out", metavar="DIR", help="output directory (default .)")
    parser.add_argument(
        "--support",
        metavar="XLO,XHI,YLO,YHI",
        help="density support bounds; -inf/inf accepted (default depends on preset)",
    )
    parser.add_argument("--preset", choices=["first-cross", "full-second"], help="constraint basis")
    parser.add_argument("--tol", type=float, help="solver tolerance on moment residuals")
    parser.add_argument("--max-iter", type=int, dest="max_iter", help="solver iteration budget")
    parser.add_argument("--quad-order", type=int, dest="quad_order", help="quadrature nodes per axis")
    parser.add_argument(
        "--cov-estimator",
        choices=[e.value for e in CovEstimator],
        dest="cov_estimator",
        help="baseline covariance estimator (default sample)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropyspc",
        description="Profile control charts from least-squares and maximum-entropy "
        "coefficient estimates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("phase1", help="calibrate a baseline from in-control profiles")
    p1.add_argument("dataset", help="phase-I profile CSV (sample_id,x,y)")
    p1.add_argument(
        "--force",
        action="store_true",
        help="keep exit code 0 even if phase-I points exceed their own quantile UCL",
    )
    _add_common(p1)

    p2 = sub.add_parser("phase2", help="chart monitoring data against a frozen baseline")
    p2.add_argument("baseline", help="baseline JSON written by phase1")
    p2.add_argument("dataset", nargs="?", help="phase-II profile CSV (omit with --coeffs-csv)")
    p2.add_argument(
        "--coeffs-csv",
        dest="coeffs_csv",
        metavar="PATH",
        help="fixture mode: precomputed coefficients (sample_id,a,b) instead of raw profiles",
    )
    _add_common(p2)

    ps = sub.add_parser("simulate", help="Monte-Carlo ARL study over shift grids")
    ps.add_argument("--replicates", type=int, help="replicates per shift (default 1000)")
    ps.add_argument("--grid", metavar="START:STOP:STEP", help="shift grid (default 0.01:0.32:0.01)")
    ps.add_argument(
        "--model",
        choices=["intercept", "slope", "mixed", "all"],
        default="all",
        help="which shift model(s) to simulate",
    )
    ps.add_argument(
        "--phase1-draws",
        type=int,
        dest="phase1_draws",
        help="average the study over this many independent phase-I datasets",
    )
    ps.add_argument("--phase1-k", type=int, dest="phase1_k", help="phase-I sample count (default 100)")
    _add_common(ps)

    return parser


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(getattr(args, "config", None))
    overrides = {}
    for key in (
        "method",
        "alpha",
        "seed",
        "out",
        "preset",
        "tol",
        "max_iter",
        "quad_order",
        "cov_estimator",
        "replicates",
        "phase1_draws",
        "phase1_k",
    ):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    if getattr(args, "support", None) is not None:
        overrides["support"] = SupportRegion.parse(args.support).bounds
    if getattr(args, "grid", None) is not None:
        overrides["grid"] = parse_grid(args.grid)
    return cfg.merged(**overrides)


def _methods(cfg: RunConfig) -> list[Method]:
    if cfg.method == "both":
        return [Method.LR, Method.ME]
    return [Method(cfg.method)]


def _support(cfg: RunConfig) -> SupportRegion | None:
    if cfg.support is None:
        return None
    return SupportRegion(*cfg.support)


def _write_points_csv(path, points, coeffs=None) -> None:
    by_id = {c.sample_id: c for c in coeffs} if coeffs else {}
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sample_id", "intercept", "slope", "t2", "signal_fisher", "signal_quantile"])
        for p in points:
            c = by_id.get(p.sample_id)
            writer.writerow(
                [
                    p.sample_id,
                    repr(c.intercept) if c else "",
                    repr(c.slope) if c else "",
                    repr(p.t2),
                    int(p.signal_fisher),
                    int(p.signal_quantile),
                ]
            )


def _cmd_phase1(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.dataset, Phase.PHASE_I)
    warned = False
    for method in _methods(cfg):
        coeffs = fit_all(
            dataset,
            method,
            preset=ConstraintPreset(cfg.preset),
            support=_support(cfg),
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            quad_order=cfg.quad_order,
        )
        baseline = build_baseline(coeffs, CovEstimator(cfg.cov_estimator))
        t2 = phase1_t2(baseline, coeffs)
        limits = control_limits(t2, k=baseline.k, alpha=cfg.alpha)
        tag = method.value
        save_baseline(
            out_dir / f"baseline_{tag}.json",
            baseline=baseline,
            limits=limits,
            design=dataset.design.x,
            cov_estimator=CovEstimator(cfg.cov_estimator),
            coeffs=coeffs,
            t2=t2,
            config=cfg.to_dict(),
        )
        points = evaluate_chart(baseline, limits, coeffs)
        _write_points_csv(out_dir / f"phase1_report_{tag}.csv", points, coeffs)
        svg = render_control_chart(points, limits, f"phase I calibration chart ({tag})")
        (out_dir / f"phase1_chart_{tag}.svg").write_text(svg, encoding="utf-8")
        above = [p.sample_id for p in points if p.signal_quantile]
        if above:
            warned = True
            print(
                f"phase1 [{tag}]: samples {above} exceed their own quantile UCL "
                f"{limits.ucl_quantile:.6f}; inspect the calibration data"
                + (" (continuing: --force)" if args.force else ""),
                file=sys.stderr,
            )
    if warned and not args.force:
        return 1
    return 0


def _cmd_phase2(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifact = load_baseline(args.baseline)
    method = artifact.baseline.method

    if args.coeffs_csv:
        coeffs = load_coefficients_csv(args.coeffs_csv, method)
    else:
        if not args.dataset:
            print("error: phase2 needs a dataset or --coeffs-csv", file=sys.stderr)
            return 2
        dataset = load_dataset(args.dataset, Phase.PHASE_II)
        if (
            dataset.design.n != artifact.design.size
            or any(a != b for a, b in zip(dataset.design.x, artifact.design))
        ):
            raise BaselineMismatchError(
                "phase-II design vector differs from the baseline's design"
            )
        # solver settings travel with the baseline unless overridden on the CLI
        stored = artifact.config
        preset = ConstraintPreset(getattr(args, "preset", None) or stored.get("preset", cfg.preset))
        support = _support(cfg)
        if support is None and stored.get("support") is not None:
            support = SupportRegion(*(float(v) for v in stored["support"]))
        coeffs = fit_all(
            dataset,
            method,
            preset=preset,
            support=support,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            quad_order=cfg.quad_order,
        )

    points = evaluate_chart(artifact.baseline, artifact.limits, coeffs)
    _write_points_csv(out_dir / "phase2_report.csv", points, coeffs)
    svg = render_control_chart(
        points, artifact.limits, f"phase II monitoring chart ({method.value})"
    )
    (out_dir / "phase2_chart.svg").write_text(svg, encoding="utf-8")
    signalling = [p.sample_id for p in points if p.signal_fisher or p.signal_quantile]
    if signalling:
        print(f"phase2: out-of-control samples: {signalling}", file=sys.stderr)
        return 1
    return 0


def _cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    models = list(ShiftModel) if args.model == "all" else [ShiftModel(args.model)]
    base = TrueModel(
        intercept=cfg.true_intercept,
        slope=cfg.true_slope,
        noise_variance=cfg.noise_variance,
        design=DesignVector(cfg.design),
    )
    report = arl_table(
        base,
        shifts=cfg.grid_values(),
        models=models,
        k=cfg.phase1_k,
        alpha=cfg.alpha,
        replicates=cfg.replicates,
        seed=cfg.effective_seed(),
        methods=_methods(cfg),
        preset=ConstraintPreset(cfg.preset),
        support=_support(cfg),
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        quad_order=cfg.quad_order,
        cov_estimator=CovEstimator(cfg.cov_estimator),
        phase1_draws=cfg.phase1_draws,
    )
    write_report_csv(report, out_dir / "arl_report.csv")
    write_report_json(report, out_dir / "arl_report.json")

    shifts = [s for s in report.config["shifts"] if s != 0.0]
    for model in models:
        curves: dict[str, list[float]] = {}
        for method in _methods(cfg):
            for scheme in ("fisher", "quantile"):
                label = f"{method.value} / {scheme} UCL"
                series = {
                    row.shift: row.beta
                    for row in report.rows
                    if row.model == model and row.method == method and row.scheme == scheme
                    and row.shift != 0.0
                }
                curves[label] = [series[s] for s in shifts]
        svg = render_beta_curves(
            shifts, curves, f"in-control probability vs {model.value} shift"
        )
        (out_dir / f"beta_curves_{model.value}.svg").write_text(svg, encoding="utf-8")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "phase1":
            return _cmd_phase1(args)
        if args.command == "phase2":
            return _cmd_phase2(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
    except EntropySpcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")
