"""Command-line interface: band fitting, Monte Carlo experiments, comparisons.

Exit codes: 0 success, 2 bad usage or configuration, 3 input/output failure,
4 a statistical precondition failed (degenerate split, alpha outside the
admissible range, pathological envelope, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from funcbands import io
from funcbands.conformal import (
    fit_band,
    fit_band_smoothed,
    naive_band,
    pointwise_band,
    pointwise_inside,
    split,
    truncate,
)
from funcbands.efficiency import band_size
from funcbands.exceptions import (
    CurveFormatError,
    DegenerateStatisticsError,
)
from funcbands.grids import Curve, make_uniform_grid
from funcbands.modulation import normalize
from funcbands.simulation import (
    BASELINE_METHODS,
    CONFORMAL_METHODS,
    ExperimentConfig,
    ScenarioConfig,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_STATS = 4

SCENARIO_CHOICES = ("S1", "S2", "S3")

_FMT = io._fmt


def _load_curve_argument(argument: str, sample, what: str) -> Curve:
    """Resolve a file:<path> argument into a single curve on the sample grid."""
    path = argument[len("file:"):]
    loaded = io.read_curves(path)
    if loaded.grid != sample.grid:
        raise CurveFormatError(
            f"{what} file {path} uses a different grid than the input data"
        )
    if loaded.n != 1:
        raise CurveFormatError(f"{what} file {path} must contain exactly one curve")
    return loaded.curve(0)


def _cmd_band(args) -> int:
    sample = io.read_curves(args.input)
    indices = split(sample.n, args.rho, args.seed)

    if args.predictor == "mean":
        predictor = "mean"
    elif args.predictor.startswith("file:"):
        predictor = _load_curve_argument(args.predictor, sample, "predictor")
    else:
        raise ValueError(f"predictor must be 'mean' or 'file:<path>', got {args.predictor!r}")

    if args.modulation in CONFORMAL_METHODS:
        modulation = args.modulation
    elif args.modulation.startswith("file:"):
        modulation = normalize(
            _load_curve_argument(args.modulation, sample, "modulation")
        )
    else:
        raise ValueError(
            f"modulation must be one of {CONFORMAL_METHODS} or 'file:<path>', "
            f"got {args.modulation!r}"
        )

    if args.smoothed:
        if args.tau is None:
            tau = float(
                np.random.default_rng(np.random.SeedSequence((args.seed, 1))).uniform()
            )
        else:
            tau = args.tau
        band = fit_band_smoothed(
            sample, args.alpha, indices, predictor=predictor,
            modulation=modulation, tau=tau,
        )
    else:
        band = fit_band(
            sample, args.alpha, indices, predictor=predictor, modulation=modulation
        )

    if band.full_space:
        print(
            f"warning: alpha={args.alpha} is below 1/(l+1)={1.0 / (indices.l + 1):.6g}; "
            "the band is the whole curve space",
            file=sys.stderr,
        )
    if args.truncate is not None:
        band = truncate(band, args.truncate)

    io.write_band(args.output, band)
    table = args.table if args.table else str(args.output) + ".table.csv"
    io.write_band_table(table, band)
    print(f"band written to {args.output} (table: {table})")
    return EXIT_OK


def _scenario_from_mapping(cfg: dict) -> ScenarioConfig:
    grid_cfg = cfg.get("grid", {})
    grid = make_uniform_grid(
        grid_cfg.get("a", 0.0), grid_cfg.get("b", 1.0), grid_cfg.get("p", 101)
    )
    return ScenarioConfig(
        scenario=cfg.get("scenario", "S1"),
        n=int(cfg.get("n", 198)),
        grid=grid,
        beta=float(cfg.get("beta", 0.0)),
        seed=int(cfg.get("seed", 0)),
    )


def _cmd_simulate(args) -> int:
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise CurveFormatError(f"{args.config}: not valid JSON ({exc})") from None
        if not isinstance(cfg, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")

    for key, value in (
        ("scenario", args.scenario), ("n", args.n), ("beta", args.beta),
    ):
        if value is not None:
            cfg[key] = value
    overrides = {
        "alpha": args.alpha, "rho": args.rho, "replications": args.replications,
        "test_curves": args.test_curves, "master_seed": args.seed,
        "methods": args.methods.split(",") if args.methods else None,
        "smoothed": True if args.smoothed else None,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value

    config = ExperimentConfig(
        scenario=_scenario_from_mapping(cfg),
        alpha=float(cfg.get("alpha", 0.1)),
        rho=float(cfg.get("rho", 0.5)),
        replications=int(cfg.get("replications", 500)),
        test_curves=int(cfg.get("test_curves", 10000)),
        methods=tuple(cfg.get("methods", CONFORMAL_METHODS + BASELINE_METHODS)),
        smoothed=bool(cfg.get("smoothed", False)),
        master_seed=int(cfg.get("master_seed", 0)),
    )
    coverage, size = run_experiment(config)

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_coverage_report(outdir / "coverage_report.csv", coverage)
    io.write_size_report(outdir / "size_report.csv", size)
    io.write_replication_records(outdir / "replications.csv", coverage, size)

    print(
        f"scenario {config.scenario.scenario}, n={config.scenario.n}, "
        f"alpha={config.alpha}, N={config.replications}, M={config.test_curves}"
    )
    print(f"theoretical coverage: {coverage.theoretical:.6f}")
    for m in config.methods:
        print(
            f"  {m:>9}: coverage {coverage.mean[m]:.4f} ({coverage.sd[m]:.4f})"
            f"   Q {size.mean[m]:.4f} ({size.sd[m]:.4f})"
        )
    print(f"reports written to {outdir}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    sample = io.read_curves(args.input)
    methods = [m for m in args.methods.split(",") if m]
    if not methods:
        raise ValueError("method list is empty")
    known = set(CONFORMAL_METHODS) | set(BASELINE_METHODS)
    unknown = [m for m in methods if m not in known]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; expected a subset of {sorted(known)}")

    indices = split(sample.n, args.rho, args.seed)
    bands = {}
    for m in methods:
        if m == "naive":
            bands[m] = naive_band(sample, args.alpha)
        elif m == "pointwise":
            bands[m] = pointwise_band(sample, args.alpha, indices)
        else:
            bands[m] = fit_band(sample, args.alpha, indices, modulation=m)

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    with (outdir / "bands.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["t"]
        for m in methods:
            header += [f"{m}_lower", f"{m}_center", f"{m}_upper"]
        writer.writerow(header)
        for i, t in enumerate(sample.grid.points):
            row = [_FMT(t)]
            for m in methods:
                band = bands[m]
                row += [
                    _FMT(band.lower.values[i]),
                    _FMT(band.center.values[i]),
                    _FMT(band.upper.values[i]),
                ]
            writer.writerow(row)

    # In-sample diagnostic: per grid point, the fraction of the input curves
    # each band covers there.
    with (outdir / "pointwise_coverage.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + methods)
        fractions = {m: pointwise_inside(bands[m], sample) for m in methods}
        for i, t in enumerate(sample.grid.points):
            writer.writerow([_FMT(t)] + [_FMT(fractions[m][i]) for m in methods])

    with (outdir / "sizes.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "q", "average_width"])
        for m in methods:
            metric = band_size(bands[m])
            writer.writerow([m, _FMT(metric.q), _FMT(metric.average_width)])

    print(f"{'method':>9}  {'Q':>12}  {'avg width':>12}")
    for m in methods:
        metric = band_size(bands[m])
        print(f"{m:>9}  {metric.q:12.6f}  {metric.average_width:12.6f}")

    if "s0" in bands and "pointwise" in bands:
        inner, outer = bands["pointwise"], bands["s0"]
        nested = bool(
            np.all(outer.lower.values <= inner.lower.values)
            and np.all(inner.upper.values <= outer.upper.values)
        )
        print(f"pointwise band inside simultaneous s0 band: {nested}")

    print(f"tables written to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcbands",
        description="Simultaneous conformal prediction bands for grid-sampled curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    band = sub.add_parser("band", help="fit a prediction band on a curve table")
    band.add_argument("--input", required=True, help="curve table (CSV)")
    band.add_argument("--output", required=True, help="band document path (JSON)")
    band.add_argument("--table", default=None, help="plot-ready table path (CSV)")
    band.add_argument("--alpha", type=float, default=0.1)
    band.add_argument("--rho", type=float, default=0.5)
    band.add_argument("--seed", type=int, default=0)
    band.add_argument(
        "--modulation", default="s0",
        help="s0 | sigma | sbar | file:<curve table with one curve>",
    )
    band.add_argument(
        "--predictor", default="mean", help="mean | file:<curve table with one curve>"
    )
    band.add_argument("--smoothed", action="store_true")
    band.add_argument("--tau", type=float, default=None)
    band.add_argument("--truncate", type=float, default=None,
                      help="clip the lower bound at this value")
    band.set_defaults(func=_cmd_band)

    sim = sub.add_parser("simulate", help="run a Monte Carlo coverage/size experiment")
    sim.add_argument("--config", default=None, help="experiment config (JSON)")
    sim.add_argument("--output-dir", default="experiment_out")
    sim.add_argument("--scenario", choices=SCENARIO_CHOICES, default=None)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--beta", type=float, default=None)
    sim.add_argument("--alpha", type=float, default=None)
    sim.add_argument("--rho", type=float, default=None)
    sim.add_argument("--replications", type=int, default=None)
    sim.add_argument("--test-curves", type=int, default=None)
    sim.add_argument("--methods", default=None, help="comma-separated method list")
    sim.add_argument("--smoothed", action="store_true")
    sim.add_argument("--seed", type=int, default=None, help="master seed")
    sim.set_defaults(func=_cmd_simulate)

    cmp_ = sub.add_parser("compare", help="fit several methods and emit aligned tables")
    cmp_.add_argument("--input", required=True, help="curve table (CSV)")
    cmp_.add_argument("--output-dir", default="compare_out")
    cmp_.add_argument("--alpha", type=float, default=0.1)
    cmp_.add_argument("--rho", type=float, default=0.5)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--methods", required=True,
                      help="comma-separated subset of s0,sigma,sbar,naive,pointwise")
    cmp_.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CurveFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateStatisticsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
