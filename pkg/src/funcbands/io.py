"""File formats: curve tables (CSV), band documents (JSON) and report tables.

Curve tables are comma-delimited: the first row holds the grid points, each
following row one curve (optionally prefixed by an identifier when the first
header cell is non-numeric).  Band documents are JSON with a schema tag.
Every numeric field is written with 17 significant digits so values
round-trip exactly and identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from funcbands.conformal import PredictionBand, SmoothedParams
from funcbands.exceptions import CurveFormatError
from funcbands.grids import Curve, FunctionalSample, Grid, make_uniform_grid
from funcbands.modulation import ModulationCurve
from funcbands.simulation import CoverageReport, SizeReport

BAND_SCHEMA = "funcbands.band/1"

_GRID_UNIFORM_TOL = 1e-12


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _dump_json(obj, indent: int = 0) -> str:
    """Serialize to JSON with floats at 17 significant digits, sorted keys."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(key)}: {_dump_json(obj[key], indent + 1)}'
            for key in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_dump_json(v, indent) for v in obj]
        return "[" + ", ".join(items) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _grid_from_points(points: np.ndarray, origin: str) -> Grid:
    if points.size < 2:
        raise CurveFormatError(f"{origin}: grid needs at least 2 points")
    diffs = np.diff(points)
    if np.any(diffs <= 0):
        raise CurveFormatError(f"{origin}: grid points must be strictly increasing")
    a, b = float(points[0]), float(points[-1])
    spacing = (b - a) / (points.size - 1)
    tol = _GRID_UNIFORM_TOL * max(abs(a), abs(b), spacing)
    if np.max(np.abs(diffs - spacing)) > tol:
        raise CurveFormatError(f"{origin}: grid points are not uniformly spaced")
    return make_uniform_grid(a, b, points.size)


def read_curves(path) -> FunctionalSample:
    """Read a curve table: first row grid points, following rows curves.

    Rows may carry a leading identifier column when the first header cell is
    non-numeric; identifiers are ignored by the returned sample.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        rows = [row for row in csv.reader(handle) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise CurveFormatError(f"{path}: file is empty")

    header = rows[0]
    labeled = False
    try:
        float(header[0])
    except ValueError:
        labeled = True
        header = header[1:]
    try:
        points = np.array([float(cell) for cell in header])
    except ValueError as exc:
        raise CurveFormatError(f"{path}: row 1: non-numeric grid value ({exc})") from None
    grid = _grid_from_points(points, str(path))

    curves = []
    for row_number, row in enumerate(rows[1:], start=2):
        cells = row[1:] if labeled else row
        if len(cells) != grid.p:
            raise CurveFormatError(
                f"{path}: row {row_number}: expected {grid.p} values, got {len(cells)}"
            )
        try:
            curves.append([float(cell) for cell in cells])
        except ValueError:
            bad = next(
                i for i, cell in enumerate(cells, start=1)
                if not _is_float(cell)
            )
            raise CurveFormatError(
                f"{path}: row {row_number}, column {bad}: non-numeric value"
            ) from None
    if not curves:
        raise CurveFormatError(f"{path}: no curve rows after the grid header")
    return FunctionalSample(grid, np.array(curves))


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_curves(path, sample: FunctionalSample, ids=None) -> None:
    """Write a curve table readable by :func:`read_curves`."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        grid_row = [_fmt(t) for t in sample.grid.points]
        if ids is not None:
            if len(ids) != sample.n:
                raise ValueError(f"got {len(ids)} identifiers for {sample.n} curves")
            writer.writerow(["id"] + grid_row)
            for label, row in zip(ids, sample.values):
                writer.writerow([str(label)] + [_fmt(v) for v in row])
        else:
            writer.writerow(grid_row)
            for row in sample.values:
                writer.writerow([_fmt(v) for v in row])


def write_band(path, band: PredictionBand) -> None:
    """Write a band document (JSON, schema-tagged, lossless)."""
    record = {
        "schema": BAND_SCHEMA,
        "grid": {"a": band.grid.a, "b": band.grid.b, "p": band.grid.p},
        "center": list(band.center.values),
        "lower": list(band.lower.values),
        "upper": list(band.upper.values),
        "radius": list(band.radius.values),
        "modulation": None if band.modulation is None else list(band.modulation.values),
        "kind": band.kind,
        "alpha": band.alpha,
        "radius_scale": band.radius_scale,
        "closed": band.closed,
        "full_space": band.full_space,
        "lower_clip": band.lower_clip,
        "calibration_scores": (
            None if band.calibration_scores is None else list(band.calibration_scores)
        ),
        "smoothed": (
            None
            if band.smoothed is None
            else {
                "tau": band.smoothed.tau,
                "tie_right": band.smoothed.tie_right,
                "tie_left": band.smoothed.tie_left,
            }
        ),
        "rho": band.rho,
        "seed": band.seed,
        "predictor": band.predictor,
    }
    Path(path).write_text(_dump_json(record) + "\n")


def read_band(path) -> PredictionBand:
    """Read a band document written by :func:`write_band`."""
    path = Path(path)
    try:
        record = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CurveFormatError(f"{path}: not valid JSON ({exc})") from None
    schema = record.get("schema")
    if schema != BAND_SCHEMA:
        raise CurveFormatError(
            f"{path}: unknown band schema tag {schema!r}, expected {BAND_SCHEMA!r}"
        )
    grid = make_uniform_grid(record["grid"]["a"], record["grid"]["b"], record["grid"]["p"])
    modulation = None
    if record["modulation"] is not None:
        modulation = ModulationCurve(
            Curve(grid, np.array(record["modulation"])), record["kind"]
        )
    smoothed = None
    if record["smoothed"] is not None:
        smoothed = SmoothedParams(
            tau=record["smoothed"]["tau"],
            tie_right=record["smoothed"]["tie_right"],
            tie_left=record["smoothed"]["tie_left"],
        )
    scores = record["calibration_scores"]
    return PredictionBand(
        grid=grid,
        center=Curve(grid, np.array(record["center"])),
        radius=Curve(grid, np.array(record["radius"])),
        lower=Curve(grid, np.array(record["lower"])),
        upper=Curve(grid, np.array(record["upper"])),
        kind=record["kind"],
        alpha=record["alpha"],
        radius_scale=record["radius_scale"],
        modulation=modulation,
        closed=record["closed"],
        full_space=record["full_space"],
        lower_clip=record["lower_clip"],
        calibration_scores=None if scores is None else np.array(scores),
        smoothed=smoothed,
        rho=record["rho"],
        seed=record["seed"],
        predictor=record["predictor"],
    )


def write_band_table(path, band: PredictionBand) -> None:
    """Write the plot-ready table: one row per grid point, t/lower/center/upper."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "lower", "center", "upper"])
        for t, lo, c, hi in zip(
            band.grid.points,
            band.lower.values,
            band.center.values,
            band.upper.values,
        ):
            writer.writerow([_fmt(t), _fmt(lo), _fmt(c), _fmt(hi)])


def write_coverage_report(path, report: CoverageReport) -> None:
    """Coverage table: one row per method, mirroring the coverage summary."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["method", "mean_coverage", "sd_coverage", "theoretical_coverage",
             "nominal", "ci99_lower", "ci99_upper", "ci_contains_nominal"]
        )
        for m in report.methods:
            writer.writerow(
                [m, _fmt(report.mean[m]), _fmt(report.sd[m]),
                 _fmt(report.theoretical), _fmt(report.nominal),
                 _fmt(report.ci_lower[m]), _fmt(report.ci_upper[m]),
                 str(report.ci_contains_nominal[m]).lower()]
            )


def write_size_report(path, report: SizeReport) -> None:
    """Size table: one row per method with mean and sd of the band area."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "mean_q", "sd_q", "full_space_count"])
        for m in report.methods:
            writer.writerow(
                [m, _fmt(report.mean[m]), _fmt(report.sd[m]),
                 str(report.full_space_count[m])]
            )


def write_replication_records(path, coverage: CoverageReport, size: SizeReport) -> None:
    """Raw per-replication records: one row per (replication, method)."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["replication", "method", "coverage", "q"])
        for rep in range(coverage.replications):
            for m in coverage.methods:
                writer.writerow(
                    [str(rep), m,
                     _fmt(coverage.per_replication[m][rep]),
                     _fmt(size.per_replication[m][rep])]
                )
