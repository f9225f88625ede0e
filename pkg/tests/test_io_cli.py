import json

import numpy as np
import pytest

from funcbands import (
    CurveFormatError,
    FunctionalSample,
    fit_band,
    fit_band_smoothed,
    make_uniform_grid,
    naive_band,
    read_band,
    read_curves,
    split,
    truncate,
    write_band,
    write_curves,
)
from funcbands.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_STATS, main


def growth_like_sample(rng=None, n=39):
    """Positive velocity-style curves on the 4..18 age grid."""
    rng = rng or np.random.default_rng(5)
    grid = make_uniform_grid(4, 18, 141)
    t = grid.points
    rows = []
    for _ in range(n):
        peak_age = rng.uniform(11, 14)
        rows.append(
            3.0
            + 4.0 * np.exp(-((t - peak_age) ** 2) / 2.0)
            + rng.normal(0, 0.2, t.size)
        )
    return FunctionalSample(grid, np.abs(np.array(rows)))


class TestCurveTables:
    def test_round_trip_small_table(self, tmp_path):
        grid = make_uniform_grid(0, 1, 3)
        sample = FunctionalSample(
            grid, np.array([[1.25, -2.5, 3.75], [0.1, 0.2, 0.3]])
        )
        path = tmp_path / "curves.csv"
        write_curves(path, sample)
        loaded = read_curves(path)
        assert loaded.grid == grid
        assert np.array_equal(loaded.values, sample.values)

    def test_round_trip_with_identifiers(self, tmp_path):
        grid = make_uniform_grid(0, 1, 4)
        sample = FunctionalSample(grid, np.random.default_rng(0).normal(size=(3, 4)))
        path = tmp_path / "curves.csv"
        write_curves(path, sample, ids=["a", "b", "c"])
        loaded = read_curves(path)
        assert np.array_equal(loaded.values, sample.values)

    def test_round_trip_preserves_awkward_floats(self, tmp_path):
        grid = make_uniform_grid(0, 1, 3)
        values = np.array([[1 / 3, np.pi, np.e]])
        path = tmp_path / "curves.csv"
        write_curves(path, FunctionalSample(grid, values))
        assert np.array_equal(read_curves(path).values, values)

    def test_ragged_row_names_the_offender(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,0.5,1.0\n1,2,3\n4,5\n")
        with pytest.raises(CurveFormatError, match="row 3"):
            read_curves(path)

    def test_parse_error_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,0.5,1.0\n1,zap,3\n")
        with pytest.raises(CurveFormatError, match="row 2, column 2"):
            read_curves(path)

    def test_non_monotone_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,1.0,0.5\n1,2,3\n")
        with pytest.raises(CurveFormatError, match="increasing"):
            read_curves(path)

    def test_non_uniform_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,0.4,1.0\n1,2,3\n")
        with pytest.raises(CurveFormatError, match="uniform"):
            read_curves(path)

    def test_growth_study_shaped_file(self, tmp_path):
        sample = growth_like_sample()
        path = tmp_path / "growth.csv"
        write_curves(path, sample)
        loaded = read_curves(path)
        assert loaded.n == 39
        assert loaded.grid.p == 141
        assert loaded.grid.spacing == pytest.approx(0.1, rel=1e-12)


class TestBandDocuments:
    def fitted_band(self, smoothed=False, clip=None):
        rng = np.random.default_rng(6)
        grid = make_uniform_grid(0, 1, 11)
        sample = FunctionalSample(grid, rng.normal(size=(14, 11)))
        indices = split(14, 0.5, 8)
        if smoothed:
            band = fit_band_smoothed(sample, 0.3, indices, modulation="sigma", tau=0.4)
        else:
            band = fit_band(sample, 0.3, indices, modulation="sigma")
        if clip is not None:
            band = truncate(band, clip)
        return sample, indices, band

    def test_round_trip_field_by_field(self, tmp_path):
        _, _, band = self.fitted_band(smoothed=True)
        path = tmp_path / "band.json"
        write_band(path, band)
        loaded = read_band(path)
        assert loaded.grid == band.grid
        for attr in ("center", "lower", "upper", "radius"):
            assert np.array_equal(
                getattr(loaded, attr).values, getattr(band, attr).values
            )
        assert np.array_equal(loaded.modulation.values, band.modulation.values)
        assert np.array_equal(loaded.calibration_scores, band.calibration_scores)
        assert loaded.alpha == band.alpha
        assert loaded.radius_scale == band.radius_scale
        assert loaded.kind == band.kind
        assert loaded.closed == band.closed
        assert loaded.full_space == band.full_space
        assert loaded.smoothed == band.smoothed
        assert loaded.rho == band.rho
        assert loaded.seed == band.seed
        assert loaded.predictor == band.predictor

    def test_clipped_band_round_trips(self, tmp_path):
        _, _, band = self.fitted_band(clip=-1.0)
        path = tmp_path / "band.json"
        write_band(path, band)
        loaded = read_band(path)
        assert loaded.lower_clip == -1.0
        assert np.array_equal(loaded.lower.values, band.lower.values)

    def test_full_space_band_serializes_without_infinities(self, tmp_path):
        rng = np.random.default_rng(1)
        grid = make_uniform_grid(0, 1, 5)
        sample = FunctionalSample(grid, rng.normal(size=(8, 5)))
        band = fit_band(sample, 0.05, split(8, 0.5, 0))  # l=4, alpha < 1/5
        assert band.full_space
        path = tmp_path / "band.json"
        write_band(path, band)
        text = path.read_text()
        assert "inf" not in text.lower()
        assert read_band(path).full_space

    def test_unknown_schema_tag_rejected(self, tmp_path):
        path = tmp_path / "band.json"
        path.write_text(json.dumps({"schema": "funcbands.band/99"}))
        with pytest.raises(CurveFormatError, match="schema"):
            read_band(path)

    def test_recorded_seed_reproduces_the_radius(self, tmp_path):
        sample, indices, band = self.fitted_band()
        path = tmp_path / "band.json"
        write_band(path, band)
        loaded = read_band(path)
        refit = fit_band(
            sample,
            loaded.alpha,
            split(sample.n, loaded.rho, loaded.seed),
            modulation="sigma",
        )
        assert refit.radius_scale == loaded.radius_scale

    def test_naive_band_round_trips(self, tmp_path):
        rng = np.random.default_rng(2)
        grid = make_uniform_grid(0, 1, 6)
        band = naive_band(FunctionalSample(grid, rng.normal(size=(10, 6))), 0.2)
        path = tmp_path / "band.json"
        write_band(path, band)
        loaded = read_band(path)
        assert loaded.modulation is None
        assert loaded.calibration_scores is None
        assert np.array_equal(loaded.lower.values, band.lower.values)


class TestCliBand:
    @pytest.fixture()
    def growth_csv(self, tmp_path):
        path = tmp_path / "growth.csv"
        write_curves(path, growth_like_sample())
        return path

    def test_growth_workflow_with_envelope_modulation(self, growth_csv, tmp_path):
        out = tmp_path / "band.json"
        table = tmp_path / "band.csv"
        code = main(
            ["band", "--input", str(growth_csv), "--alpha", "0.5",
             "--modulation", "sbar", "--seed", "3", "--truncate", "0",
             "--output", str(out), "--table", str(table)]
        )
        assert code == EXIT_OK
        band = read_band(out)
        assert band.kind == "envelope"
        assert band.lower_clip == 0.0
        assert np.all(band.lower.values >= 0.0)
        # n=39 at rho=0.5: 20 training curves, 19 calibration curves
        assert band.calibration_scores.shape == (19,)
        rows = table.read_text().strip().splitlines()
        assert rows[0] == "t,lower,center,upper"
        assert len(rows) == 1 + 141

    def test_full_space_warning_still_succeeds(self, growth_csv, tmp_path, capsys):
        out = tmp_path / "band.json"
        code = main(
            ["band", "--input", str(growth_csv), "--alpha", "0.01",
             "--output", str(out)]
        )
        assert code == EXIT_OK
        assert "whole curve space" in capsys.readouterr().err
        assert read_band(out).full_space

    def test_file_backed_modulation_and_predictor(self, growth_csv, tmp_path):
        sample = read_curves(growth_csv)
        flat = FunctionalSample(sample.grid, np.ones((1, sample.grid.p)))
        center = FunctionalSample(
            sample.grid, sample.values.mean(axis=0, keepdims=True)
        )
        mod_path = tmp_path / "mod.csv"
        center_path = tmp_path / "center.csv"
        write_curves(mod_path, flat)
        write_curves(center_path, center)
        out = tmp_path / "band.json"
        code = main(
            ["band", "--input", str(growth_csv), "--alpha", "0.5",
             "--modulation", f"file:{mod_path}", "--predictor", f"file:{center_path}",
             "--output", str(out)]
        )
        assert code == EXIT_OK
        band = read_band(out)
        assert band.kind == "custom"
        assert band.predictor == "custom"

    def test_missing_input_is_an_io_error(self, tmp_path):
        code = main(
            ["band", "--input", str(tmp_path / "nope.csv"),
             "--output", str(tmp_path / "band.json")]
        )
        assert code == EXIT_IO

    def test_bad_alpha_is_a_config_error(self, growth_csv, tmp_path):
        code = main(
            ["band", "--input", str(growth_csv), "--alpha", "1.5",
             "--output", str(tmp_path / "band.json")]
        )
        assert code == EXIT_CONFIG

    def test_smoothed_alpha_out_of_range_is_a_stats_error(self, growth_csv, tmp_path):
        code = main(
            ["band", "--input", str(growth_csv), "--alpha", "0.01",
             "--smoothed", "--tau", "0.9",
             "--output", str(tmp_path / "band.json")]
        )
        assert code == EXIT_STATS

    def test_deterministic_outputs(self, growth_csv, tmp_path):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / f"band_{name}.json"
            table = tmp_path / f"table_{name}.csv"
            assert (
                main(
                    ["band", "--input", str(growth_csv), "--alpha", "0.5",
                     "--modulation", "sigma", "--seed", "11",
                     "--output", str(out), "--table", str(table)]
                )
                == EXIT_OK
            )
            outs.append((out.read_bytes(), table.read_bytes()))
        assert outs[0] == outs[1]


class TestCliSimulate:
    def test_config_file_with_overrides(self, tmp_path):
        config = {
            "scenario": "S3",
            "n": 18,
            "beta": 0.06,
            "alpha": 0.1,
            "replications": 3,
            "test_curves": 100,
            "methods": ["s0", "naive"],
            "master_seed": 4,
        }
        cfg_path = tmp_path / "experiment.json"
        cfg_path.write_text(json.dumps(config))
        outdir = tmp_path / "out"
        code = main(
            ["simulate", "--config", str(cfg_path), "--output-dir", str(outdir),
             "--replications", "2"]
        )
        assert code == EXIT_OK
        coverage_rows = (outdir / "coverage_report.csv").read_text().splitlines()
        assert coverage_rows[0].startswith("method,")
        assert len(coverage_rows) == 3  # header + 2 methods
        raw = (outdir / "replications.csv").read_text().splitlines()
        assert len(raw) == 1 + 2 * 2  # header + methods x replications

    def test_byte_identical_reports_for_equal_seeds(self, tmp_path):
        args = ["simulate", "--scenario", "S2", "--n", "18",
                "--replications", "3", "--test-curves", "80",
                "--methods", "s0,sigma", "--seed", "9"]
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert main(args + ["--output-dir", str(d)]) == EXIT_OK
        for name in ("coverage_report.csv", "size_report.csv", "replications.csv"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


class TestCliCompare:
    def test_compare_emits_aligned_tables_and_subset_check(self, tmp_path, capsys):
        path = tmp_path / "growth.csv"
        write_curves(path, growth_like_sample())
        outdir = tmp_path / "cmp"
        code = main(
            ["compare", "--input", str(path), "--alpha", "0.5",
             "--methods", "s0,pointwise,naive", "--output-dir", str(outdir)]
        )
        assert code == EXIT_OK
        printed = capsys.readouterr().out
        assert "pointwise band inside simultaneous s0 band: True" in printed
        assert "Q" in printed
        bands_rows = (outdir / "bands.csv").read_text().splitlines()
        assert bands_rows[0] == (
            "t,s0_lower,s0_center,s0_upper,pointwise_lower,pointwise_center,"
            "pointwise_upper,naive_lower,naive_center,naive_upper"
        )
        assert len(bands_rows) == 1 + 141
        coverage_rows = (outdir / "pointwise_coverage.csv").read_text().splitlines()
        assert len(coverage_rows) == 1 + 141
        sizes_rows = (outdir / "sizes.csv").read_text().splitlines()
        assert len(sizes_rows) == 1 + 3

    def test_empty_method_list_is_a_usage_error(self, tmp_path):
        path = tmp_path / "growth.csv"
        write_curves(path, growth_like_sample(n=10))
        code = main(
            ["compare", "--input", str(path), "--methods", "", "--output-dir",
             str(tmp_path / "cmp")]
        )
        assert code == EXIT_CONFIG

    def test_unknown_method_is_a_usage_error(self, tmp_path):
        path = tmp_path / "growth.csv"
        write_curves(path, growth_like_sample(n=10))
        code = main(
            ["compare", "--input", str(path), "--methods", "s0,bootstrap",
             "--output-dir", str(tmp_path / "cmp")]
        )
        assert code == EXIT_CONFIG
