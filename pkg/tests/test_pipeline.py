"""Pipeline orchestration, grid exports, and manifest determinism."""

import json

import numpy as np
import pytest

from sparsevecm.pipeline import PipelineConfig, export_grid, load_config, run_pipeline
from sparsevecm.synth import SynthConfig, write_synthetic_dataset
from sparsevecm.varnet import VarFit
from sparsevecm.vecm import to_vecm


def _fast_settings():
    return dict(
        lags=2,
        replicates=10,
        n_lambdas=8,
        gamma_grid=(0.5, 0.9),
        cv_folds=3,
        horizon=6,
    )


@pytest.fixture(scope="session")
def bundled_dataset(tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("synth")
    paths = write_synthetic_dataset(SynthConfig(n_regions=4, weeks=300, seed=7), data_dir)
    return paths


@pytest.fixture(scope="session")
def pipeline_run(bundled_dataset, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("artifacts")
    config = load_config(
        bundled_dataset["config"],
        overrides=dict(out_dir=str(out_dir), **_fast_settings()),
    )
    manifest = run_pipeline(config)
    return out_dir, manifest, config


class TestRunPipeline:
    def test_smoke_manifest_lists_8_stages(self, pipeline_run):
        _, manifest, _ = pipeline_run
        names = [s["name"] for s in manifest["stages"]]
        assert names == [
            "summarize",
            "unit_root",
            "chow",
            "lag_selection",
            "fit",
            "vecm_rank",
            "jirf",
            "bootstrap",
        ]
        assert all(s["artifacts"] for s in manifest["stages"])

    def test_artifacts_exist_and_hashes_match(self, pipeline_run):
        out_dir, manifest, _ = pipeline_run
        import hashlib

        for rel, digest in manifest["artifacts"].items():
            path = out_dir / rel
            assert path.exists(), rel
            assert hashlib.sha256(path.read_bytes()).hexdigest() == digest

    def test_fit_artifacts_round_trip(self, pipeline_run):
        out_dir, _, _ = pipeline_run
        fit = VarFit.load(out_dir / "fit_Pre.json")
        assert fit.p == 2
        assert fit.m == 12
        assert fit.sigma.shape == (12, 12)

    def test_bootstrap_bands_ordered(self, pipeline_run):
        out_dir, _, _ = pipeline_run
        doc = json.loads((out_dir / "bootstrap_Pre_all_hog.json").read_text())
        lower = np.array(doc["bootstrap"]["lower"])
        upper = np.array(doc["bootstrap"]["upper"])
        assert np.all(lower <= upper)

    def test_empty_input_propagates_guard(self, tmp_path):
        prices = tmp_path / "prices.csv"
        prices.write_text("date,region,commodity,price\n")
        cpi = tmp_path / "cpi.csv"
        cpi.write_text("month,index\n2020-01,100\n")
        config = PipelineConfig(
            prices_csv=str(prices),
            cpi_csv=str(cpi),
            out_dir=str(tmp_path / "out"),
            base_month="2020-01",
            commodities=("hog",),
            periods={"All": (__import__("datetime").date(2020, 1, 1), __import__("datetime").date(2020, 12, 31))},
        )
        with pytest.raises(RuntimeError, match="no observations"):
            run_pipeline(config)

    def test_failure_leaves_partial_marker(self, bundled_dataset, tmp_path):
        out_dir = tmp_path / "partial"
        config = load_config(
            bundled_dataset["config"],
            overrides=dict(out_dir=str(out_dir), **_fast_settings()),
        )
        config.adf_max_lag = 10_000  # forces the unit-root stage to fail
        with pytest.raises(RuntimeError, match="unit_root"):
            run_pipeline(config)
        marker = json.loads((out_dir / "manifest.partial.json").read_text())
        assert marker["failed_stage"] == "unit_root"
        assert "summarize" in marker["completed_stages"]
        assert (out_dir / "summaries.json").exists()
        assert not (out_dir / "manifest.json").exists()

    def test_keep_draws_writes_columnar_archive(self, tmp_path):
        data_dir = tmp_path / "data"
        write_synthetic_dataset(
            SynthConfig(commodities=("a",), n_regions=2, weeks=140, seed=9), data_dir
        )
        config = load_config(
            data_dir / "pipeline.conf",
            overrides=dict(
                out_dir=str(tmp_path / "out"),
                lags=1,
                replicates=5,
                n_lambdas=4,
                gamma_grid=(0.5,),
                cv_folds=3,
                horizon=2,
                keep_draws=True,
            ),
        )
        manifest = run_pipeline(config)
        draw_files = [a for a in manifest["artifacts"] if a.endswith("_draws.csv")]
        assert draw_files
        import csv

        with open(tmp_path / "out" / draw_files[0]) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["replicate", "horizon", "series", "value"]
        assert len(rows) - 1 == 5 * 3 * 2  # replicates x horizons x series

    def test_rerun_is_byte_identical(self, tmp_path):
        data_dir = tmp_path / "data"
        write_synthetic_dataset(
            SynthConfig(commodities=("a", "b"), n_regions=3, weeks=160, seed=3), data_dir
        )
        settings = dict(
            lags=1, replicates=6, n_lambdas=5, gamma_grid=(0.5,), cv_folds=3, horizon=3
        )
        manifests = []
        for run in ("one", "two"):
            config = load_config(
                data_dir / "pipeline.conf",
                overrides=dict(out_dir=str(tmp_path / run), **settings),
            )
            run_pipeline(config)
            manifests.append((tmp_path / run / "manifest.json").read_bytes())
        assert manifests[0] == manifests[1]


class TestConfigFile:
    def test_load_and_override(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text(
            "# comment\n"
            "prices_csv = /data/p.csv\n"
            "cpi_csv = /data/c.csv\n"
            "base_month = 2020-01\n"
            "commodities = hog,pork\n"
            "seed = 5\n"
            "replicates = 100\n"
            "period.Pre = 2020-01-06..2020-06-01\n"
            "period.Post = 2020-06-08..2020-12-28\n"
        )
        config = load_config(conf, overrides={"replicates": 25, "out_dir": "/tmp/x"})
        assert config.prices_csv == "/data/p.csv"
        assert config.seed == 5
        assert config.replicates == 25  # override wins
        assert list(config.periods) == ["Pre", "Post"]

    def test_unknown_key_rejected(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("not_a_key = 1\n")
        with pytest.raises(ValueError, match="unknown config keys"):
            load_config(conf)

    def test_bad_period_syntax(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("period.Pre = 2020-01-06\n")
        with pytest.raises(ValueError, match="period syntax"):
            load_config(conf)

    def test_overlapping_periods_rejected(self):
        from datetime import date

        config = PipelineConfig(
            prices_csv="p",
            cpi_csv="c",
            out_dir="o",
            base_month="2020-01",
            commodities=("hog",),
            periods={
                "A": (date(2020, 1, 1), date(2020, 6, 1)),
                "B": (date(2020, 5, 1), date(2020, 9, 1)),
            },
        )
        with pytest.raises(ValueError, match="overlaps"):
            config.validate()


def _grid_view(m, commodities):
    rng = np.random.default_rng(0)
    R = m // len(commodities)
    fit = VarFit(
        p=2,
        intercept=np.zeros(m),
        lag_coefs=[rng.standard_normal((m, m)) * 0.1, rng.standard_normal((m, m)) * 0.05],
        residuals=np.zeros((10, m)),
        sigma=np.eye(m),
        lam=0.1,
        gamma=0.5,
        series=[(c, f"r{j}") for c in commodities for j in range(R)],
    )
    return to_vecm(fit)


class TestExportGrid:
    def test_block_boundaries(self):
        view = _grid_view(6, ("a", "b", "c"))
        grid = export_grid(view, "pi", "Pre")
        assert grid.block_boundaries == [2, 4]
        assert grid.values.shape == (6, 6)
        assert grid.row_labels == grid.col_labels == view.fit.labels

    def test_identity_var_gives_zero_grid(self):
        fit = VarFit(
            p=1,
            intercept=np.zeros(4),
            lag_coefs=[np.eye(4)],
            residuals=np.zeros((10, 4)),
            sigma=np.eye(4),
            lam=0.0,
            gamma=0.0,
            series=[("a", f"r{j}") for j in range(4)],
        )
        grid = export_grid(to_vecm(fit), "pi")
        assert np.all(grid.values == 0.0)
        assert grid.render_data()["magnitude_max"] == 0.0

    def test_gamma_and_unknown_labels(self):
        view = _grid_view(6, ("a", "b"))
        grid = export_grid(view, "gamma1", "Pre")
        np.testing.assert_array_equal(grid.values, view.short_run[0])
        with pytest.raises(ValueError, match="unknown matrix label"):
            export_grid(view, "gamma2")
        with pytest.raises(ValueError, match="unknown matrix label"):
            export_grid(view, "sigma")

    def test_labels_follow_series_order(self, pipeline_run):
        out_dir, _, _ = pipeline_run
        doc = json.loads((out_dir / "vecm_Pre.json").read_text())
        fit = VarFit.load(out_dir / "fit_Pre.json")
        grid = export_grid(to_vecm(fit), "pi", "Pre")
        assert grid.row_labels == [f"{c}.{r}" for c, r in fit.series]
        np.testing.assert_allclose(np.array(doc["long_run"]), grid.values)
