"""Panel construction, transforms, and summaries."""

from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsevecm.panel import (
    RawObservation,
    aggregate,
    deflate,
    drop_sparse_series,
    interpolate,
    log_transform,
    read_observations,
    read_panel,
    slice_period,
    summarize,
    tag_periods,
    write_panel,
)
from tests.conftest import make_panel


def obs(day, region, commodity, price):
    return RawObservation(date=day, region=region, commodity=commodity, price=price)


MON1 = date(2021, 1, 4)  # Monday
MON2 = date(2021, 1, 11)
MON3 = date(2021, 1, 18)


class TestAggregate:
    def test_same_week_mean(self):
        panel = aggregate([obs(MON1, "A", "hog", 10.0), obs(date(2021, 1, 6), "A", "hog", 20.0)])
        assert panel.values[0, 0] == 15.0

    def test_singleton_identity(self):
        panel = aggregate([obs(MON1, "A", "hog", 12.5)])
        assert panel.values[0, 0] == 12.5
        assert not panel.mask[0, 0]

    def test_three_week_fixture_missing_cell(self):
        # Hand-built: region B reports nothing in week 2.
        raw = [
            obs(MON1, "A", "hog", 10.0),
            obs(MON1, "B", "hog", 20.0),
            obs(MON2, "A", "hog", 11.0),
            obs(MON3, "A", "hog", 12.0),
            obs(MON3, "B", "hog", 22.0),
        ]
        panel = aggregate(raw)
        assert panel.n_weeks == 3
        assert panel.mask[1, panel.column("hog", "B")]
        assert np.isnan(panel.values[1, panel.column("hog", "B")])
        assert not panel.mask[1, panel.column("hog", "A")]

    def test_empty_input(self):
        with pytest.raises(ValueError, match="no observations"):
            aggregate([])

    def test_iso_week_bucketing(self):
        # Sunday Jan 10 belongs to the ISO week whose Monday is Jan 4.
        panel = aggregate([obs(date(2021, 1, 10), "A", "hog", 7.0)])
        assert panel.stamps[0].date() == MON1

    def test_series_ordering_commodity_major(self):
        raw = []
        for c in ("piglet", "hog", "pork"):
            for r in ("Rb", "Ra", "Rc"):
                raw.append(obs(MON1, r, c, 5.0))
        panel = aggregate(raw, commodities=("piglet", "hog", "pork"))
        R = 3
        for k, c in enumerate(("piglet", "hog", "pork")):
            for j, r in enumerate(("Ra", "Rb", "Rc")):
                assert panel.series[k * R + j] == (c, r)

    def test_unconfigured_commodity_rejected(self):
        with pytest.raises(ValueError, match="unconfigured"):
            aggregate([obs(MON1, "A", "beef", 5.0)], commodities=("hog",))

    def test_all_missing_series_rejected(self):
        # Region B never reports piglet, so the cross-product column is empty.
        raw = [
            obs(MON1, "A", "piglet", 5.0),
            obs(MON1, "A", "hog", 5.0),
            obs(MON1, "B", "hog", 5.0),
        ]
        with pytest.raises(ValueError, match="piglet.B"):
            aggregate(raw)


class TestReadObservations:
    def test_bad_dates_listed(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("date,region,commodity,price\n2021-01-04,A,hog,10\nnot-a-date,A,hog,11\n")
        with pytest.raises(ValueError, match="line 3.*not-a-date"):
            read_observations(f)

    def test_nonpositive_price_listed(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("date,region,commodity,price\n2021-01-04,A,hog,-3\n")
        with pytest.raises(ValueError, match="non-positive price"):
            read_observations(f)

    def test_empty_price_is_missing(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("date,region,commodity,price\n2021-01-04,A,hog,\n2021-01-04,A,hog,9\n")
        rows = read_observations(f)
        assert [r.price for r in rows] == [None, 9.0]


class TestDeflate:
    def test_constant_cpi_is_identity(self):
        panel = make_panel(np.array([[10.0], [12.0]]))
        cpi = {"2020-01": 100.0}
        out = deflate(panel, cpi, base="2020-01")
        np.testing.assert_array_equal(out.values, panel.values)

    def test_proportionality(self):
        panel = make_panel(np.array([[22.0]]))
        out = deflate(panel, {"2020-01": 110.0, "2019-12": 100.0}, base="2019-12")
        assert out.values[0, 0] == pytest.approx(20.0, rel=1e-12)

    def test_spreadsheet_oracle(self):
        # Five weeks spanning a month boundary (Jan..Feb 2020); expected values
        # computed cell by cell as price * cpi(base)/cpi(month).
        values = np.array([[10.0], [20.0], [30.0], [40.0], [50.0]])
        panel = make_panel(values)  # Mondays 2020-01-06 .. 2020-02-03
        cpi = {"2020-01": 102.0, "2020-02": 104.0, "2020-03": 101.0}
        out = deflate(panel, cpi, base="2020-03")
        expected = np.array(
            [
                [10.0 * 101.0 / 102.0],
                [20.0 * 101.0 / 102.0],
                [30.0 * 101.0 / 102.0],
                [40.0 * 101.0 / 102.0],
                [50.0 * 101.0 / 104.0],
            ]
        )
        np.testing.assert_allclose(out.values, expected, rtol=1e-14)

    def test_missing_month_named(self):
        panel = make_panel(np.ones((6, 1)))  # spans into 2020-02
        with pytest.raises(ValueError, match="2020-02"):
            deflate(panel, {"2020-01": 100.0}, base="2020-01")

    def test_mask_unchanged(self):
        mask = np.array([[True], [False]])
        panel = make_panel(np.array([[np.nan], [5.0]]), mask=mask)
        out = deflate(panel, {"2020-01": 100.0}, base="2020-01")
        np.testing.assert_array_equal(out.mask, mask)


class TestInterpolate:
    def _panel(self, col):
        col = np.asarray(col, dtype=float)
        return make_panel(col[:, None], mask=np.isnan(col)[:, None])

    def test_midpoint(self):
        out = interpolate(self._panel([1.0, np.nan, 3.0]))
        np.testing.assert_allclose(out.values[:, 0], [1.0, 2.0, 3.0])

    def test_leading_gap_constant_extension(self):
        out = interpolate(self._panel([np.nan, 5.0, 7.0]))
        np.testing.assert_allclose(out.values[:, 0], [5.0, 5.0, 7.0])

    def test_two_step_linear_fill(self):
        out = interpolate(self._panel([1.0, np.nan, np.nan, 4.0]))
        np.testing.assert_allclose(out.values[:, 0], [1.0, 2.0, 3.0, 4.0])

    def test_too_few_observations_names_series(self):
        with pytest.raises(ValueError, match="x.r00"):
            interpolate(self._panel([np.nan, 5.0, np.nan]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_idempotent_and_preserves_observed(self, seed):
        rng = np.random.default_rng(seed)
        T, m = 12, 3
        values = rng.uniform(1.0, 9.0, size=(T, m))
        mask = rng.random((T, m)) < 0.3
        for j in range(m):  # keep at least two anchors per column
            mask[rng.choice(T, 2, replace=False), j] = False
        values = np.where(mask, np.nan, values)
        panel = make_panel(values, mask=mask)
        once = interpolate(panel)
        twice = interpolate(once)
        np.testing.assert_array_equal(once.values, twice.values)
        np.testing.assert_array_equal(once.values[~mask], panel.values[~mask])
        np.testing.assert_array_equal(once.mask, mask)
        assert not np.isnan(once.values).any()


class TestLogTransform:
    def test_unit_and_e(self):
        panel = make_panel(np.array([[1.0], [np.e]]))
        out = log_transform(panel)
        np.testing.assert_allclose(out.values[:, 0], [0.0, 1.0], atol=1e-15)
        assert out.meta["log"] is True

    def test_round_trip(self, rng):
        values = rng.uniform(0.5, 50.0, size=(20, 4))
        out = log_transform(make_panel(values))
        np.testing.assert_allclose(np.exp(out.values), values, rtol=1e-12)

    def test_nonpositive_names_cell(self):
        panel = make_panel(np.array([[2.0], [-1.0]]))
        with pytest.raises(ValueError, match=r"2020-01-13.*x\.r00"):
            log_transform(panel)


class TestPeriods:
    def test_tagging_by_monday(self):
        panel = make_panel(np.ones((6, 1)))
        spans = {
            "Pre": (date(2020, 1, 6), date(2020, 1, 19)),
            "Post": (date(2020, 1, 20), date(2020, 2, 28)),
        }
        out = tag_periods(panel, spans)
        assert out.periods == {"Pre": (0, 2), "Post": (2, 6)}

    def test_overlap_rejected(self):
        panel = make_panel(np.ones((6, 1)))
        spans = {
            "A": (date(2020, 1, 6), date(2020, 1, 27)),
            "B": (date(2020, 1, 20), date(2020, 2, 10)),
        }
        with pytest.raises(ValueError, match="overlap"):
            tag_periods(panel, spans)

    def test_empty_period_rejected(self):
        panel = make_panel(np.ones((3, 1)))
        with pytest.raises(ValueError, match="no weeks"):
            tag_periods(panel, {"A": (date(2030, 1, 1), date(2030, 2, 1))})

    def test_slice_period(self):
        panel = tag_periods(
            make_panel(np.arange(8.0)[:, None]),
            {"Pre": (date(2020, 1, 6), date(2020, 1, 26))},
        )
        sub = slice_period(panel, "Pre")
        assert sub.n_weeks == 3
        np.testing.assert_array_equal(sub.values[:, 0], [0.0, 1.0, 2.0])


class TestDropSparse:
    def test_region_dropped_with_warning(self):
        T = 20
        values = np.ones((T, 4))
        mask = np.zeros((T, 4), dtype=bool)
        mask[: T // 2, 1] = True  # 50% missing in column 1 (x.r01)
        values[mask] = np.nan
        panel = make_panel(values, mask=mask, commodities=("x", "y"))
        with pytest.warns(UserWarning, match="x.r01"):
            out, dropped = drop_sparse_series(panel)
        assert dropped == ["r01"]
        assert out.n_series == 2
        assert all(r == "r00" for _, r in out.series)

    def test_threshold_configurable(self):
        T = 20
        mask = np.zeros((T, 2), dtype=bool)
        mask[:2, 0] = True  # 10% missing
        values = np.where(mask, np.nan, 1.0)
        panel = make_panel(values, mask=mask)
        out, dropped = drop_sparse_series(panel, max_missing_frac=0.25)
        assert dropped == []
        with pytest.warns(UserWarning):
            _, dropped = drop_sparse_series(panel, max_missing_frac=0.05)
        assert dropped == ["r00"]


class TestSummarize:
    def test_constant_series(self):
        panel = tag_periods(
            make_panel(np.full((4, 1), 3.5)), {"All": (date(2020, 1, 6), date(2020, 12, 31))}
        )
        (s,) = summarize(panel)
        assert (s.mean, s.std, s.min, s.median, s.max) == (3.5, 0.0, 3.5, 3.5, 3.5)
        assert s.missing_pct == 0.0

    def test_small_sample_median(self):
        panel = tag_periods(
            make_panel(np.array([[1.0], [2.0], [3.0]])),
            {"All": (date(2020, 1, 6), date(2020, 12, 31))},
        )
        (s,) = summarize(panel)
        assert s.median == 2.0
        assert s.mean == 2.0

    def test_planted_missing_percentage(self):
        T = 30
        values = np.full((T, 2), 4.0)
        mask = np.zeros((T, 2), dtype=bool)
        mask[:3, 0] = True  # 6 of 60 cells -> 10%
        mask[:3, 1] = True
        values[mask] = np.nan
        panel = tag_periods(
            make_panel(values, mask=mask), {"All": (date(2020, 1, 6), date(2021, 12, 31))}
        )
        (s,) = summarize(panel)
        assert s.missing_pct == pytest.approx(10.0)

    def test_levels_recovered_after_log(self):
        values = np.array([[10.0], [20.0], [40.0]])
        panel = tag_periods(
            make_panel(values), {"All": (date(2020, 1, 6), date(2020, 12, 31))}
        )
        (raw,) = summarize(panel)
        (logged,) = summarize(log_transform(panel))
        assert logged.mean == pytest.approx(raw.mean, rel=1e-12)
        assert logged.max == pytest.approx(raw.max, rel=1e-12)

    def test_unknown_period(self):
        panel = make_panel(np.ones((3, 1)))
        with pytest.raises(ValueError, match="unknown period"):
            summarize(panel, periods=["Nope"])

    def test_ordering_invariant(self):
        panel = tag_periods(
            make_panel(np.random.default_rng(3).uniform(1, 9, (10, 2)), commodities=("a", "b")),
            {"All": (date(2020, 1, 6), date(2020, 12, 31))},
        )
        for s in summarize(panel):
            assert s.min <= s.median <= s.max


class TestRoundTrip:
    def test_write_read_panel(self, tmp_path):
        rng = np.random.default_rng(11)
        values = rng.uniform(1, 5, size=(6, 4))
        mask = rng.random((6, 4)) < 0.2
        values[mask] = np.nan
        panel = tag_periods(
            make_panel(values, mask=mask, commodities=("a", "b")),
            {"Pre": (date(2020, 1, 6), date(2020, 1, 26))},
        )
        csv_path, sidecar = tmp_path / "panel.csv", tmp_path / "panel.meta.json"
        write_panel(panel, csv_path, sidecar)
        back = read_panel(csv_path, sidecar)
        np.testing.assert_array_equal(back.mask, panel.mask)
        np.testing.assert_array_equal(
            back.values[~panel.mask], panel.values[~panel.mask]
        )
        assert back.periods == panel.periods
        assert back.series == panel.series
        assert list(back.stamps) == list(panel.stamps)
