"""Weekly price panel construction and preprocessing.

Raw observations arrive in long form (date, region, commodity, price) at
arbitrary within-week frequency. This module turns them into a rectangular
weekly panel: aggregate by ISO week and (region, commodity), deflate by a
monthly CPI, fill gaps by linear interpolation, move to natural logs, and
compute per-commodity summary statistics over named analysis periods.

Conventions
-----------
* A week is identified by the Monday of its ISO week; the weekly stamp is
  that Monday. A week belongs to an analysis period iff its Monday falls
  inside the period's date range.
* Series are ordered commodity-major: all regions of the first commodity,
  then all regions of the second, and so on. Regions are sorted
  alphabetically within each commodity block, so series ``(commodity k,
  region j)`` sits at flat index ``k * R + j``.
* The missing mask records *original* missingness and survives
  interpolation unchanged.
* Boundary gaps (before the first or after the last observation of a
  column) are filled by constant extension of the nearest observed value;
  interior gaps are filled linearly.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

__all__ = [
    "RawObservation",
    "PricePanel",
    "PeriodSummary",
    "read_observations",
    "read_cpi",
    "aggregate",
    "deflate",
    "interpolate",
    "log_transform",
    "tag_periods",
    "slice_period",
    "drop_sparse_series",
    "summarize",
    "write_panel",
    "read_panel",
]


@dataclass(frozen=True)
class RawObservation:
    """One raw price record before any aggregation."""

    date: date
    region: str
    commodity: str
    price: float | None
    deflator_key: str | None = None


@dataclass
class PricePanel:
    """Rectangular weekly panel of (commodity, region) price series.

    Attributes
    ----------
    stamps : pandas.DatetimeIndex
        Weekly Monday stamps, strictly increasing with a constant 7-day step.
    series : list of (commodity, region)
        Column identity, commodity-major with regions sorted within block.
    values : ndarray, shape (T, m)
        Cell values; NaN marks gaps until :func:`interpolate` runs.
    mask : ndarray of bool, shape (T, m)
        True where the cell was missing in the raw data (pre-interpolation
        record; never mutated by interpolation).
    periods : dict
        Named analysis periods mapped to half-open row ranges
        ``name -> (start, stop)``.
    meta : dict
        Transform history (deflation base, log flag, ...).
    """

    stamps: pd.DatetimeIndex
    series: list[tuple[str, str]]
    values: np.ndarray
    mask: np.ndarray
    periods: dict[str, tuple[int, int]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        T, m = self.values.shape
        if len(self.stamps) != T or self.mask.shape != (T, m) or len(self.series) != m:
            raise ValueError("panel shapes are inconsistent")
        if T > 1:
            steps = np.diff(self.stamps.values).astype("timedelta64[D]").astype(int)
            if not np.all(steps == 7):
                raise ValueError("weekly stamps must increase in constant 7-day steps")
        if self.series != _commodity_major(self.series):
            raise ValueError(
                "series must be commodity-major with regions sorted within block"
            )

    @property
    def n_weeks(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    @property
    def commodities(self) -> list[str]:
        seen: list[str] = []
        for c, _ in self.series:
            if c not in seen:
                seen.append(c)
        return seen

    @property
    def regions(self) -> list[str]:
        first = self.commodities[0]
        return [r for c, r in self.series if c == first]

    @property
    def labels(self) -> list[str]:
        return [f"{c}.{r}" for c, r in self.series]

    def column(self, commodity: str, region: str) -> int:
        try:
            return self.series.index((commodity, region))
        except ValueError:
            raise KeyError(f"unknown series ({commodity}, {region})") from None

    def column_by_label(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown series {label!r}") from None

    def period_rows(self, name: str) -> tuple[int, int]:
        if name not in self.periods:
            raise ValueError(f"unknown period {name!r}")
        return self.periods[name]


def _commodity_major(series: Sequence[tuple[str, str]]) -> list[tuple[str, str]]:
    commodities: list[str] = []
    for c, _ in series:
        if c not in commodities:
            commodities.append(c)
    regions = sorted({r for _, r in series})
    return [(c, r) for c in commodities for r in regions]


def _week_monday(d: date) -> date:
    return d - timedelta(days=d.isoweekday() - 1)


def read_observations(path: str | Path) -> list[RawObservation]:
    """Read long-form observations from a ``date,region,commodity,price`` CSV.

    Dates must be ISO-8601. An empty price cell is treated as a missing
    observation (the row contributes nothing to aggregation). Rows with
    unparseable dates or non-positive prices are collected and reported in
    a single error.
    """
    rows: list[RawObservation] = []
    bad: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"date", "region", "commodity", "price"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"prices CSV must have columns {sorted(required)}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                d = date.fromisoformat(rec["date"].strip())
            except ValueError:
                bad.append(f"line {lineno}: unparseable date {rec['date']!r}")
                continue
            raw_price = (rec["price"] or "").strip()
            price: float | None = None
            if raw_price:
                price = float(raw_price)
                if not math.isfinite(price) or price <= 0:
                    bad.append(f"line {lineno}: non-positive price {raw_price!r}")
                    continue
            rows.append(
                RawObservation(
                    date=d,
                    region=rec["region"].strip(),
                    commodity=rec["commodity"].strip(),
                    price=price,
                    deflator_key=(rec.get("deflator") or "").strip() or None,
                )
            )
    if bad:
        raise ValueError("bad observation rows: " + "; ".join(bad))
    return rows


def read_cpi(path: str | Path) -> dict[str, float]:
    """Read a monthly CPI CSV with columns ``month`` (YYYY-MM) and ``index``."""
    cpi: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"month", "index"}.issubset(reader.fieldnames):
            raise ValueError("CPI CSV must have columns ['month', 'index']")
        for rec in reader:
            cpi[rec["month"].strip()] = float(rec["index"])
    return cpi


def aggregate(
    raw: Sequence[RawObservation],
    granularity: str = "week",
    commodities: Sequence[str] | None = None,
) -> PricePanel:
    """Average raw observations into a weekly (commodity, region) panel.

    Each cell is the arithmetic mean of all observations falling in that
    ISO week for that (region, commodity); cells with no contributing
    observation are missing. The panel covers every week between the first
    and last observed week so stamps stay equally spaced.

    Parameters
    ----------
    raw : sequence of RawObservation
    granularity : str
        Only ``"week"`` is supported.
    commodities : sequence of str, optional
        Commodity block order. Defaults to alphabetical order of the
        observed commodities.
    """
    if granularity != "week":
        raise ValueError(f"unsupported granularity {granularity!r}")
    obs = [o for o in raw if o.price is not None]
    if not obs:
        raise ValueError("no observations")

    observed_commodities = {o.commodity for o in obs}
    if commodities is None:
        commodities = sorted(observed_commodities)
    else:
        unknown = observed_commodities - set(commodities)
        if unknown:
            raise ValueError(f"observations carry unconfigured commodities {sorted(unknown)}")
        commodities = list(commodities)
    regions = sorted({o.region for o in obs})
    series = [(c, r) for c in commodities for r in regions]
    col = {s: j for j, s in enumerate(series)}

    mondays = sorted({_week_monday(o.date) for o in obs})
    first, last = mondays[0], mondays[-1]
    n_weeks = (last - first).days // 7 + 1
    stamps = pd.DatetimeIndex([pd.Timestamp(first) + pd.Timedelta(days=7 * i) for i in range(n_weeks)])
    row = {s.date(): i for i, s in enumerate(stamps)}

    sums = np.zeros((n_weeks, len(series)))
    counts = np.zeros((n_weeks, len(series)), dtype=int)
    for o in obs:
        i = row[_week_monday(o.date)]
        j = col[(o.commodity, o.region)]
        sums[i, j] += o.price
        counts[i, j] += 1

    with np.errstate(invalid="ignore"):
        values = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    mask = counts == 0

    empty = [series[j] for j in range(len(series)) if mask[:, j].all()]
    if empty:
        labels = ", ".join(f"{c}.{r}" for c, r in empty)
        raise ValueError(f"series with no observations at all: {labels}")

    return PricePanel(stamps=stamps, series=series, values=values, mask=mask)


def deflate(panel: PricePanel, cpi: Mapping[str, float], base: str) -> PricePanel:
    """Deflate to real terms: multiply each value by ``cpi[base] / cpi[month]``.

    ``base`` and the CPI keys are ``YYYY-MM`` months; the month of a weekly
    cell is the month of its Monday stamp. The missing mask is unchanged.
    """
    if base not in cpi:
        raise ValueError(f"base month {base!r} missing from CPI series")
    if cpi[base] <= 0:
        raise ValueError(f"CPI at base month {base!r} must be positive")
    factors = np.empty(panel.n_weeks)
    for i, ts in enumerate(panel.stamps):
        month = f"{ts.year:04d}-{ts.month:02d}"
        if month not in cpi:
            raise ValueError(f"month {month} missing from CPI series")
        factors[i] = cpi[base] / cpi[month]
    values = panel.values * factors[:, None]
    meta = dict(panel.meta)
    meta["deflated"] = {"base": base}
    return replace(panel, values=values, meta=meta)


def interpolate(panel: PricePanel) -> PricePanel:
    """Fill gaps column by column.

    Interior gaps are linear between the nearest observed neighbours;
    leading/trailing gaps take the nearest observed value (constant
    extension). Observed cells (mask False) are never altered, and the mask
    itself is preserved, which makes the operation idempotent.
    """
    T = panel.n_weeks
    values = panel.values.copy()
    t = np.arange(T, dtype=float)
    for j in range(panel.n_series):
        observed = np.flatnonzero(~panel.mask[:, j])
        if observed.size < 2:
            c, r = panel.series[j]
            raise ValueError(f"series {c}.{r} has fewer than 2 observations; cannot interpolate")
        values[:, j] = np.interp(t, observed.astype(float), panel.values[observed, j])
    meta = dict(panel.meta)
    meta["interpolated"] = True
    return replace(panel, values=values, meta=meta)


def log_transform(panel: PricePanel) -> PricePanel:
    """Replace values by their natural logarithm and record the transform."""
    bad_rows, bad_cols = np.nonzero(~np.isnan(panel.values) & (panel.values <= 0))
    if bad_rows.size:
        i, j = int(bad_rows[0]), int(bad_cols[0])
        c, r = panel.series[j]
        raise ValueError(
            f"non-positive value at ({panel.stamps[i].date()}, {c}.{r}); cannot log-transform"
        )
    with np.errstate(invalid="ignore"):
        values = np.log(panel.values)
    meta = dict(panel.meta)
    meta["log"] = True
    return replace(panel, values=values, meta=meta)


def tag_periods(panel: PricePanel, spans: Mapping[str, tuple[date, date]]) -> PricePanel:
    """Attach named analysis periods given inclusive date ranges.

    A week belongs to a period iff its Monday stamp lies inside the range.
    Ranges must be ordered and non-overlapping; every period must catch at
    least one week.
    """
    periods: dict[str, tuple[int, int]] = {}
    prev_stop = -1
    prev_name = None
    for name, (start, end) in spans.items():
        if start > end:
            raise ValueError(f"period {name!r} has start after end")
        idx = np.flatnonzero(
            (panel.stamps >= pd.Timestamp(start)) & (panel.stamps <= pd.Timestamp(end))
        )
        if idx.size == 0:
            raise ValueError(f"period {name!r} contains no weeks")
        a, b = int(idx[0]), int(idx[-1]) + 1
        if a < prev_stop:
            raise ValueError(f"period {name!r} overlaps or precedes {prev_name!r}")
        periods[name] = (a, b)
        prev_stop, prev_name = b, name
    return replace(panel, periods=periods)


def slice_period(panel: PricePanel, name: str) -> PricePanel:
    """Return the sub-panel of one analysis period (rows re-indexed to 0)."""
    a, b = panel.period_rows(name)
    meta = dict(panel.meta)
    meta["period"] = name
    return replace(
        panel,
        stamps=panel.stamps[a:b],
        values=panel.values[a:b],
        mask=panel.mask[a:b],
        periods={name: (0, b - a)},
        meta=meta,
    )


def drop_sparse_series(
    panel: PricePanel, max_missing_frac: float = 0.25
) -> tuple[PricePanel, list[str]]:
    """Drop regions whose series are too gappy to model.

    A series trips the rule when its missing share exceeds
    ``max_missing_frac`` inside any tagged analysis period (over the whole
    span when no periods are tagged). The entire region is removed, across
    all commodities, so the panel stays a full commodity-by-region grid.
    """
    spans = list(panel.periods.values()) or [(0, panel.n_weeks)]
    bad_regions: list[str] = []
    for j, (c, r) in enumerate(panel.series):
        for a, b in spans:
            frac = float(panel.mask[a:b, j].mean())
            if frac > max_missing_frac:
                warnings.warn(
                    f"dropping region {r}: series {c}.{r} is {100 * frac:.1f}% missing "
                    f"in an analysis period (limit {100 * max_missing_frac:.0f}%)"
                )
                if r not in bad_regions:
                    bad_regions.append(r)
                break
    if not bad_regions:
        return panel, []
    keep = [j for j, (_, r) in enumerate(panel.series) if r not in bad_regions]
    if not keep:
        raise ValueError("all regions exceed the missing-data limit")
    return (
        replace(
            panel,
            series=[panel.series[j] for j in keep],
            values=panel.values[:, keep],
            mask=panel.mask[:, keep],
        ),
        sorted(bad_regions),
    )


@dataclass(frozen=True)
class PeriodSummary:
    """Summary statistics of one commodity over one analysis period."""

    commodity: str
    period: str
    mean: float
    std: float
    min: float
    median: float
    max: float
    missing_pct: float


def summarize(
    panel: PricePanel, periods: Sequence[str] | None = None
) -> list[PeriodSummary]:
    """Per-commodity summary statistics on the level (pre-log) scale.

    Values are pooled across regions and weeks within each period. If the
    panel has been log-transformed the statistics are computed on the
    exponentiated values so that units stay interpretable. The missing
    percentage comes from the original-missingness mask.
    """
    if periods is None:
        periods = list(panel.periods)
    out: list[PeriodSummary] = []
    for commodity in panel.commodities:
        cols = [j for j, (c, _) in enumerate(panel.series) if c == commodity]
        for name in periods:
            a, b = panel.period_rows(name)
            vals = panel.values[a:b][:, cols]
            if panel.meta.get("log"):
                vals = np.exp(vals)
            flat = vals[~np.isnan(vals)]
            if flat.size == 0:
                raise ValueError(f"no data for commodity {commodity!r} in period {name!r}")
            std = float(np.std(flat, ddof=1)) if flat.size > 1 else 0.0
            out.append(
                PeriodSummary(
                    commodity=commodity,
                    period=name,
                    mean=float(np.mean(flat)),
                    std=std,
                    min=float(np.min(flat)),
                    median=float(np.median(flat)),
                    max=float(np.max(flat)),
                    missing_pct=float(100.0 * panel.mask[a:b][:, cols].mean()),
                )
            )
    return out


def write_panel(panel: PricePanel, csv_path: str | Path, sidecar_path: str | Path) -> None:
    """Serialize a panel to a wide CSV plus a JSON sidecar.

    The CSV holds a ``date`` column followed by one ``<commodity>.<region>``
    column per series; the sidecar holds the mask, period tags, series
    order, and transform metadata.
    """
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + panel.labels)
        for i in range(panel.n_weeks):
            row: list[str] = [str(panel.stamps[i].date())]
            for v in panel.values[i]:
                row.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(row)
    sidecar = {
        "series": [[c, r] for c, r in panel.series],
        "mask": panel.mask.astype(int).tolist(),
        # list form keeps chronological period order under sorted-key dumps
        "periods": [[k, v[0], v[1]] for k, v in panel.periods.items()],
        "meta": panel.meta,
    }
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_panel(csv_path: str | Path, sidecar_path: str | Path) -> PricePanel:
    """Inverse of :func:`write_panel`."""
    with open(sidecar_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    series = [tuple(s) for s in sidecar["series"]]
    stamps: list[pd.Timestamp] = []
    rows: list[list[float]] = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["date"] + [f"{c}.{r}" for c, r in series]
        if header != expected:
            raise ValueError("panel CSV columns do not match sidecar series")
        for rec in reader:
            stamps.append(pd.Timestamp(rec[0]))
            rows.append([float(x) if x else float("nan") for x in rec[1:]])
    raw_periods = sidecar["periods"]
    if isinstance(raw_periods, dict):  # older sidecars
        periods = {k: tuple(v) for k, v in raw_periods.items()}
    else:
        periods = {name: (a, b) for name, a, b in raw_periods}
    return PricePanel(
        stamps=pd.DatetimeIndex(stamps),
        series=series,
        values=np.array(rows, dtype=float),
        mask=np.array(sidecar["mask"], dtype=bool),
        periods=periods,
        meta=sidecar["meta"],
    )
