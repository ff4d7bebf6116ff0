"""Synthetic cointegrated price panel generator.

Builds a VAR(2) whose long-run matrix has a chosen reduced rank r: the
levels carry m - r common stochastic trends and r stationary
error-correcting directions, plus sparse short-run dynamics. Log prices
simulate from the recursion, exponentiate to levels around per-commodity
base prices, and scatter into county-day style raw observations with
configurable missingness, so the whole ingestion pipeline has something
realistic to chew on.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

__all__ = ["SynthConfig", "generate_system", "simulate_logs", "write_synthetic_dataset"]


@dataclass
class SynthConfig:
    commodities: tuple[str, ...] = ("piglet", "hog", "pork")
    n_regions: int = 4
    weeks: int = 300
    rank: int | None = None  # long-run rank; default 3m/5 (so 2m/5 common trends)
    sparsity: float = 0.05  # density of short-run coefficients
    seed: int = 0
    missing_rate: float = 0.02
    obs_per_week: int = 3
    start: date = date(2016, 9, 26)  # a Monday
    # relative lengths of the Pre / Post1 / Post2 analysis periods, with one
    # skipped week between Pre and Post1 standing in for a disruption window
    period_split: tuple[float, float] = (0.4, 0.7)
    # slow error correction keeps single series indistinguishable from unit
    # roots over period-length windows, as the workflow expects
    adjustment: float = 0.05
    noise_sd: float = 0.03
    base_prices: tuple[float, ...] = (35.0, 14.0, 21.0)

    @property
    def m(self) -> int:
        return len(self.commodities) * self.n_regions

    @property
    def regions(self) -> list[str]:
        return [f"R{j + 1:02d}" for j in range(self.n_regions)]

    @property
    def series(self) -> list[tuple[str, str]]:
        return [(c, r) for c in self.commodities for r in self.regions]


def generate_system(cfg: SynthConfig) -> dict:
    """Draw the true VAR(2) coefficients and error covariance.

    The long-run matrix is ``-kappa * B D B'`` for an orthonormal m x r
    basis B, giving exactly r error-correcting directions and m - r unit
    roots. Short-run dynamics are a sparse random matrix, rescaled until
    the companion matrix has no explosive roots.
    """
    rng = np.random.default_rng(cfg.seed)
    m = cfg.m
    r = cfg.rank if cfg.rank is not None else max(1, (3 * m) // 5)
    if not 0 < r < m:
        raise ValueError(f"rank must be strictly between 0 and {m}")

    basis, _ = np.linalg.qr(rng.standard_normal((m, r)))
    speeds = rng.uniform(0.5, 1.0, size=r)
    long_run = -cfg.adjustment * (basis * speeds) @ basis.T

    short_run = np.where(
        rng.random((m, m)) < cfg.sparsity, rng.normal(0.0, 0.15, size=(m, m)), 0.0
    )
    for _ in range(20):
        phi1 = np.eye(m) + long_run + short_run
        phi2 = -short_run
        companion = np.zeros((2 * m, 2 * m))
        companion[:m, :m] = phi1
        companion[:m, m:] = phi2
        companion[m:, :m] = np.eye(m)
        roots = np.abs(np.linalg.eigvals(companion))
        if roots.max() <= 1.0 + 1e-8:
            break
        short_run *= 0.5
    else:
        raise RuntimeError("could not stabilize the synthetic system")

    corr_seed = rng.standard_normal((m, max(1, m // 3)))
    corr = corr_seed @ corr_seed.T
    d = np.sqrt(np.diag(corr))
    corr = corr / np.outer(d, d)
    sigma = cfg.noise_sd**2 * (0.7 * np.eye(m) + 0.3 * corr)

    base = np.array(
        [
            cfg.base_prices[k % len(cfg.base_prices)]
            for k in range(len(cfg.commodities))
            for _ in range(cfg.n_regions)
        ]
    )
    log_base = np.log(base) + rng.normal(0.0, 0.05, size=m)
    # c = -P y_bar anchors the stationary directions at the base log prices
    # without adding drift along the unit roots (c lies in the span of P).
    intercept = -long_run @ log_base
    return {
        "phi": [phi1, phi2],
        "intercept": intercept,
        "sigma": sigma,
        "long_run": long_run,
        "rank": r,
        "log_base": log_base,
    }


def simulate_logs(cfg: SynthConfig, system: dict, burn_in: int = 50) -> np.ndarray:
    """Simulate T weekly log-price rows from the true system."""
    rng = np.random.default_rng(cfg.seed + 1)
    m = cfg.m
    T = cfg.weeks + burn_in
    chol = np.linalg.cholesky(system["sigma"])
    y = np.tile(system["log_base"], (T, 1))
    eps = rng.standard_normal((T, m)) @ chol.T
    for t in range(2, T):
        y[t] = (
            system["intercept"]
            + system["phi"][0] @ y[t - 1]
            + system["phi"][1] @ y[t - 2]
            + eps[t]
        )
    return y[burn_in:]


def as_panel(cfg: SynthConfig, logs: np.ndarray) -> "PricePanel":
    """Wrap simulated log values in a tagged PricePanel (no missing cells)."""
    import pandas as pd

    from .panel import PricePanel, tag_periods

    T = logs.shape[0]
    stamps = pd.DatetimeIndex(
        [pd.Timestamp(cfg.start) + pd.Timedelta(days=7 * i) for i in range(T)]
    )
    panel = PricePanel(
        stamps=stamps,
        series=cfg.series,
        values=np.asarray(logs, dtype=float),
        mask=np.zeros(logs.shape, dtype=bool),
        meta={"log": True, "synthetic": True},
    )
    if T == cfg.weeks:
        panel = tag_periods(panel, _period_spans(cfg))
    return panel


def _period_spans(cfg: SynthConfig) -> dict[str, tuple[date, date]]:
    """Pre/Post1/Post2 date ranges with a one-week gap after Pre."""
    monday = lambda i: cfg.start + timedelta(days=7 * i)
    a = int(cfg.weeks * cfg.period_split[0])
    b = int(cfg.weeks * cfg.period_split[1])
    return {
        "Pre": (monday(0), monday(a - 1)),
        "Post1": (monday(a + 1), monday(b - 1)),
        "Post2": (monday(b), monday(cfg.weeks - 1)),
    }


def write_synthetic_dataset(cfg: SynthConfig, out_dir: str | Path) -> dict[str, Path]:
    """Write prices.csv, cpi.csv, truth.json, and a ready-to-run pipeline.conf.

    Prices are emitted as multiple per-week raw observations (days scattered
    inside the ISO week) with cells knocked out at the configured missing
    rate, so aggregation and interpolation both do real work downstream.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    system = generate_system(cfg)
    logs = simulate_logs(cfg, system)
    prices = np.exp(logs)
    rng = np.random.default_rng(cfg.seed + 2)
    series = cfg.series

    months: list[str] = []
    cursor = cfg.start.replace(day=1)
    end = cfg.start + timedelta(days=7 * (cfg.weeks + 1))
    while cursor <= end:
        months.append(f"{cursor.year:04d}-{cursor.month:02d}")
        cursor = (cursor.replace(day=28) + timedelta(days=5)).replace(day=1)

    prices_path = out / "prices.csv"
    with open(prices_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "region", "commodity", "price"])
        for i in range(cfg.weeks):
            monday = cfg.start + timedelta(days=7 * i)
            # cpi index for this week's month, used to re-inflate so that
            # deflation recovers the simulated real prices
            month = f"{monday.year:04d}-{monday.month:02d}"
            infl = 1.002 ** months.index(month)
            for j, (c, r) in enumerate(series):
                if rng.random() < cfg.missing_rate:
                    continue
                for _ in range(cfg.obs_per_week):
                    day = monday + timedelta(days=int(rng.integers(0, 7)))
                    wobble = float(np.exp(rng.normal(0.0, 0.002)))
                    writer.writerow(
                        [day.isoformat(), r, c, f"{prices[i, j] * infl * wobble:.4f}"]
                    )

    cpi_path = out / "cpi.csv"
    with open(cpi_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["month", "index"])
        for k, month in enumerate(months):
            writer.writerow([month, f"{100.0 * 1.002 ** k:.6f}"])

    truth_path = out / "truth.json"
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "rank": system["rank"],
                "long_run": system["long_run"].tolist(),
                "phi": [P.tolist() for P in system["phi"]],
                "sigma": system["sigma"].tolist(),
                "series": [[c, r] for c, r in series],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")

    spans = _period_spans(cfg)
    conf_path = out / "pipeline.conf"
    lines = [
        "# synthetic dataset pipeline configuration",
        f"prices_csv = {prices_path}",
        f"cpi_csv = {cpi_path}",
        f"base_month = {months[0]}",
        "commodities = " + ",".join(cfg.commodities),
        f"seed = {cfg.seed}",
    ]
    for name, (a, b) in spans.items():
        lines.append(f"period.{name} = {a.isoformat()}..{b.isoformat()}")
    conf_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {
        "prices": prices_path,
        "cpi": cpi_path,
        "truth": truth_path,
        "config": conf_path,
    }
