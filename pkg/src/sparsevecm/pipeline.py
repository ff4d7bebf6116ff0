"""End-to-end analysis pipeline and artifact management.

`run_pipeline` drives the full workflow per analysis period: summary
statistics, panel unit-root tests, Chow break tests at period boundaries,
lag selection, the penalized VAR fit, the error-correction view with
effective ranks, default joint-impulse scenarios, and bootstrap bands.
Every stage writes flat JSON/CSV artifacts into the output directory and
the run closes with a manifest of SHA-256 hashes: rerunning with the same
config and seed reproduces the manifest byte for byte.

The config file is a flat ``key = value`` text format (``#`` comments).
Analysis periods are declared as ``period.<Name> = <start>..<end>`` with
ISO dates; every key can be overridden from the command line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Mapping

import numpy as np

from . import panel as pnl
from .bootstrap import BootstrapSpec, bootstrap_jirf_result, write_draws_csv
from .jirf import ShockScenario, build_shock, compute_jirf, to_vma
from .stattests import chow_test, panel_unit_root
from .varnet import ElasticNetConfig, VarFit, fit_var, select_lag
from .vecm import VecmView, rank_report, render_rank_table, to_vecm

__all__ = [
    "PipelineConfig",
    "GridExport",
    "run_pipeline",
    "export_grid",
    "load_config",
    "STAGES",
]

STAGES = (
    "summarize",
    "unit_root",
    "chow",
    "lag_selection",
    "fit",
    "vecm_rank",
    "jirf",
    "bootstrap",
)


@dataclass
class PipelineConfig:
    prices_csv: str
    cpi_csv: str
    out_dir: str
    base_month: str
    commodities: tuple[str, ...]
    periods: dict[str, tuple[date, date]]
    seed: int = 0
    lags: int | None = None  # None -> AIC selection up to max_lag
    max_lag: int = 4
    adf_spec: str = "c"
    adf_max_lag: int | None = 6
    sparse_threshold: float = 0.25
    horizon: int = 8
    replicates: int = 500
    confidence: float = 0.95
    keep_draws: bool = False
    topk: int = 3
    topk_commodity: str | None = None
    n_lambdas: int = 50
    lambda_min_ratio: float = 1e-4
    gamma_grid: tuple[float, ...] = (0.1, 0.5, 0.9)
    cv_folds: int = 5
    tol: float = 1e-7

    def validate(self) -> None:
        if not self.prices_csv or not self.cpi_csv:
            raise ValueError("prices_csv and cpi_csv paths are required")
        if not self.out_dir:
            raise ValueError("out_dir is required")
        if not self.periods:
            raise ValueError("at least one analysis period is required")
        prev_end: date | None = None
        for name, (a, b) in self.periods.items():
            if a > b:
                raise ValueError(f"period {name!r} has start after end")
            if prev_end is not None and a <= prev_end:
                raise ValueError(f"period {name!r} overlaps or is out of order")
            prev_end = b
        if not self.commodities:
            raise ValueError("commodity set must be nonempty")

    def enet(self) -> ElasticNetConfig:
        return ElasticNetConfig(
            gamma_grid=self.gamma_grid,
            cv_folds=self.cv_folds,
            tol=self.tol,
            n_lambdas=self.n_lambdas,
            lambda_min_ratio=self.lambda_min_ratio,
        )

    def echo(self) -> dict:
        """Config as written to the manifest. Excludes the output directory
        so reruns into different directories stay byte-identical."""
        return {
            "prices_csv": self.prices_csv,
            "cpi_csv": self.cpi_csv,
            "base_month": self.base_month,
            "commodities": list(self.commodities),
            "periods": {
                k: [a.isoformat(), b.isoformat()] for k, (a, b) in self.periods.items()
            },
            "seed": self.seed,
            "lags": self.lags,
            "max_lag": self.max_lag,
            "adf_spec": self.adf_spec,
            "adf_max_lag": self.adf_max_lag,
            "sparse_threshold": self.sparse_threshold,
            "horizon": self.horizon,
            "replicates": self.replicates,
            "confidence": self.confidence,
            "keep_draws": self.keep_draws,
            "topk": self.topk,
            "topk_commodity": self.topk_commodity,
            "n_lambdas": self.n_lambdas,
            "lambda_min_ratio": self.lambda_min_ratio,
            "gamma_grid": list(self.gamma_grid),
            "cv_folds": self.cv_folds,
            "tol": self.tol,
        }


_INT_KEYS = {"seed", "lags", "max_lag", "adf_max_lag", "horizon", "replicates", "topk", "n_lambdas", "cv_folds"}
_FLOAT_KEYS = {"sparse_threshold", "confidence", "lambda_min_ratio", "tol"}
_BOOL_KEYS = {"keep_draws"}


def _coerce(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _BOOL_KEYS:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if key == "commodities":
        return tuple(x.strip() for x in value.split(",") if x.strip())
    if key == "gamma_grid":
        return tuple(float(x) for x in value.split(","))
    return value


def load_config(
    path: str | Path | None = None, overrides: Mapping[str, object] | None = None
) -> PipelineConfig:
    """Build a config from a key-value file plus explicit overrides."""
    raw: dict[str, object] = {}
    periods: dict[str, tuple[date, date]] = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("period."):
                try:
                    a, b = value.split("..")
                    periods[key[len("period.") :]] = (
                        date.fromisoformat(a.strip()),
                        date.fromisoformat(b.strip()),
                    )
                except ValueError as exc:
                    raise ValueError(
                        f"{path}:{lineno}: period syntax is 'period.Name = YYYY-MM-DD..YYYY-MM-DD'"
                    ) from exc
            else:
                raw[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "periods":
            periods = value  # type: ignore[assignment]
        else:
            raw[key] = value
    raw.setdefault("commodities", ())
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    config = PipelineConfig(
        prices_csv=str(raw.get("prices_csv", "")),
        cpi_csv=str(raw.get("cpi_csv", "")),
        out_dir=str(raw.get("out_dir", "")),
        base_month=str(raw.get("base_month", "")),
        commodities=tuple(raw.get("commodities", ())),  # type: ignore[arg-type]
        periods=periods,
        **{
            k: raw[k]
            for k in raw
            if k
            not in ("prices_csv", "cpi_csv", "out_dir", "base_month", "commodities", "periods")
        },
    )
    return config


@dataclass(frozen=True)
class GridExport:
    """One coefficient matrix arranged for the commodity-block grid display."""

    label: str  # "pi" for the long-run matrix, "gamma<k>" for short-run lag k
    period: str
    values: np.ndarray
    row_labels: list[str]
    col_labels: list[str]
    block_boundaries: list[int]  # after every R rows/columns

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "period": self.period,
            "values": self.values.tolist(),
            "row_labels": self.row_labels,
            "col_labels": self.col_labels,
            "block_boundaries": self.block_boundaries,
        }

    def render_data(self) -> dict:
        """Signed magnitudes plus the color scale bound a front end needs to
        draw the brightness-coded grid."""
        return {
            "label": self.label,
            "period": self.period,
            "rows": self.row_labels,
            "cols": self.col_labels,
            "values": self.values.tolist(),
            "magnitude_max": float(np.max(np.abs(self.values))),
            "block_boundaries": self.block_boundaries,
        }


def export_grid(view: VecmView, which: str, period: str = "") -> GridExport:
    """Pull the requested matrix out of the error-correction view."""
    if which == "pi":
        matrix = view.long_run
    elif which.startswith("gamma"):
        try:
            k = int(which[len("gamma") :])
            matrix = view.short_run[k - 1]
        except (ValueError, IndexError):
            raise ValueError(
                f"unknown matrix label {which!r}: have pi"
                + "".join(f", gamma{i+1}" for i in range(len(view.short_run)))
            ) from None
    else:
        raise ValueError(f"unknown matrix label {which!r}")
    labels = view.fit.labels
    commodities: list[str] = []
    for c, _ in view.fit.series:
        if c not in commodities:
            commodities.append(c)
    R = len(labels) // len(commodities)
    boundaries = [R * (k + 1) for k in range(len(commodities) - 1)]
    return GridExport(
        label=which,
        period=period,
        values=np.asarray(matrix),
        row_labels=labels,
        col_labels=labels,
        block_boundaries=boundaries,
    )


def _dump(obj: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def default_scenarios(
    panel: pnl.PricePanel, period: str, config: PipelineConfig, horizon: int
) -> dict[str, ShockScenario]:
    """The shipped what-if scenarios: every commodity shocked whole, plus the
    k regions with the largest shocks for one commodity."""
    scenarios: dict[str, ShockScenario] = {}
    for commodity in panel.commodities:
        series = [f"{c}.{r}" for c, r in panel.series if c == commodity]
        scenarios[f"all_{commodity}"] = build_shock(
            series, panel=panel, source="series-std", period=period, horizon=horizon
        )
    topc = config.topk_commodity or (
        panel.commodities[1] if len(panel.commodities) > 1 else panel.commodities[0]
    )
    k = min(config.topk, len(panel.regions))
    full = scenarios[f"all_{topc}"]
    order = np.argsort(full.magnitudes)[::-1][:k]
    top_series = [full.series_ids[i] for i in sorted(order)]
    scenarios[f"top{k}_{topc}"] = build_shock(
        top_series, panel=panel, source="series-std", period=period, horizon=horizon
    )
    return scenarios


def _prepare_panel(config: PipelineConfig) -> tuple[pnl.PricePanel, pnl.PricePanel, list[str]]:
    """Ingest raw files into (levels panel, log panel, dropped regions)."""
    raw = pnl.read_observations(config.prices_csv)
    cpi = pnl.read_cpi(config.cpi_csv)
    panel = pnl.aggregate(raw, commodities=config.commodities or None)
    panel = pnl.deflate(panel, cpi, base=config.base_month)
    panel = pnl.tag_periods(panel, config.periods)
    panel, dropped = pnl.drop_sparse_series(panel, config.sparse_threshold)
    panel = pnl.interpolate(panel)
    logged = pnl.log_transform(panel)
    return panel, logged, dropped


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute every stage and write the artifact manifest.

    Any stage failure aborts the run: completed artifacts stay on disk and a
    ``manifest.partial.json`` marker records which stage failed and why.
    """
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, list[str]] = {name: [] for name in STAGES}
    state: dict = {}

    def _write(stage: str, name: str, payload: dict) -> None:
        _dump(payload, out / name)
        artifacts[stage].append(name)

    def _run_stage(name: str, fn):
        try:
            return fn()
        except Exception as exc:
            partial = {
                "failed_stage": name,
                "error": f"{type(exc).__name__}: {exc}",
                "completed_stages": [s for s in STAGES if artifacts[s] and s != name],
            }
            _dump(partial, out / "manifest.partial.json")
            raise RuntimeError(f"pipeline stage {name!r} failed: {exc}") from exc

    levels, logged, dropped = _run_stage("ingest", lambda: _prepare_panel(config))
    pnl.write_panel(logged, out / "panel.csv", out / "panel.meta.json")
    period_names = list(logged.periods)

    def stage_summarize() -> None:
        rows = [s.__dict__ for s in pnl.summarize(levels)]
        _write("summarize", "summaries.json", {"dropped_regions": dropped, "rows": rows})

    def stage_unit_root() -> None:
        results = {}
        for name in period_names:
            sub = pnl.slice_period(logged, name)
            res = panel_unit_root(sub, spec=config.adf_spec, max_lag=config.adf_max_lag)
            # the Fisher statistic is +inf when any per-series p-value
            # saturates at 0; JSON carries that as null (the p-value row and
            # the per-series inputs still tell the whole story)
            results[name] = {
                "statistic": res.statistic if np.isfinite(res.statistic) else None,
                "df": res.df,
                "pvalue": res.pvalue,
                "per_series": [
                    {"series": lbl, "statistic": r.statistic, "pvalue": r.pvalue, "lags": r.lags}
                    for lbl, r in zip(sub.labels, res.per_series)
                ],
            }
        _write("unit_root", "unit_root.json", {"spec": config.adf_spec, "periods": results})

    def stage_chow() -> None:
        p = config.lags or 2
        boundaries = []
        for prev, nxt in zip(period_names, period_names[1:]):
            break_row = logged.periods[nxt][0]
            entry: dict = {"boundary": f"{prev}->{nxt}", "break_index": break_row}
            try:
                res = chow_test(logged, break_row, p)
                entry.update(
                    {
                        "f_statistic": res.f_statistic,
                        "df": [res.df_num, res.df_den],
                        "pvalue": res.pvalue,
                        "per_equation": [
                            {"series": eq.series, "f": eq.f_statistic, "pvalue": eq.pvalue}
                            for eq in res.per_equation
                        ],
                    }
                )
            except ValueError as exc:
                # expected when sub-samples cannot support m*p+1 regressors
                entry["skipped"] = str(exc)
            boundaries.append(entry)
        _write("chow", "chow.json", {"lags": p, "boundaries": boundaries})

    def stage_lag_selection() -> None:
        chosen: dict[str, int] = {}
        for name in period_names:
            sub = pnl.slice_period(logged, name)
            if config.lags is not None:
                chosen[name] = config.lags
            else:
                chosen[name] = select_lag(sub, config.max_lag, config.enet())
        state["lags"] = chosen
        _write(
            "lag_selection",
            "lag_selection.json",
            {"configured": config.lags, "chosen": chosen},
        )

    def stage_fit() -> None:
        fits: dict[str, VarFit] = {}
        for name in period_names:
            sub = pnl.slice_period(logged, name)
            fit = fit_var(sub, state["lags"][name], config.enet())
            fit.save(out / f"fit_{name}.json")
            artifacts["fit"].append(f"fit_{name}.json")
            fits[name] = fit
        state["fits"] = fits

    def stage_vecm_rank() -> None:
        views: dict[str, VecmView] = {}
        for name, fit in state["fits"].items():
            view = to_vecm(fit)
            views[name] = view
            _write("vecm_rank", f"vecm_{name}.json", view.to_dict())
        sub_views: dict[tuple[str, str], VecmView] = {}
        for name in period_names:
            sub = pnl.slice_period(logged, name)
            parent = state["fits"][name]
            for commodity in sub.commodities:
                cols = [j for j, (c, _) in enumerate(sub.series) if c == commodity]
                values = sub.values[:, cols]
                subfit = fit_var(values, parent.p, config.enet(), lam=parent.lam, gamma=parent.gamma)
                subfit.series = [sub.series[j] for j in cols]
                sub_views[(commodity, name)] = to_vecm(subfit)
        report = rank_report(views, sub_views)
        _write("vecm_rank", "rank_report.json", report)
        (out / "rank_report.txt").write_text(render_rank_table(report), encoding="utf-8")
        artifacts["vecm_rank"].append("rank_report.txt")
        state["views"] = views

    def stage_jirf() -> None:
        state["scenarios"] = {}
        for name, fit in state["fits"].items():
            sub = pnl.slice_period(logged, name)
            vma = to_vma(fit, config.horizon)
            vma.save(out / f"vma_{name}.json")
            artifacts["jirf"].append(f"vma_{name}.json")
            scen_map = default_scenarios(sub, name, config, config.horizon)
            state["scenarios"][name] = scen_map
            for scen_name, scenario in scen_map.items():
                result = compute_jirf(vma, fit.sigma, scenario)
                result.save(out / f"jirf_{name}_{scen_name}.json")
                result.write_csv(out / f"jirf_{name}_{scen_name}.csv")
                artifacts["jirf"] += [
                    f"jirf_{name}_{scen_name}.json",
                    f"jirf_{name}_{scen_name}.csv",
                ]

    def stage_bootstrap() -> None:
        for name, fit in state["fits"].items():
            sub = pnl.slice_period(logged, name)
            for scen_name, scenario in state["scenarios"][name].items():
                spec = BootstrapSpec(
                    scenario=scenario,
                    replicates=config.replicates,
                    seed=config.seed,
                    confidence=config.confidence,
                    keep_draws=config.keep_draws,
                    solver=config.enet(),
                )
                result = bootstrap_jirf_result(fit, sub, spec)
                result.save(out / f"bootstrap_{name}_{scen_name}.json")
                artifacts["bootstrap"].append(f"bootstrap_{name}_{scen_name}.json")
                if config.keep_draws and result.distribution.draws is not None:
                    draws_name = f"bootstrap_{name}_{scen_name}_draws.csv"
                    write_draws_csv(result, out / draws_name)
                    artifacts["bootstrap"].append(draws_name)

    stage_fns = {
        "summarize": stage_summarize,
        "unit_root": stage_unit_root,
        "chow": stage_chow,
        "lag_selection": stage_lag_selection,
        "fit": stage_fit,
        "vecm_rank": stage_vecm_rank,
        "jirf": stage_jirf,
        "bootstrap": stage_bootstrap,
    }
    for name in STAGES:
        _run_stage(name, stage_fns[name])

    hashes = {"panel.csv": _sha256(out / "panel.csv"), "panel.meta.json": _sha256(out / "panel.meta.json")}
    for names in artifacts.values():
        for rel in names:
            hashes[rel] = _sha256(out / rel)
    manifest = {
        "config": config.echo(),
        "inputs": {
            "prices_csv": _sha256(Path(config.prices_csv)),
            "cpi_csv": _sha256(Path(config.cpi_csv)),
        },
        "stages": [{"name": name, "artifacts": sorted(artifacts[name])} for name in STAGES],
        "artifacts": hashes,
    }
    _dump(manifest, out / "manifest.json")
    partial = out / "manifest.partial.json"
    if partial.exists():
        partial.unlink()
    return manifest
