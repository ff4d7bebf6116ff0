"""Command line interface.

Subcommands mirror the pipeline stages so each step can run standalone
against the flat artifact files, plus ``run`` for everything at once,
``synth`` for generating a test dataset, and ``serve`` for the scenario
service. Every config-file key has a matching flag; ``--seed`` falls back
to the ``SPARSEVECM_SEED`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import panel as pnl
from .bootstrap import BootstrapSpec, bootstrap_jirf_result
from .jirf import build_shock, compute_jirf, to_vma
from .pipeline import PipelineConfig, export_grid, load_config, run_pipeline
from .stattests import chow_test, pairwise_cointegration, panel_unit_root
from .synth import SynthConfig, write_synthetic_dataset
from .varnet import VarFit, fit_var, select_lag
from .vecm import rank_report, render_rank_table, to_vecm


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--prices", dest="prices_csv", help="long-form prices CSV")
    p.add_argument("--cpi", dest="cpi_csv", help="monthly CPI CSV")
    p.add_argument("--out", dest="out_dir", help="artifact output directory")
    p.add_argument("--base-month", dest="base_month", help="CPI base month YYYY-MM")
    p.add_argument("--commodities", help="comma-separated commodity order")
    p.add_argument(
        "--period-def",
        action="append",
        dest="period_defs",
        metavar="NAME=START..END",
        help="analysis period definition (repeatable)",
    )
    p.add_argument("--lags", type=int, default=None, help="fix the VAR lag order")
    p.add_argument("--max-lag", dest="max_lag", type=int, default=None)
    p.add_argument("--lambda-grid", dest="n_lambdas", type=int, default=None,
                   help="number of auto-generated lambda grid points")
    p.add_argument("--gamma-grid", dest="gamma_grid", default=None,
                   help="comma-separated gamma values in [0,1]")
    p.add_argument("--cv-folds", dest="cv_folds", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--confidence", type=float, default=None)
    p.add_argument("--keep-draws", dest="keep_draws", action="store_true", default=None)
    p.add_argument("--seed", type=int, default=None)


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides: dict = {}
    for key in (
        "prices_csv", "cpi_csv", "out_dir", "base_month", "lags", "max_lag",
        "n_lambdas", "cv_folds", "tol", "horizon", "replicates", "confidence",
        "keep_draws", "seed",
    ):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "commodities", None):
        overrides["commodities"] = tuple(
            c.strip() for c in args.commodities.split(",") if c.strip()
        )
    if getattr(args, "gamma_grid", None):
        overrides["gamma_grid"] = tuple(float(g) for g in args.gamma_grid.split(","))
    if getattr(args, "period_defs", None):
        periods: dict[str, tuple[date, date]] = {}
        for spec in args.period_defs:
            name, span = spec.split("=", 1)
            a, b = span.split("..")
            periods[name.strip()] = (date.fromisoformat(a.strip()), date.fromisoformat(b.strip()))
        overrides["periods"] = periods
    if overrides.get("seed") is None and os.environ.get("SPARSEVECM_SEED"):
        overrides["seed"] = int(os.environ["SPARSEVECM_SEED"])
    return load_config(getattr(args, "config", None), overrides)


def _load_artifacts(out_dir: str) -> tuple[pnl.PricePanel, dict[str, VarFit]]:
    out = Path(out_dir)
    panel = pnl.read_panel(out / "panel.csv", out / "panel.meta.json")
    fits = {
        path.stem[len("fit_") :]: VarFit.load(path)
        for path in sorted(out.glob("fit_*.json"))
    }
    return panel, fits


def _dump(obj: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else int(os.environ.get("SPARSEVECM_SEED", "0"))
    cfg = SynthConfig(
        commodities=tuple(args.commodities.split(",")),
        n_regions=args.regions,
        weeks=args.weeks,
        rank=args.rank,
        sparsity=args.sparsity,
        seed=seed,
        missing_rate=args.missing_rate,
    )
    paths = write_synthetic_dataset(cfg, args.out)
    print(f"wrote synthetic dataset ({cfg.m} series x {cfg.weeks} weeks, rank {cfg.rank or 'auto'})")
    for kind, path in paths.items():
        print(f"  {kind}: {path}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = pnl.read_observations(config.prices_csv)
    cpi = pnl.read_cpi(config.cpi_csv)
    panel = pnl.aggregate(raw, commodities=config.commodities or None)
    panel = pnl.deflate(panel, cpi, base=config.base_month)
    panel = pnl.tag_periods(panel, config.periods)
    panel, dropped = pnl.drop_sparse_series(panel, config.sparse_threshold)
    panel = pnl.interpolate(panel)
    summaries = [s.__dict__ for s in pnl.summarize(panel)]
    logged = pnl.log_transform(panel)
    pnl.write_panel(logged, out / "panel.csv", out / "panel.meta.json")
    _dump({"dropped_regions": dropped, "rows": summaries}, out / "summaries.json")
    print(f"panel: {logged.n_weeks} weeks x {logged.n_series} series -> {out}")
    if dropped:
        print(f"dropped sparse regions: {', '.join(dropped)}")
    return 0


def cmd_test(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    panel, _ = _load_artifacts(config.out_dir)
    out = Path(config.out_dir)
    print(f"{'period':<10} {'MW statistic':>14} {'df':>6} {'p-value':>10}")
    results = {}
    for name in panel.periods:
        sub = pnl.slice_period(panel, name)
        res = panel_unit_root(sub, spec=config.adf_spec, max_lag=config.adf_max_lag)
        results[name] = {"statistic": res.statistic, "df": res.df, "pvalue": res.pvalue}
        print(f"{name:<10} {res.statistic:>14.3f} {res.df:>6d} {res.pvalue:>10.4f}")
    _dump({"spec": config.adf_spec, "periods": results}, out / "unit_root.json")

    names = list(panel.periods)
    chow_entries = []
    for prev, nxt in zip(names, names[1:]):
        break_row = panel.periods[nxt][0]
        try:
            res = chow_test(panel, break_row, config.lags or 2)
            chow_entries.append(
                {"boundary": f"{prev}->{nxt}", "f": res.f_statistic, "pvalue": res.pvalue}
            )
            print(f"chow {prev}->{nxt}: F = {res.f_statistic:.3f}, p = {res.pvalue:.4g}")
        except ValueError as exc:
            chow_entries.append({"boundary": f"{prev}->{nxt}", "skipped": str(exc)})
            print(f"chow {prev}->{nxt}: skipped ({exc})")
    _dump({"boundaries": chow_entries}, out / "chow.json")

    if args.pairwise:
        for name in panel.periods:
            res = pairwise_cointegration(panel, args.pairwise, period=name)
            print(
                f"cointegration {args.pairwise} {name}: {res.count} of "
                f"{len(res.regions) * (len(res.regions) - 1) // 2} pairs at {res.alpha:.0%}"
            )
            _dump(
                {
                    "commodity": res.commodity,
                    "period": name,
                    "count": res.count,
                    "regions": list(res.regions),
                    "cointegrated": res.cointegrated.astype(bool).tolist(),
                },
                out / f"cointegration_{args.pairwise}_{name}.json",
            )
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    panel, _ = _load_artifacts(config.out_dir)
    out = Path(config.out_dir)
    chosen = {}
    for name in panel.periods:
        sub = pnl.slice_period(panel, name)
        p = config.lags or select_lag(sub, config.max_lag, config.enet())
        chosen[name] = p
        fit = fit_var(sub, p, config.enet())
        fit.save(out / f"fit_{name}.json")
        to_vma(fit, config.horizon).save(out / f"vma_{name}.json")
        print(
            f"fit {name}: p={p}, lambda={fit.lam:.6g}, gamma={fit.gamma}, "
            f"nonzero={fit.nonzero_count}/{fit.theta.size}"
        )
    _dump({"configured": config.lags, "chosen": chosen}, out / "lag_selection.json")
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    panel, fits = _load_artifacts(config.out_dir)
    out = Path(config.out_dir)
    views = {}
    sub_views = {}
    for name, fit in fits.items():
        views[name] = to_vecm(fit)
        _dump(views[name].to_dict(), out / f"vecm_{name}.json")
        sub = pnl.slice_period(panel, name)
        for commodity in sub.commodities:
            cols = [j for j, (c, _) in enumerate(sub.series) if c == commodity]
            subfit = fit_var(sub.values[:, cols], fit.p, config.enet(), lam=fit.lam, gamma=fit.gamma)
            subfit.series = [sub.series[j] for j in cols]
            sub_views[(commodity, name)] = to_vecm(subfit)
    report = rank_report(views, sub_views)
    _dump(report, out / "rank_report.json")
    table = render_rank_table(report)
    (out / "rank_report.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def _scenario_from_args(args, panel, fits):
    period = args.period or next(iter(fits))
    fit = fits[period]
    sub = pnl.slice_period(panel, period)
    if args.series:
        series = [s.strip() for s in args.series.split(",")]
    elif args.commodity:
        series = [f"{c}.{r}" for c, r in sub.series if c == args.commodity]
    else:
        raise SystemExit("need --series or --commodity")
    magnitudes = None
    if args.magnitudes:
        magnitudes = [float(x) for x in args.magnitudes.split(",")]
    scenario = build_shock(
        series,
        panel=sub,
        fit=fit,
        source=args.source,
        magnitudes=magnitudes,
        horizon=args.horizon if args.horizon is not None else 8,
    )
    return period, fit, sub, scenario


def cmd_jirf(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    panel, fits = _load_artifacts(config.out_dir)
    period, fit, _, scenario = _scenario_from_args(args, panel, fits)
    result = compute_jirf(to_vma(fit, scenario.horizon), fit.sigma, scenario)
    out = Path(config.out_dir)
    name = args.name or "custom"
    result.save(out / f"jirf_{period}_{name}.json")
    result.write_csv(out / f"jirf_{period}_{name}.csv")
    peak = float(np.max(np.abs(result.responses)))
    print(f"jirf {period}/{name}: {len(scenario.series_ids)} series shocked, "
          f"H=0..{scenario.horizon}, peak |response| = {peak:.4g}")
    return 0


def cmd_bootstrap(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    panel, fits = _load_artifacts(config.out_dir)
    period, fit, sub, scenario = _scenario_from_args(args, panel, fits)
    spec = BootstrapSpec(
        scenario=scenario,
        replicates=config.replicates,
        seed=config.seed,
        confidence=config.confidence,
        keep_draws=config.keep_draws,
        solver=config.enet(),
    )
    result = bootstrap_jirf_result(fit, sub, spec)
    out = Path(config.out_dir)
    name = args.name or "custom"
    result.save(out / f"bootstrap_{period}_{name}.json")
    dist = result.distribution
    if config.keep_draws and dist.draws is not None:
        from .bootstrap import write_draws_csv

        write_draws_csv(result, out / f"bootstrap_{period}_{name}_draws.csv")
    n_sig = int(dist.significant.sum())
    print(
        f"bootstrap {period}/{name}: {dist.replicates_used} replicates "
        f"({dist.dropped} dropped), {n_sig} significant cells at {dist.confidence:.0%}"
    )
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _, fits = _load_artifacts(config.out_dir)
    out = Path(config.out_dir)
    periods = [args.period] if args.period else list(fits)
    matrices = args.matrix.split(",") if args.matrix else ["pi", "gamma1"]
    for period in periods:
        view = to_vecm(fits[period])
        for which in matrices:
            try:
                grid = export_grid(view, which, period)
            except ValueError as exc:
                print(f"skip {period}/{which}: {exc}", file=sys.stderr)
                continue
            _dump(grid.to_dict(), out / f"grid_{period}_{which}.json")
            _dump(grid.render_data(), out / f"grid_{period}_{which}.render.json")
            print(f"exported grid {period}/{which}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app, load_bundle

    bundle = load_bundle(args.bundle)
    ui_dir = None
    if args.ui:
        candidate = Path(args.ui_dir) if args.ui_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if not candidate.exists():
            raise SystemExit(f"UI bundle not found at {candidate}; build the frontend first")
        ui_dir = candidate
    app = create_app(bundle, workers=args.workers, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    manifest = run_pipeline(config)
    n = len(manifest["artifacts"])
    print(f"pipeline complete: {n} artifacts in {config.out_dir}")
    for stage in manifest["stages"]:
        print(f"  {stage['name']}: {len(stage['artifacts'])} artifact(s)")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sparsevecm",
        description="Sparse VECM estimation and joint impulse response analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic raw dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--commodities", default="piglet,hog,pork")
    p.add_argument("--regions", type=int, default=4)
    p.add_argument("--weeks", type=int, default=300)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--sparsity", type=float, default=0.05)
    p.add_argument("--missing-rate", dest="missing_rate", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_synth)

    for name, fn, help_text in (
        ("ingest", cmd_ingest, "aggregate, deflate, interpolate, and log the raw data"),
        ("test", cmd_test, "panel unit-root and Chow break tests"),
        ("fit", cmd_fit, "select lags and fit the penalized VAR per period"),
        ("rank", cmd_rank, "error-correction view and effective-rank report"),
        ("jirf", cmd_jirf, "point joint impulse response for a scenario"),
        ("bootstrap", cmd_bootstrap, "bootstrap bands for a scenario"),
        ("export", cmd_export, "coefficient grid exports for rendering"),
        ("run", cmd_run, "run the full pipeline"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        if name == "test":
            p.add_argument("--pairwise", help="commodity for pairwise cointegration tests")
        if name in ("jirf", "bootstrap"):
            p.add_argument("--period", help="fitted period to shock (default: first)")
            p.add_argument("--series", help="comma-separated series labels to shock")
            p.add_argument("--commodity", help="shock every region of this commodity")
            p.add_argument("--source", default="series-std",
                           choices=["series-std", "residual-std", "user"])
            p.add_argument("--magnitudes", help="comma-separated user shock sizes")
            p.add_argument("--name", help="scenario name for output files")
        if name == "export":
            p.add_argument("--period", help="period to export (default: all)")
            p.add_argument("--matrix", help="comma-separated matrix labels (pi, gamma1, ...)")
        p.set_defaults(fn=fn)

    p = sub.add_parser("serve", help="serve the what-if scenario API")
    p.add_argument("--bundle", required=True, help="pipeline output / model bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--workers", type=int, default=2, help="bootstrap job workers")
    p.add_argument("--ui", action="store_true", help="also serve the explorer UI")
    p.add_argument("--ui-dir", help="explorer UI static bundle directory")
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
