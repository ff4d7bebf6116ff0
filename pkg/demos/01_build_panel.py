"""Build a weekly price panel from raw long-form observations.

Generates a synthetic county-day style dataset, then walks the full
ingestion chain: weekly aggregation, CPI deflation, sparse-series
exclusion, gap interpolation, the log transform, and period summary
statistics.
"""

import tempfile
from pathlib import Path

from sparsevecm import (
    aggregate,
    deflate,
    drop_sparse_series,
    interpolate,
    log_transform,
    read_cpi,
    read_observations,
    slice_period,
    summarize,
    tag_periods,
)
from sparsevecm.pipeline import load_config
from sparsevecm.synth import SynthConfig, write_synthetic_dataset

workdir = Path(tempfile.mkdtemp(prefix="sparsevecm_demo_"))
paths = write_synthetic_dataset(SynthConfig(n_regions=5, weeks=260, seed=42), workdir)
config = load_config(paths["config"])

raw = read_observations(config.prices_csv)
print(f"raw observations: {len(raw)} rows, e.g. {raw[0]}")

panel = aggregate(raw, commodities=config.commodities)
print(f"\naggregated: {panel.n_weeks} weeks x {panel.n_series} series")
print(f"series order is commodity-major: {panel.labels[:6]} ...")
print(f"missing cells: {panel.mask.sum()} ({100 * panel.mask.mean():.2f}%)")

panel = deflate(panel, read_cpi(config.cpi_csv), base=config.base_month)
panel = tag_periods(panel, config.periods)
panel, dropped = drop_sparse_series(panel)
if dropped:
    print(f"dropped sparse regions: {dropped}")

panel = interpolate(panel)
print("\nafter interpolation: no gaps left ->", not (panel.values != panel.values).any())

print("\nlevel-scale summaries (deflated prices):")
print(f"{'commodity':<10} {'period':<8} {'mean':>8} {'sd':>7} {'min':>7} {'max':>8} {'miss %':>7}")
for s in summarize(panel):
    print(
        f"{s.commodity:<10} {s.period:<8} {s.mean:>8.2f} {s.std:>7.2f}"
        f" {s.min:>7.2f} {s.max:>8.2f} {s.missing_pct:>7.2f}"
    )

logged = log_transform(panel)
pre = slice_period(logged, "Pre")
print(f"\nlog panel ready for modeling; Pre period has {pre.n_weeks} weeks")
