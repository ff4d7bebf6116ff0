"""Residual bootstrap for joint impulse response confidence bands.

Synthetic panels are generated by drawing whole residual rows with
replacement (keeping the contemporaneous correlation the responses depend
on), re-seeding the recursion with the first p observed rows, and rolling
the fitted dynamics forward. Each replicate is refit at the original
(lambda, gamma), its covariance, shock magnitudes, and moving-average form
recomputed, and the joint impulse response re-evaluated; percentile bands
and significance flags come from the replicate distribution.

Replicate b draws from an RNG stream spawned from (master seed, b), so the
aggregate is reproducible no matter how replicates are scheduled.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .jirf import JirfResult, ShockScenario, compute_jirf, to_vma
from .panel import PricePanel
from .varnet import ConvergenceError, ElasticNetConfig, VarFit, fit_var

__all__ = [
    "BootstrapSpec",
    "JirfDistribution",
    "resample_series",
    "bootstrap_jirf",
    "bootstrap_jirf_result",
    "write_draws_csv",
]


@dataclass
class BootstrapSpec:
    """Replication settings for :func:`bootstrap_jirf`."""

    scenario: ShockScenario
    replicates: int = 500
    seed: int = 0
    confidence: float = 0.95
    recompute_shocks: bool = True
    keep_draws: bool = False
    max_drop_frac: float = 0.10
    solver: ElasticNetConfig = field(default_factory=ElasticNetConfig)

    def validate(self) -> None:
        if self.replicates < 2:
            raise ValueError("need at least 2 replicates")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass
class JirfDistribution:
    """Bootstrap summary per (horizon, series): mean, band, significance."""

    mean: np.ndarray  # (H+1, m)
    lower: np.ndarray
    upper: np.ndarray
    significant: np.ndarray  # bool: band excludes zero
    confidence: float
    replicates_used: int
    dropped: int
    draws: np.ndarray | None = None  # (B, H+1, m) when kept

    def to_dict(self) -> dict:
        d = {
            "confidence": self.confidence,
            "replicates_used": self.replicates_used,
            "dropped": self.dropped,
            "mean": self.mean.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "significant": self.significant.astype(bool).tolist(),
        }
        return d


def resample_series(
    fit: VarFit, values: np.ndarray, seed: int | np.random.Generator
) -> np.ndarray:
    """One synthetic panel from the fitted dynamics and resampled residuals.

    Residuals are centered first; the first p rows copy the original data;
    thereafter whole residual rows are drawn with replacement and the
    series rolls forward through the fitted recursion.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    values = np.asarray(values, dtype=float)
    T, m = values.shape
    p = fit.p
    eps = fit.residuals - fit.residuals.mean(axis=0)
    draws = rng.integers(0, eps.shape[0], size=T - p)
    out = np.empty_like(values)
    out[:p] = values[:p]
    for t in range(p, T):
        y = fit.intercept + eps[draws[t - p]]
        for k in range(1, p + 1):
            y = y + fit.lag_coefs[k - 1] @ out[t - k]
        out[t] = y
    return out


def _replicate_rng(master_seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(b,)))


def bootstrap_jirf(
    fit: VarFit, panel: PricePanel, spec: BootstrapSpec
) -> JirfDistribution:
    """Bootstrap distribution of the joint impulse response.

    Per replicate: resample -> refit at the original (lambda, gamma) ->
    recompute the covariance, the shock magnitudes (for series-std sources,
    on the synthetic panel), and the response path. Replicates whose refit
    fails are dropped with a warning; more than ``max_drop_frac`` dropped is
    an error. Bands are percentile intervals at the requested confidence.
    """
    spec.validate()
    scenario = spec.scenario
    values = panel.values
    if values.shape[1] != fit.m:
        raise ValueError("panel and fit dimensions disagree")

    draws: list[np.ndarray] = []
    dropped = 0
    for b in range(spec.replicates):
        rng = _replicate_rng(spec.seed, b)
        synthetic = resample_series(fit, values, rng)
        try:
            if not np.isfinite(synthetic).all():
                raise ValueError("synthetic panel overflowed (unstable fitted dynamics)")
            refit = fit_var(synthetic, fit.p, spec.solver, lam=fit.lam, gamma=fit.gamma)
            if spec.recompute_shocks and scenario.source == "series-std":
                cols = synthetic[:, list(scenario.indices)]
                mags = np.sqrt(np.mean((cols - cols.mean(axis=0)) ** 2, axis=0))
                scen_b = scenario.with_magnitudes(mags)
            elif spec.recompute_shocks and scenario.source == "residual-std":
                mags = np.sqrt(np.diag(refit.sigma)[list(scenario.indices)])
                scen_b = scenario.with_magnitudes(mags)
            else:
                scen_b = scenario
            vma_b = to_vma(refit, scenario.horizon)
            result = compute_jirf(vma_b, refit.sigma, scen_b)
            if not np.isfinite(result.responses).all():
                raise ValueError("non-finite responses")
        except (ConvergenceError, ValueError, np.linalg.LinAlgError) as exc:
            dropped += 1
            warnings.warn(f"bootstrap replicate {b} dropped: {exc}")
            continue
        draws.append(result.responses)

    if dropped > spec.max_drop_frac * spec.replicates:
        raise RuntimeError(
            f"{dropped}/{spec.replicates} bootstrap replicates failed "
            f"(limit {spec.max_drop_frac:.0%})"
        )

    stack = np.stack(draws)  # (B_used, H+1, m)
    alpha = (1.0 - spec.confidence) / 2.0
    lower = np.percentile(stack, 100.0 * alpha, axis=0)
    upper = np.percentile(stack, 100.0 * (1.0 - alpha), axis=0)
    return JirfDistribution(
        mean=stack.mean(axis=0),
        lower=lower,
        upper=upper,
        significant=(lower > 0.0) | (upper < 0.0),
        confidence=spec.confidence,
        replicates_used=stack.shape[0],
        dropped=dropped,
        draws=stack if spec.keep_draws else None,
    )


def bootstrap_jirf_result(
    fit: VarFit, panel: PricePanel, spec: BootstrapSpec
) -> JirfResult:
    """Point response plus its bootstrap layer, bundled for serialization."""
    vma = to_vma(fit, spec.scenario.horizon)
    point = compute_jirf(vma, fit.sigma, spec.scenario)
    point.distribution = bootstrap_jirf(fit, panel, spec)
    return point


def write_draws_csv(result: JirfResult, path) -> None:
    """Columnar raw-draw archive: replicate, horizon, series, value."""
    import csv

    draws = result.distribution.draws
    if draws is None:
        raise ValueError("no raw draws kept; run with keep_draws=True")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "horizon", "series", "value"])
        B, H1, m = draws.shape
        for b in range(B):
            for h in range(H1):
                for j in range(m):
                    writer.writerow(
                        [b, h, result.series_labels[j], repr(float(draws[b, h, j]))]
                    )
