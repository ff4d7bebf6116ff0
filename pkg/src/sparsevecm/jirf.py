"""Vector moving-average form and joint impulse response functions.

A stable VAR rewrites as ``Y_t = c~ + sum_H A_H eps_{t-H}`` with ``A_0 = I``
and ``A_H = sum_{j<=min(H,p)} Phi_j A_{H-j}``. The joint impulse response
to a simultaneous shock ``s`` on a subset of series picked by the 0/1
selector matrix ``e`` is

    response(H) = A_H  Sigma e (e' Sigma e)^{-1} s

which propagates the shock through the reduced-form error covariance
without any structural identification, generalizing the single-shock
generalized impulse response of Koop, Pesaran & Potter (1996) / Pesaran &
Shin (1998) to joint shocks. Responses are deviations from baseline, so
the moving-average constant is never needed and is not computed.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .panel import PricePanel
from .varnet import VarFit

__all__ = [
    "VmaForm",
    "ShockScenario",
    "JirfResult",
    "to_vma",
    "build_shock",
    "compute_jirf",
]

# Shock sub-covariance condition-number ceiling before the inversion is
# declared degenerate.
_COND_LIMIT = 1e12

SHOCK_SOURCES = ("series-std", "residual-std", "user")


@dataclass
class VmaForm:
    """Moving-average coefficients ``A_0 .. A_Hmax`` of a fitted VAR."""

    coefs: list[np.ndarray]
    fit: VarFit | None = None

    @property
    def horizon(self) -> int:
        return len(self.coefs) - 1

    @property
    def m(self) -> int:
        return self.coefs[0].shape[0]

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "coefs": [A.tolist() for A in self.coefs]}

    @classmethod
    def from_dict(cls, d: dict) -> "VmaForm":
        return cls(coefs=[np.array(A, dtype=float) for A in d["coefs"]])

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "VmaForm":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def to_vma(fit: VarFit, horizon: int) -> VmaForm:
    """Run the moving-average recursion out to ``horizon``."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    m = fit.m
    coefs = [np.eye(m)]
    for H in range(1, horizon + 1):
        A = np.zeros((m, m))
        for j in range(1, min(H, fit.p) + 1):
            A += fit.lag_coefs[j - 1] @ coefs[H - j]
        coefs.append(A)
    return VmaForm(coefs=coefs, fit=fit)


@dataclass(frozen=True)
class ShockScenario:
    """Which series get shocked, by how much, and out to what horizon."""

    series_ids: tuple[str, ...]
    indices: tuple[int, ...]
    magnitudes: tuple[float, ...]
    source: str
    horizon: int
    period: str | None = None

    def __post_init__(self) -> None:
        if not self.series_ids:
            raise ValueError("shock scenario needs at least one series")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("shocked series must be distinct")
        if len(self.magnitudes) != len(self.series_ids):
            raise ValueError("one magnitude per shocked series")
        if self.source not in SHOCK_SOURCES:
            raise ValueError(f"source must be one of {SHOCK_SOURCES}")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    def selector(self, m: int) -> np.ndarray:
        """0/1 matrix (m x k) with one 1 per column picking the shocked series."""
        e = np.zeros((m, len(self.indices)))
        for col, idx in enumerate(self.indices):
            e[idx, col] = 1.0
        return e

    def with_magnitudes(self, magnitudes: Sequence[float]) -> "ShockScenario":
        return replace(self, magnitudes=tuple(float(x) for x in magnitudes))

    def to_dict(self) -> dict:
        return {
            "series": list(self.series_ids),
            "magnitudes": list(self.magnitudes),
            "source": self.source,
            "horizon": self.horizon,
            "period": self.period,
        }


def _resolve_indices(labels: list[str], series: Sequence[str]) -> tuple[int, ...]:
    indices = []
    for s in series:
        if s not in labels:
            raise KeyError(f"unknown series {s!r}")
        indices.append(labels.index(s))
    return tuple(indices)


def build_shock(
    series: Sequence[str],
    *,
    panel: PricePanel | None = None,
    fit: VarFit | None = None,
    source: str = "series-std",
    period: str | None = None,
    magnitudes: Sequence[float] | None = None,
    horizon: int = 8,
) -> ShockScenario:
    """Construct a shock scenario with one-standard-deviation defaults.

    ``series-std`` sizes each shock as the population standard deviation
    (divide by T, not T-1) of that log series over ``period`` (or the whole
    panel); ``residual-std`` uses the square root of the fitted residual
    covariance diagonal; ``user`` takes ``magnitudes`` verbatim.
    """
    if not series:
        raise ValueError("shock scenario needs at least one series")
    if source not in SHOCK_SOURCES:
        raise ValueError(f"source must be one of {SHOCK_SOURCES}")

    if source == "user":
        if magnitudes is None or len(magnitudes) != len(series):
            raise ValueError("user source needs one magnitude per series")
        ref = panel or fit
        if ref is None:
            raise ValueError("need a panel or fit to resolve series identifiers")
        labels = ref.labels
        indices = _resolve_indices(labels, series)
        mags = tuple(float(x) for x in magnitudes)
    elif source == "series-std":
        if panel is None:
            raise ValueError("series-std shocks need the panel")
        labels = panel.labels
        indices = _resolve_indices(labels, series)
        a, b = panel.period_rows(period) if period else (0, panel.n_weeks)
        mags = []
        for s, idx in zip(series, indices):
            col = panel.values[a:b, idx]
            sd = float(np.sqrt(np.mean((col - col.mean()) ** 2)))
            if sd == 0.0:
                warnings.warn(f"series {s} has zero variance; shock set to 0")
            mags.append(sd)
        mags = tuple(mags)
    else:  # residual-std
        if fit is None:
            raise ValueError("residual-std shocks need the fitted VAR")
        labels = fit.labels
        indices = _resolve_indices(labels, series)
        mags = []
        for s, idx in zip(series, indices):
            var = float(fit.sigma[idx, idx])
            if var <= 0.0:
                warnings.warn(f"series {s} has zero residual variance; shock set to 0")
                mags.append(0.0)
            else:
                mags.append(float(np.sqrt(var)))
        mags = tuple(mags)

    return ShockScenario(
        series_ids=tuple(series),
        indices=indices,
        magnitudes=mags,
        source=source,
        horizon=horizon,
        period=period,
    )


@dataclass
class JirfResult:
    """Responses of every series at horizons ``0..H`` to one joint shock."""

    responses: np.ndarray  # (H+1, m)
    scenario: ShockScenario
    series_labels: list[str]
    distribution: "object | None" = None  # JirfDistribution when bootstrapped

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(self.responses.shape[0])

    def to_dict(self) -> dict:
        d = {
            "scenario": self.scenario.to_dict(),
            "horizons": self.horizons.tolist(),
            "series": list(self.series_labels),
            # horizon-major, matching the CSV orientation ...
            "responses": self.responses.tolist(),
            # ... plus the same numbers keyed per series
            "by_series": {
                label: self.responses[:, j].tolist()
                for j, label in enumerate(self.series_labels)
            },
        }
        if self.distribution is not None:
            d["bootstrap"] = self.distribution.to_dict()
        return d

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path: str | Path) -> None:
        """Rows are horizons, columns are series."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["horizon"] + list(self.series_labels))
            for h in range(self.responses.shape[0]):
                writer.writerow([h] + [repr(float(v)) for v in self.responses[h]])


def compute_jirf(
    vma: VmaForm, sigma: np.ndarray, scenario: ShockScenario
) -> JirfResult:
    """Evaluate the joint impulse response at every horizon in the scenario.

    ``sigma`` must be the symmetric PSD residual covariance of the fit the
    moving-average form came from. Raises when the shocked sub-covariance
    ``e' Sigma e`` is too ill-conditioned to invert meaningfully.
    """
    sigma = np.asarray(sigma, dtype=float)
    m = vma.m
    if sigma.shape != (m, m):
        raise ValueError("covariance shape does not match the moving-average form")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise ValueError("covariance must be symmetric")
    if scenario.horizon > vma.horizon:
        raise ValueError(
            f"scenario horizon {scenario.horizon} exceeds the moving-average "
            f"horizon {vma.horizon}"
        )
    if max(scenario.indices) >= m:
        raise ValueError("scenario indexes series beyond the fitted system")

    e = scenario.selector(m)
    s = np.asarray(scenario.magnitudes, dtype=float)
    if len(scenario.indices) == m:
        # Full selector: e is a permutation, so Sigma e (e'Sigma e)^{-1}
        # collapses to e and the impact response is the shock itself, exactly
        # (no inversion happens, so a singular covariance is fine here).
        base = e @ s
    else:
        sub = e.T @ sigma @ e
        if np.linalg.cond(sub) > _COND_LIMIT:
            raise ValueError(
                f"degenerate shock sub-covariance for series {list(scenario.series_ids)}"
            )
        base = sigma @ e @ np.linalg.solve(sub, s)
    responses = np.empty((scenario.horizon + 1, m))
    for H in range(scenario.horizon + 1):
        responses[H] = vma.coefs[H] @ base
    labels = vma.fit.labels if vma.fit is not None else [f"y{j}" for j in range(m)]
    return JirfResult(responses=responses, scenario=scenario, series_labels=labels)
