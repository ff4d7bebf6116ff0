"""Error-correction view of a fitted levels VAR, plus effective rank.

The VAR ``Y_t = c + sum_k Phi_k Y_{t-k} + eps_t`` rewrites in differences
as ``dY_t = c + P Y_{t-1} + sum_i G_i dY_{t-i} + eps_t`` with the long-run
matrix ``P = sum_k Phi_k - I`` and short-run matrices
``G_i = -sum_{j>i} Phi_j``. Both directions are exact algebra, so no
re-estimation happens here.

Cointegration evidence comes from the effective rank of the long-run
matrix (Roy & Vetterli 2007): the exponential of the Shannon entropy of
the L1-normalized singular values. It is continuous, threshold-free,
scale-invariant, and needs no distributional assumptions, which makes it
usable where likelihood-ratio rank tests break down.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .varnet import VarFit

__all__ = [
    "VecmView",
    "EffectiveRankReport",
    "to_vecm",
    "levels_from_vecm",
    "effective_rank",
    "rank_report",
    "render_rank_table",
]

# Singular values below this fraction of the largest are treated as exact
# zeros in the entropy (0 * log 0 := 0).
_SV_FLOOR = 1e-14
# Heuristic margin for the reduced-rank screen flags.
RANK_FLAG_TOL = 0.5


@dataclass
class VecmView:
    """Long-run / short-run decomposition of a fitted VAR."""

    long_run: np.ndarray  # (m, m)
    short_run: list[np.ndarray]  # p-1 matrices, each (m, m)
    intercept: np.ndarray
    fit: VarFit

    @property
    def m(self) -> int:
        return self.long_run.shape[0]

    def to_dict(self) -> dict:
        return {
            "long_run": self.long_run.tolist(),
            "short_run": [G.tolist() for G in self.short_run],
            "intercept": self.intercept.tolist(),
            "series": [[c, r] for c, r in self.fit.series],
            "p": self.fit.p,
        }


def to_vecm(fit: VarFit) -> VecmView:
    """Derive the error-correction matrices from the level coefficients."""
    m = fit.m
    long_run = sum(fit.lag_coefs) - np.eye(m)
    short_run = [
        -sum(fit.lag_coefs[j] for j in range(i + 1, fit.p))
        for i in range(fit.p - 1)
    ]
    return VecmView(
        long_run=np.asarray(long_run),
        short_run=[np.asarray(G) for G in short_run],
        intercept=fit.intercept.copy(),
        fit=fit,
    )


def levels_from_vecm(view: VecmView) -> list[np.ndarray]:
    """Invert :func:`to_vecm`: recover ``Phi_1 .. Phi_p`` exactly."""
    m = view.m
    p = len(view.short_run) + 1
    if p == 1:
        return [view.long_run + np.eye(m)]
    phis = [view.long_run + np.eye(m) + view.short_run[0]]
    for k in range(2, p):
        phis.append(view.short_run[k - 1] - view.short_run[k - 2])
    phis.append(-view.short_run[p - 2])
    return phis


@dataclass(frozen=True)
class EffectiveRankReport:
    """Spectrum-entropy rank measure of one matrix."""

    singular_values: np.ndarray  # descending
    weights: np.ndarray  # sigma_k / ||sigma||_1
    erank: float
    matrix_label: str
    period_label: str

    @property
    def m(self) -> int:
        return self.singular_values.size

    def flags(self, tol: float = RANK_FLAG_TOL) -> dict[str, bool]:
        """Reduced-rank screen: nontrivial structure and genuine reduction.

        ``has_structure`` is evidence against a zero long-run matrix;
        ``is_reduced`` is evidence the matrix is not full rank. The margin
        is a documented heuristic, not a formal test.
        """
        return {
            "has_structure": self.erank > 1.0 + tol,
            "is_reduced": self.erank < self.m - tol,
        }

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix_label,
            "period": self.period_label,
            "erank": self.erank,
            "singular_values": self.singular_values.tolist(),
            "weights": self.weights.tolist(),
            "flags": self.flags(),
        }


def effective_rank(
    matrix: np.ndarray, matrix_label: str = "", period_label: str = ""
) -> EffectiveRankReport:
    """Effective rank: exp of the Shannon entropy of normalized singular values."""
    A = np.asarray(matrix, dtype=float)
    if not np.any(A):
        raise ValueError("effective rank undefined for zero matrix")
    sv = np.linalg.svd(A, compute_uv=False)
    sv = np.where(sv < _SV_FLOOR * sv[0], 0.0, sv)
    weights = sv / sv.sum()
    nz = weights > 0
    entropy = -float(np.sum(weights[nz] * np.log(weights[nz])))
    return EffectiveRankReport(
        singular_values=sv,
        weights=weights,
        erank=float(np.exp(entropy)),
        matrix_label=matrix_label,
        period_label=period_label,
    )


def rank_report(
    full_system: dict[str, VecmView],
    by_commodity: dict[tuple[str, str], VecmView] | None = None,
) -> dict:
    """Effective ranks of the long-run matrix per period and sub-system.

    ``full_system`` maps period name to the full fit's VECM view;
    ``by_commodity`` maps (commodity, period) to a commodity-only sub-fit.
    Returns a dict with one row per commodity, a per-period sum row, and
    the full-system row.
    """
    periods = list(full_system)
    by_commodity = by_commodity or {}
    commodities = sorted({c for c, _ in by_commodity})
    rows: dict[str, dict[str, float]] = {}
    for c in commodities:
        rows[c] = {}
        for period in periods:
            view = by_commodity.get((c, period))
            if view is None:
                raise ValueError(f"missing sub-fit for commodity {c!r}, period {period!r}")
            rows[c][period] = effective_rank(view.long_run, "long_run", period).erank
    report: dict = {"periods": periods, "commodities": rows}
    if commodities:
        report["sum"] = {
            period: float(sum(rows[c][period] for c in commodities)) for period in periods
        }
    report["full_system"] = {
        period: effective_rank(view.long_run, "long_run", period).erank
        for period, view in full_system.items()
    }
    return report


def render_rank_table(report: dict) -> str:
    """Plain-text table of a :func:`rank_report` result."""
    periods = report["periods"]
    width = max([12] + [len(c) for c in report["commodities"]]) + 2
    header = "".ljust(width) + "".join(p.rjust(10) for p in periods)
    lines = [header, "-" * len(header)]
    for c, vals in report["commodities"].items():
        lines.append(c.ljust(width) + "".join(f"{vals[p]:10.2f}" for p in periods))
    if "sum" in report:
        lines.append("-" * len(header))
        lines.append("Sum".ljust(width) + "".join(f"{report['sum'][p]:10.2f}" for p in periods))
    lines.append("-" * len(header))
    lines.append(
        "Full system".ljust(width)
        + "".join(f"{report['full_system'][p]:10.2f}" for p in periods)
    )
    return "\n".join(lines) + "\n"
