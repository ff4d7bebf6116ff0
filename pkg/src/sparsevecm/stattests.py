"""Unit-root, structural-break, and pairwise cointegration tests.

These tests gate the modeling pipeline: augmented Dickey-Fuller (ADF) on
each series, the Maddala-Wu (1999) Fisher combination for the panel, Chow
F-tests at candidate break dates, and Engle-Granger (1987) two-step
cointegration for region pairs within a commodity.

ADF p-values use the MacKinnon response-surface approximation: the test
statistic is mapped through a cubic (or quadratic) polynomial whose value
is read off the standard normal CDF. The polynomial coefficients below are
the published MacKinnon (1994, 2010) tables, embedded verbatim so results
are reproducible without an external dependency; row ``N`` covers a
cointegrating regression with ``N`` variables (``N = 1`` is the plain unit
root test).

References
----------
MacKinnon, J.G. (1994). Approximate asymptotic distribution functions for
    unit-root and cointegration tests. J. Business & Economic Statistics 12.
MacKinnon, J.G. (2010). Critical values for cointegration tests. Queen's
    Economics Dept. WP 1227.
Maddala, G.S. & Wu, S. (1999). A comparative study of unit root tests with
    panel data. Oxford Bulletin of Economics and Statistics 61.
Engle, R.F. & Granger, C.W.J. (1987). Co-integration and error correction.
    Econometrica 55.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .panel import PricePanel

__all__ = [
    "AdfResult",
    "PanelUnitRootResult",
    "ChowResult",
    "CointegrationResult",
    "adf_test",
    "fisher_combination",
    "panel_unit_root",
    "chow_test",
    "pairwise_cointegration",
    "mackinnon_pvalue",
]

# MacKinnon response-surface tables. tau-star separates the small-p and
# large-p polynomial regimes; below tau-min the p-value saturates at 0,
# above tau-max at 1. Rows are N = 1..6.
_TAU_STAR = {
    "nc": [-1.04, -1.53, -2.68, -3.09, -3.07, -3.77],
    "c": [-1.61, -2.62, -3.13, -3.47, -3.78, -3.93],
    "ct": [-2.89, -3.19, -3.50, -3.65, -3.80, -4.36],
}
_TAU_MIN = {
    "nc": [-19.04, -19.62, -21.21, -23.25, -21.63, -25.74],
    "c": [-18.83, -18.86, -23.48, -28.07, -25.96, -23.27],
    "ct": [-16.18, -21.15, -25.37, -26.63, -26.53, -26.18],
}
_TAU_MAX = {
    "nc": [math.inf, 1.51, 0.86, 0.88, 1.05, 1.24],
    "c": [2.74, 0.92, 0.55, 0.61, 0.79, 1.0],
    "ct": [0.70, 0.63, 0.71, 0.93, 1.19, 1.42],
}
# p = Phi(c0 + c1*tau + c2*tau^2) in the far left tail (tau <= tau-star) ...
_TAU_SMALLP = {
    "nc": [
        [0.6344, 1.2378, 0.032496],
        [1.9129, 1.3857, 0.035322],
        [2.7648, 1.4502, 0.034186],
        [3.4336, 1.4835, 0.031900],
        [4.0999, 1.5533, 0.035900],
        [4.5388, 1.5344, 0.029807],
    ],
    "c": [
        [2.1659, 1.4412, 0.038269],
        [2.9200, 1.5012, 0.039796],
        [3.4699, 1.4856, 0.031640],
        [3.9673, 1.4777, 0.026315],
        [4.5509, 1.5338, 0.029545],
        [5.1399, 1.6036, 0.034445],
    ],
    "ct": [
        [3.2512, 1.6047, 0.049588],
        [3.6646, 1.5419, 0.036448],
        [4.0983, 1.5173, 0.029898],
        [4.5844, 1.5338, 0.028796],
        [5.0722, 1.5634, 0.029472],
        [5.5300, 1.5914, 0.030392],
    ],
}
# ... and p = Phi(c0 + c1*tau + c2*tau^2 + c3*tau^3) toward the body.
_TAU_LARGEP = {
    "nc": [
        [0.4797, 0.93557, -0.06999, 0.033066],
        [1.5578, 0.85580, -0.20830, -0.033549],
        [2.2268, 0.68093, -0.32362, -0.054448],
        [2.7654, 0.64502, -0.30811, -0.044946],
        [3.2684, 0.68051, -0.26778, -0.034972],
        [3.7268, 0.71670, -0.23648, -0.028288],
    ],
    "c": [
        [1.7339, 0.93202, -0.12745, -0.010368],
        [2.1945, 0.64695, -0.29198, -0.042377],
        [2.5893, 0.45168, -0.36529, -0.050074],
        [3.0387, 0.45452, -0.33666, -0.041921],
        [3.5049, 0.52098, -0.29158, -0.033468],
        [3.9489, 0.58933, -0.25359, -0.027210],
    ],
    "ct": [
        [2.5261, 0.61654, -0.37956, -0.060285],
        [2.8500, 0.52720, -0.36622, -0.051695],
        [3.2210, 0.52550, -0.32685, -0.041501],
        [3.6520, 0.59758, -0.27483, -0.032081],
        [4.0712, 0.66428, -0.23464, -0.025460],
        [4.4735, 0.71757, -0.20681, -0.021196],
    ],
}

_SPECS = ("nc", "c", "ct")


def mackinnon_pvalue(statistic: float, spec: str = "c", n_series: int = 1) -> float:
    """Approximate p-value of a (co)integration tau statistic.

    ``n_series`` is the number of variables in the cointegrating regression;
    use 1 for a univariate unit-root test and 2 for Engle-Granger residuals
    from a bivariate regression with a constant.
    """
    if spec not in _SPECS:
        raise ValueError(f"spec must be one of {_SPECS}")
    if not 1 <= n_series <= 6:
        raise ValueError("n_series must be between 1 and 6")
    row = n_series - 1
    if statistic > _TAU_MAX[spec][row]:
        return 1.0
    if statistic < _TAU_MIN[spec][row]:
        return 0.0
    if statistic <= _TAU_STAR[spec][row]:
        coefs = _TAU_SMALLP[spec][row]
    else:
        coefs = _TAU_LARGEP[spec][row]
    poly = 0.0
    for c in reversed(coefs):
        poly = poly * statistic + c
    return float(stats.norm.cdf(poly))


@dataclass(frozen=True)
class AdfResult:
    """Augmented Dickey-Fuller outcome for one series."""

    statistic: float
    lags: int
    pvalue: float
    spec: str


@dataclass(frozen=True)
class PanelUnitRootResult:
    """Maddala-Wu Fisher combination of per-series ADF p-values."""

    statistic: float
    df: int
    pvalue: float
    per_series: tuple[AdfResult, ...]


def _ols(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least squares fit returning (coefficients, residuals, SSR)."""
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    return beta, resid, float(resid @ resid)


def _adf_design(y: np.ndarray, lags: int, spec: str) -> tuple[np.ndarray, np.ndarray]:
    """Regression pieces for dy_t on y_{t-1}, lagged dy, and deterministics.

    The level term is the first column so its t-statistic is easy to pull
    out after the fit.
    """
    dy = np.diff(y)
    n = dy.size - lags
    cols = [y[lags:-1]]
    for k in range(1, lags + 1):
        cols.append(dy[lags - k : dy.size - k])
    if spec in ("c", "ct"):
        cols.append(np.ones(n))
    if spec == "ct":
        cols.append(np.arange(1.0, n + 1))
    X = np.column_stack(cols)
    return X, dy[lags:]


def adf_test(series: np.ndarray, spec: str = "c", max_lag: int | None = None) -> AdfResult:
    """ADF unit-root test with AIC lag selection.

    The lag order is chosen over ``0..max_lag`` by Akaike's criterion on a
    common estimation sample (all candidates lose ``max_lag`` leading
    observations), then the test regression is re-run at the chosen lag on
    its full usable sample. ``max_lag`` defaults to the Schwert rule
    ``12 * (n/100)^0.25``.
    """
    y = np.asarray(series, dtype=float).ravel()
    if spec not in _SPECS:
        raise ValueError(f"spec must be one of {_SPECS}")
    n = y.size
    if max_lag is None:
        max_lag = min(int(math.ceil(12.0 * (n / 100.0) ** 0.25)), n // 2 - 2)
    if n <= max_lag + 10:
        raise ValueError(f"series too short for ADF: need more than {max_lag + 10} points")
    if np.std(y) == 0:
        raise ValueError("zero variance series")

    # IC comparison uses the sample trimmed for the largest candidate.
    best_lag, best_aic = 0, math.inf
    dy = np.diff(y)
    common = dy.size - max_lag
    for k in range(max_lag + 1):
        X, z = _adf_design(y, k, spec)
        X, z = X[-common:], z[-common:]
        _, _, ssr = _ols(X, z)
        nobs, nparam = z.size, X.shape[1]
        aic = nobs * math.log(max(ssr, 1e-300) / nobs) + 2 * nparam
        if aic < best_aic:
            best_aic, best_lag = aic, k

    X, z = _adf_design(y, best_lag, spec)
    beta, resid, ssr = _ols(X, z)
    nobs, nparam = z.size, X.shape[1]
    sigma2 = ssr / (nobs - nparam)
    # [(X'X)^+]_00 as the squared norm of the first pseudo-inverse row:
    # nonnegative even when the design is (near-)rank-deficient.
    var00 = sigma2 * float(np.sum(np.linalg.pinv(X)[0] ** 2))
    if var00 <= 0.0 or not math.isfinite(var00):
        # perfectly deterministic series: no stochastic trend to test
        stat = 0.0
    else:
        stat = float(beta[0] / math.sqrt(var00))
    return AdfResult(
        statistic=stat,
        lags=best_lag,
        pvalue=mackinnon_pvalue(stat, spec=spec, n_series=1),
        spec=spec,
    )


def fisher_combination(pvalues: Sequence[float]) -> tuple[float, int, float]:
    """Fisher's combination ``-2 sum(log p_i)`` against chi-square(2N)."""
    pvalues = list(pvalues)
    if len(pvalues) < 2:
        raise ValueError("need at least 2 p-values to combine")
    with np.errstate(divide="ignore"):
        statistic = float(-2.0 * np.sum(np.log(pvalues)))
    df = 2 * len(pvalues)
    return statistic, df, float(stats.chi2.sf(statistic, df))


def panel_unit_root(
    panel: PricePanel | np.ndarray,
    spec: str = "c",
    max_lag: int | None = None,
) -> PanelUnitRootResult:
    """Maddala-Wu panel unit-root test.

    Runs an ADF on every column and combines the p-values through the
    Fisher statistic ``-2 * sum(log p_i)``, referred to a chi-square with
    ``2N`` degrees of freedom.
    """
    if isinstance(panel, PricePanel):
        values = panel.values
        names = panel.labels
    else:
        values = np.asarray(panel, dtype=float)
        names = [f"col{j}" for j in range(values.shape[1])]
    if values.shape[1] < 2:
        raise ValueError("panel unit-root test needs at least 2 series")
    results: list[AdfResult] = []
    for j in range(values.shape[1]):
        try:
            results.append(adf_test(values[:, j], spec=spec, max_lag=max_lag))
        except ValueError as exc:
            raise ValueError(f"ADF failed for series {names[j]}: {exc}") from exc
    statistic, df, pvalue = fisher_combination([r.pvalue for r in results])
    return PanelUnitRootResult(
        statistic=statistic, df=df, pvalue=pvalue, per_series=tuple(results)
    )


@dataclass(frozen=True)
class EquationChow:
    series: str
    f_statistic: float
    df_num: int
    df_den: int
    pvalue: float


@dataclass(frozen=True)
class ChowResult:
    """Known-break Chow test on the levels VAR regression."""

    break_index: int
    f_statistic: float
    df_num: int
    df_den: int
    pvalue: float
    per_equation: tuple[EquationChow, ...]


def _var_regression_rows(values: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack VAR(p) regression rows: LHS Y_t, RHS [1, Y_{t-1}, ..., Y_{t-p}]."""
    T, m = values.shape
    X = np.column_stack(
        [np.ones(T - p)] + [values[p - k : T - k] for k in range(1, p + 1)]
    )
    return X, values[p:]


def chow_test(panel: PricePanel | np.ndarray, break_index: int, p: int) -> ChowResult:
    """Chow F-test for a structural break at a known row.

    Each equation of the levels VAR(p) is fit on the pooled sample and on
    the two sub-samples split at ``break_index``; the usual SSR-based F is
    reported per equation. The system statistic pools numerator and
    denominator sums of squares across equations, with degrees of freedom
    scaled by the equation count (an approximation: equations are
    contemporaneously correlated).
    """
    if isinstance(panel, PricePanel):
        values = panel.values
        names = panel.labels
    else:
        values = np.asarray(panel, dtype=float)
        names = [f"col{j}" for j in range(values.shape[1])]
    T, m = values.shape
    k = m * p + 1
    min_len = m * p + 10
    for label, length in (("pre-break", break_index), ("post-break", T - break_index)):
        if length <= min_len:
            raise ValueError(
                f"{label} sub-sample has {length} rows; needs more than {min_len} (= m*p + 10)"
            )

    X_all, Y_all = _var_regression_rows(values, p)
    X_1, Y_1 = _var_regression_rows(values[:break_index], p)
    X_2, Y_2 = _var_regression_rows(values[break_index:], p)
    n1, n2 = Y_1.shape[0], Y_2.shape[0]
    # Pooled fit on the same rows the split fits use, so SSRs nest.
    X_pool = np.vstack([X_1, X_2])
    Y_pool = np.vstack([Y_1, Y_2])

    df_num, df_den = k, n1 + n2 - 2 * k
    if df_den <= 0:
        raise ValueError("sub-samples too short for the Chow regression")

    per_eq: list[EquationChow] = []
    num_sum = 0.0
    den_sum = 0.0
    # Perfect (noiseless) fits leave SSRs at rounding level; treat their
    # 0/0 ratio as "no break" rather than garbage.
    guard = 1e-12 * max(float(np.sum((Y_pool - Y_pool.mean(axis=0)) ** 2)), 1.0)
    for i in range(m):
        _, _, ssr_pool = _ols(X_pool, Y_pool[:, i])
        _, _, ssr_1 = _ols(X_1, Y_1[:, i])
        _, _, ssr_2 = _ols(X_2, Y_2[:, i])
        ssr_split = ssr_1 + ssr_2
        num = max(ssr_pool - ssr_split, 0.0)
        num_sum += num
        den_sum += ssr_split
        if ssr_split <= guard:
            f_i = 0.0
        else:
            f_i = (num / df_num) / (ssr_split / df_den)
        per_eq.append(
            EquationChow(
                series=names[i],
                f_statistic=f_i,
                df_num=df_num,
                df_den=df_den,
                pvalue=float(stats.f.sf(f_i, df_num, df_den)) if f_i > 0 else 1.0,
            )
        )

    if den_sum <= guard:
        f_sys = 0.0
    else:
        f_sys = (num_sum / (m * df_num)) / (den_sum / (m * df_den))
    return ChowResult(
        break_index=break_index,
        f_statistic=float(f_sys),
        df_num=m * df_num,
        df_den=m * df_den,
        pvalue=float(stats.f.sf(f_sys, m * df_num, m * df_den)) if f_sys > 0 else 1.0,
        per_equation=tuple(per_eq),
    )


@dataclass(frozen=True)
class CointegrationResult:
    """Pairwise Engle-Granger outcomes for one commodity."""

    commodity: str
    period: str | None
    regions: tuple[str, ...]
    cointegrated: np.ndarray  # (R, R) bool, symmetric, False diagonal
    pvalues: np.ndarray  # (R, R) float, NaN diagonal
    count: int
    alpha: float


def pairwise_cointegration(
    panel: PricePanel,
    commodity: str,
    period: str | None = None,
    max_lag: int | None = None,
    alpha: float = 0.05,
) -> CointegrationResult:
    """Engle-Granger two-step test for every unordered region pair.

    For each pair, the lexicographically first region's series is regressed
    on the other plus a constant, and the residuals get an ADF with no
    deterministic terms. The p-value uses the two-variable MacKinnon
    response surface (the Engle-Granger tables), and a pair counts as
    cointegrated when it falls below ``alpha``.
    """
    if commodity not in panel.commodities:
        raise ValueError(f"unknown commodity {commodity!r}")
    rows = panel.period_rows(period) if period else (0, panel.n_weeks)
    a, b = rows
    regions = panel.regions
    R = len(regions)
    if R < 2:
        raise ValueError("need at least 2 regions for pairwise cointegration")
    cols = {r: panel.column(commodity, r) for r in regions}

    flags = np.zeros((R, R), dtype=bool)
    pvals = np.full((R, R), np.nan)
    count = 0
    for i in range(R):
        for j in range(i + 1, R):
            first, second = sorted([regions[i], regions[j]])
            y = panel.values[a:b, cols[first]]
            x = panel.values[a:b, cols[second]]
            X = np.column_stack([np.ones(y.size), x])
            _, resid, _ = _ols(X, y)
            try:
                adf = adf_test(resid, spec="nc", max_lag=max_lag)
            except ValueError as exc:
                raise ValueError(
                    f"cointegration ADF failed for pair ({first}, {second}): {exc}"
                ) from exc
            pv = mackinnon_pvalue(adf.statistic, spec="c", n_series=2)
            pvals[i, j] = pvals[j, i] = pv
            if pv < alpha:
                flags[i, j] = flags[j, i] = True
                count += 1
    return CointegrationResult(
        commodity=commodity,
        period=period,
        regions=tuple(regions),
        cointegrated=flags,
        pvalues=pvals,
        count=count,
        alpha=alpha,
    )
