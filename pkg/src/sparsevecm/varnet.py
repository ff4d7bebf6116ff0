"""Elastic-net penalized least squares estimation of a levels VAR(p).

The model is ``Y_t = c + Phi_1 Y_{t-1} + ... + Phi_p Y_{t-p} + eps_t`` and
the full parameter block ``Theta = [c Phi_1 ... Phi_p]`` is estimated by
minimizing

    sum_t ||eps_t||^2  +  lam * [ (1 - gamma) * ||Theta||_F^2
                                  + gamma * ||vec(Theta)||_1 ]

with the intercept column excluded from both penalty terms. The objective
decomposes over equations, so each row of Theta is solved independently by
cyclic coordinate descent with soft-thresholding.

Scaling conventions (these pin down every closed-form oracle):

* The squared error carries no 1/(2n) factor; the penalty multiplies the
  raw sum of squares.
* Predictors are z-scored internally (population std); responses are only
  centered. Coefficients are reported back on the data's original scale
  and the intercept is recovered from the centering identities.
* With a single standardized predictor (so x'x = n) the gamma = 1 slope is
  ``soft(x'y, lam/2) / n``, i.e. the OLS slope soft-thresholded at
  ``lam / (2n)``; the gamma = 0 slope is the ridge solution
  ``(x'x + lam)^{-1} x'y`` (the ridge parameter equals lam itself).
* ``lam_max``, the smallest lambda that zeroes every slope at gamma = 1,
  is ``2 * max |Z'y_c|`` over standardized predictors Z and centered
  responses.

Lambda/gamma are tuned by rolling-origin (expanding window) cross
validation on one-step-ahead mean squared forecast error: random K-fold
splits would leak future information in a time series.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .panel import PricePanel

__all__ = [
    "ElasticNetConfig",
    "VarFit",
    "CvResult",
    "ConvergenceError",
    "fit_var",
    "cross_validate",
    "select_lag",
    "lambda_max",
]

GAMMA_GRID_DEFAULT = (0.1, 0.5, 0.9)
# Light penalty used when comparing lag orders: enough regularization to
# keep T < m*p feasible without materially biasing the residual scale.
LAG_SELECTION_LAMBDA_SCALE = 1e-3


class ConvergenceError(RuntimeError):
    """Coordinate descent hit the sweep limit before reaching tolerance."""


@dataclass
class ElasticNetConfig:
    """Tuning and solver settings for the penalized VAR fit.

    ``lambda_grid=None`` auto-generates ``n_lambdas`` log-spaced values
    from ``lam_max`` down to ``lambda_min_ratio * lam_max`` on the full
    sample. ``cv_initial_window``/``cv_step`` default to half the sample
    and an even split of the remainder across folds.
    """

    lambda_grid: Sequence[float] | None = None
    gamma_grid: Sequence[float] = GAMMA_GRID_DEFAULT
    cv_folds: int = 5
    cv_initial_window: int | None = None
    cv_step: int | None = None
    tol: float = 1e-7
    max_sweeps: int = 10_000
    standardize: bool = True
    penalize_intercept: bool = False  # kept for the record; never enabled
    n_lambdas: int = 50
    lambda_min_ratio: float = 1e-4

    def validate(self) -> None:
        if self.lambda_grid is not None:
            lams = list(self.lambda_grid)
            if not lams or any(l <= 0 for l in lams):
                raise ValueError("lambda grid must be nonempty and positive")
            if sorted(lams, reverse=True) != lams:
                raise ValueError("lambda grid must be sorted descending")
        if not self.gamma_grid or any(not 0 <= g <= 1 for g in self.gamma_grid):
            raise ValueError("gamma grid values must lie in [0, 1]")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.penalize_intercept:
            raise ValueError("penalizing the intercept is not supported")


@dataclass
class VarFit:
    """A fitted levels VAR(p).

    ``lag_coefs[k][i, j]`` is the effect of series ``j`` at lag ``k+1`` on
    series ``i``. ``residuals`` has one row per usable time point
    (``T - p`` rows) and satisfies the reconstruction identity
    ``eps_t = Y_t - c - sum_k Phi_k Y_{t-k}`` exactly. ``sigma`` is
    ``residuals' residuals / (T - p)``.
    """

    p: int
    intercept: np.ndarray
    lag_coefs: list[np.ndarray]
    residuals: np.ndarray
    sigma: np.ndarray
    lam: float
    gamma: float
    series: list[tuple[str, str]]
    cv_table: list[dict] | None = None
    sweeps: int = 0
    objective_path: list[float] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.intercept.size

    @property
    def theta(self) -> np.ndarray:
        """Stacked parameter block ``[c Phi_1 ... Phi_p]``, shape (m, mp+1)."""
        return np.hstack([self.intercept[:, None]] + [Phi for Phi in self.lag_coefs])

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.theta))

    @property
    def labels(self) -> list[str]:
        return [f"{c}.{r}" for c, r in self.series]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "series": [[c, r] for c, r in self.series],
            "lam": self.lam,
            "gamma": self.gamma,
            "intercept": self.intercept.tolist(),
            # row-major (m, m) arrays: entry [i][j] = effect of series j on
            # equation i at that lag
            "lag_coefs": [Phi.tolist() for Phi in self.lag_coefs],
            "residuals": self.residuals.tolist(),
            "sigma": self.sigma.tolist(),
            "cv_table": self.cv_table,
            "sweeps": self.sweeps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VarFit":
        return cls(
            p=d["p"],
            intercept=np.array(d["intercept"], dtype=float),
            lag_coefs=[np.array(Phi, dtype=float) for Phi in d["lag_coefs"]],
            residuals=np.array(d["residuals"], dtype=float),
            sigma=np.array(d["sigma"], dtype=float),
            lam=d["lam"],
            gamma=d["gamma"],
            series=[tuple(s) for s in d["series"]],
            cv_table=d.get("cv_table"),
            sweeps=d.get("sweeps", 0),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "VarFit":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class CvResult:
    lam: float
    gamma: float
    table: list[dict]


def _lag_design(Y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Build regression pieces: rows t = p..T-1, X_t = [Y_{t-1} ... Y_{t-p}]."""
    T = Y.shape[0]
    X = np.hstack([Y[p - k : T - k] for k in range(1, p + 1)])
    return X, Y[p:]


def _standardize(X: np.ndarray, scale: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Center and optionally z-score columns; constant columns are zeroed."""
    xm = X.mean(axis=0)
    xs = X.std(axis=0)
    constant = xs <= 1e-14 * np.maximum(1.0, np.abs(xm))
    if constant.any():
        warnings.warn(
            f"{int(constant.sum())} constant predictor column(s); coefficients forced to 0"
        )
    if scale:
        safe = np.where(constant, 1.0, xs)
    else:
        safe = np.ones_like(xs)
    Z = (X - xm) / safe
    Z[:, constant] = 0.0
    return Z, xm, safe, constant


def _cd_solve(
    Z: np.ndarray,
    Yc: np.ndarray,
    lam: float,
    gamma: float,
    tol: float,
    max_sweeps: int,
    warm: np.ndarray | None = None,
) -> tuple[np.ndarray, int, list[float]]:
    """Cyclic coordinate descent on standardized data, all equations at once.

    Equations are independent; the vectorized update applies the identical
    per-equation sequence, and an equation freezes as soon as its own sweep
    delta drops below tolerance, so results match equation-by-equation
    solves bit for bit.
    """
    n, d = Z.shape
    m = Yc.shape[1]
    zsq = np.einsum("ij,ij->j", Z, Z)
    live = zsq > 0  # constant columns were zeroed
    B = np.zeros((d, m)) if warm is None else warm.copy()
    R = Yc - Z @ B
    thresh = lam * gamma / 2.0
    denom = zsq + lam * (1.0 - gamma)
    active = np.ones(m, dtype=bool)
    objective_path: list[float] = []
    prev_obj = math.inf
    last_delta = np.zeros(m)

    for sweep in range(1, max_sweeps + 1):
        delta = np.zeros(m)
        for j in range(d):
            if not live[j]:
                continue
            bj = B[j]
            rho = Z[:, j] @ R + zsq[j] * bj
            if thresh > 0.0:
                new = np.sign(rho) * np.maximum(np.abs(rho) - thresh, 0.0) / denom[j]
            else:
                new = rho / denom[j]
            new = np.where(active, new, bj)
            diff = bj - new
            if np.any(diff):
                R += np.outer(Z[:, j], diff)
            np.maximum(delta, np.abs(diff), out=delta)
            B[j] = new

        obj = float(
            np.sum(R * R)
            + lam * ((1.0 - gamma) * np.sum(B * B) + gamma * np.sum(np.abs(B)))
        )
        objective_path.append(obj)
        if obj > prev_obj * (1.0 + 1e-9) + 1e-12:
            raise AssertionError(
                f"coordinate descent objective increased at sweep {sweep}: "
                f"{prev_obj} -> {obj}"
            )
        prev_obj = obj
        last_delta = np.where(active, delta, last_delta)
        active &= delta >= tol
        if not active.any():
            return B, sweep, objective_path

    worst = int(np.argmax(last_delta))
    raise ConvergenceError(
        f"coordinate descent did not converge in {max_sweeps} sweeps; "
        f"worst equation {worst} still moving {last_delta[worst]:.3e} per sweep "
        f"(tolerance {tol:.1e})"
    )


def lambda_max(values: np.ndarray, p: int, standardize: bool = True) -> float:
    """Smallest lambda that zeroes every slope at gamma = 1."""
    X, Y = _lag_design(np.asarray(values, dtype=float), p)
    Z, _, _, _ = _standardize(X, standardize)
    Yc = Y - Y.mean(axis=0)
    return max(2.0 * float(np.max(np.abs(Z.T @ Yc))), 1e-12)


def _auto_lambda_grid(values: np.ndarray, p: int, config: ElasticNetConfig) -> np.ndarray:
    lmax = lambda_max(values, p, config.standardize)
    return np.geomspace(lmax, lmax * config.lambda_min_ratio, config.n_lambdas)


def _solve_theta(
    X: np.ndarray,
    Y: np.ndarray,
    lam: float,
    gamma: float,
    config: ElasticNetConfig,
    warm: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, list[float]]:
    """Fit all equations; returns (slopes, intercept, B_standardized, sweeps, path)."""
    Z, xm, xs, constant = _standardize(X, config.standardize)
    ym = Y.mean(axis=0)
    Yc = Y - ym
    B, sweeps, path = _cd_solve(Z, Yc, lam, gamma, config.tol, config.max_sweeps, warm)
    theta = B / xs[:, None]
    theta[constant] = 0.0
    intercept = ym - xm @ theta
    return theta, intercept, B, sweeps, path


def fit_var(
    panel: PricePanel | np.ndarray,
    p: int,
    config: ElasticNetConfig | None = None,
    *,
    lam: float | None = None,
    gamma: float | None = None,
) -> VarFit:
    """Fit the levels VAR(p) by elastic-net penalized least squares.

    When ``lam``/``gamma`` are given the fit runs at that point; when the
    config grid has a single point that point is used; otherwise
    :func:`cross_validate` picks the pair first. The panel must be gap-free
    (interpolate before fitting).
    """
    config = config or ElasticNetConfig()
    config.validate()
    if isinstance(panel, PricePanel):
        values = panel.values
        series = panel.series
    else:
        values = np.asarray(panel, dtype=float)
        series = [("y", f"{j:03d}") for j in range(values.shape[1])]
    if np.isnan(values).any():
        raise ValueError("panel contains gaps; interpolate before fitting")
    T = values.shape[0]
    if p < 1:
        raise ValueError("lag order must be at least 1")
    if T <= p + 5:
        raise ValueError(f"need more than {p + 5} rows to fit a VAR({p})")

    cv_table = None
    if lam is None:
        lams = (
            np.asarray(config.lambda_grid, dtype=float)
            if config.lambda_grid is not None
            else _auto_lambda_grid(values, p, config)
        )
        gammas = tuple(config.gamma_grid)
        if lams.size == 1 and len(gammas) == 1:
            lam, gamma = float(lams[0]), float(gammas[0])
        else:
            cv = cross_validate(values, p, config)
            lam, gamma, cv_table = cv.lam, cv.gamma, cv.table
    else:
        if gamma is None:
            raise ValueError("gamma must accompany an explicit lam")
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        if not 0 <= gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")

    X, Y = _lag_design(values, p)
    theta, intercept, _, sweeps, path = _solve_theta(X, Y, lam, gamma, config)
    residuals = Y - intercept - X @ theta
    sigma = residuals.T @ residuals / residuals.shape[0]
    m = Y.shape[1]
    lag_coefs = [theta[k * m : (k + 1) * m].T.copy() for k in range(p)]
    return VarFit(
        p=p,
        intercept=intercept,
        lag_coefs=lag_coefs,
        residuals=residuals,
        sigma=sigma,
        lam=float(lam),
        gamma=float(gamma),
        series=list(series),
        cv_table=cv_table,
        sweeps=sweeps,
        objective_path=path,
    )


def _cv_folds(T: int, p: int, config: ElasticNetConfig) -> list[tuple[int, int, int]]:
    """Rolling-origin folds as (train_end, val_start, val_stop) row triplets."""
    initial = config.cv_initial_window or max(p + 10, T // 2)
    step = config.cv_step or max(1, (T - initial) // config.cv_folds)
    folds = []
    start = initial
    while start < T and len(folds) < config.cv_folds:
        stop = min(start + step, T)
        folds.append((start, start, stop))
        start = stop
    if len(folds) < 3:
        raise ValueError(
            f"insufficient folds: only {len(folds)} usable with initial window "
            f"{initial} and step {step} on {T} rows"
        )
    return folds


def cross_validate(
    panel: PricePanel | np.ndarray,
    p: int,
    config: ElasticNetConfig | None = None,
) -> CvResult:
    """Rolling-origin tuning of (lambda, gamma).

    For each fold the model is fit on an expanding prefix and scored on
    one-step-ahead mean squared forecast error over the next block of
    rows (forecasts use actual lagged values). The winning pair minimizes
    the mean score across folds; ties break toward larger lambda, then
    larger gamma, preferring sparser fits.
    """
    config = config or ElasticNetConfig()
    config.validate()
    values = panel.values if isinstance(panel, PricePanel) else np.asarray(panel, dtype=float)
    if np.isnan(values).any():
        raise ValueError("panel contains gaps; interpolate before fitting")
    T = values.shape[0]
    folds = _cv_folds(T, p, config)
    lams = (
        np.asarray(config.lambda_grid, dtype=float)
        if config.lambda_grid is not None
        else _auto_lambda_grid(values, p, config)
    )
    gammas = tuple(config.gamma_grid)

    X_full, _ = _lag_design(values, p)
    scores = np.zeros((len(lams), len(gammas), len(folds)))
    for f, (train_end, val_start, val_stop) in enumerate(folds):
        X_tr, Y_tr = _lag_design(values[:train_end], p)
        Z, xm, xs, constant = _standardize(X_tr, config.standardize)
        Yc = Y_tr - Y_tr.mean(axis=0)
        ym = Y_tr.mean(axis=0)
        X_val = X_full[val_start - p : val_stop - p]
        Y_val = values[val_start:val_stop]
        for g, gamma in enumerate(gammas):
            warm = None
            for l, lam in enumerate(lams):
                B, _, _ = _cd_solve(
                    Z, Yc, float(lam), float(gamma), config.tol, config.max_sweeps, warm
                )
                warm = B
                theta = B / xs[:, None]
                theta[constant] = 0.0
                intercept = ym - xm @ theta
                pred = intercept + X_val @ theta
                scores[l, g, f] = float(np.mean((Y_val - pred) ** 2))

    mean_scores = scores.mean(axis=2)
    best_l, best_g, best = 0, 0, math.inf
    for l in range(len(lams)):  # lams descend; gammas ascend, so scan reversed
        for g in reversed(range(len(gammas))):
            if mean_scores[l, g] < best:
                best = mean_scores[l, g]
                best_l, best_g = l, g
    table = [
        {
            "lam": float(lams[l]),
            "gamma": float(gammas[g]),
            "mean_msfe": float(mean_scores[l, g]),
            "fold_msfe": [float(s) for s in scores[l, g]],
        }
        for l in range(len(lams))
        for g in range(len(gammas))
    ]
    return CvResult(lam=float(lams[best_l]), gamma=float(gammas[best_g]), table=table)


def select_lag(
    panel: PricePanel | np.ndarray,
    max_p: int,
    config: ElasticNetConfig | None = None,
) -> int:
    """Pick the lag order by multivariate AIC under a light penalty.

    ``AIC(p) = log det(sigma_hat(p)) + 2 * k_eff / T`` where ``k_eff``
    counts nonzero entries of the fitted parameter block. Each candidate is
    fit at a fixed light penalty (``1e-3 * lam_max`` at gamma = 0.5). Ties
    break toward the smaller lag.
    """
    if max_p < 1:
        raise ValueError("max_p must be at least 1")
    config = config or ElasticNetConfig()
    values = panel.values if isinstance(panel, PricePanel) else np.asarray(panel, dtype=float)
    T = values.shape[0]
    if T <= max_p + 20:
        raise ValueError(f"need more than {max_p + 20} rows to compare lags up to {max_p}")

    best_p, best_aic = 1, math.inf
    for p in range(1, max_p + 1):
        lam = LAG_SELECTION_LAMBDA_SCALE * lambda_max(values, p, config.standardize)
        fit = fit_var(values, p, config, lam=lam, gamma=0.5)
        sign, logdet = np.linalg.slogdet(fit.sigma)
        if sign <= 0:
            continue
        aic = float(logdet) + 2.0 * fit.nonzero_count / T
        if aic < best_aic:
            best_aic, best_p = aic, p
    return best_p
