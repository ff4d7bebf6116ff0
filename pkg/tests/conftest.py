"""Shared fixtures: small data-generating processes and panel builders."""

from __future__ import annotations

from datetime import date

import numpy as np
import pandas as pd
import pytest

from sparsevecm.panel import PricePanel


def stable_var_coefs(m: int, p: int, rng: np.random.Generator, scale: float = 0.9) -> list[np.ndarray]:
    """Random VAR coefficient matrices rescaled to a stable companion matrix."""
    phis = [rng.normal(0.0, 0.3 / np.sqrt(m), size=(m, m)) for _ in range(p)]
    phis[0] += 0.3 * np.eye(m)
    companion = np.zeros((m * p, m * p))
    for k, Phi in enumerate(phis):
        companion[:m, k * m : (k + 1) * m] = Phi
    if p > 1:
        companion[m:, :-m] = np.eye(m * (p - 1))
    rho = np.abs(np.linalg.eigvals(companion)).max()
    if rho >= scale:
        factor = scale / rho
        phis = [Phi * factor ** (k + 1) for k, Phi in enumerate(phis)]
    return phis


def simulate_var(
    intercept: np.ndarray,
    phis: list[np.ndarray],
    sigma: np.ndarray,
    T: int,
    rng: np.random.Generator,
    burn_in: int = 50,
) -> np.ndarray:
    m = intercept.size
    p = len(phis)
    chol = np.linalg.cholesky(sigma)
    total = T + burn_in
    y = np.zeros((total, m))
    eps = rng.standard_normal((total, m)) @ chol.T
    for t in range(p, total):
        acc = intercept + eps[t]
        for k, Phi in enumerate(phis, start=1):
            acc = acc + Phi @ y[t - k]
        y[t] = acc
    return y[burn_in:]


def make_panel(
    values: np.ndarray,
    mask: np.ndarray | None = None,
    commodities: tuple[str, ...] | None = None,
    periods: dict | None = None,
    meta: dict | None = None,
) -> PricePanel:
    """Wrap a (T, m) array in a PricePanel with generic labels."""
    values = np.asarray(values, dtype=float)
    T, m = values.shape
    if commodities is None:
        commodities = ("x",)
    if m % len(commodities):
        raise ValueError("m must divide evenly into commodity blocks")
    R = m // len(commodities)
    series = [(c, f"r{j:02d}") for c in commodities for j in range(R)]
    stamps = pd.DatetimeIndex(
        [pd.Timestamp(date(2020, 1, 6)) + pd.Timedelta(days=7 * i) for i in range(T)]
    )
    return PricePanel(
        stamps=stamps,
        series=series,
        values=values,
        mask=np.zeros((T, m), dtype=bool) if mask is None else mask,
        periods=periods or {},
        meta=meta or {},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    reports = []
    for key in ("passed", "failed"):
        reports.extend(terminalreporter.stats.get(key, []))
    acceptance = [
        r
        for r in reports
        if getattr(r, "when", None) == "call" and "test_acceptance" in r.nodeid
    ]
    if not acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for r in sorted(acceptance, key=lambda r: r.nodeid):
        name = r.nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if r.passed else 'FAIL'}  {name}")
