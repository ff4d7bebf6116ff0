"""Sparse VECM toolkit: elastic-net VAR estimation, error-correction views,
effective-rank cointegration screens, and joint impulse response analysis
with bootstrap bands, for high-dimensional region-by-commodity price panels.
"""

from .panel import (
    PricePanel,
    PeriodSummary,
    RawObservation,
    aggregate,
    deflate,
    drop_sparse_series,
    interpolate,
    log_transform,
    read_cpi,
    read_observations,
    read_panel,
    slice_period,
    summarize,
    tag_periods,
    write_panel,
)
from .stattests import (
    AdfResult,
    ChowResult,
    CointegrationResult,
    PanelUnitRootResult,
    adf_test,
    chow_test,
    fisher_combination,
    mackinnon_pvalue,
    pairwise_cointegration,
    panel_unit_root,
)
from .varnet import (
    ConvergenceError,
    CvResult,
    ElasticNetConfig,
    VarFit,
    cross_validate,
    fit_var,
    lambda_max,
    select_lag,
)
from .vecm import (
    EffectiveRankReport,
    VecmView,
    effective_rank,
    levels_from_vecm,
    rank_report,
    render_rank_table,
    to_vecm,
)
from .jirf import (
    JirfResult,
    ShockScenario,
    VmaForm,
    build_shock,
    compute_jirf,
    to_vma,
)
from .bootstrap import (
    BootstrapSpec,
    JirfDistribution,
    bootstrap_jirf,
    bootstrap_jirf_result,
    resample_series,
)

__version__ = "0.1.0"
