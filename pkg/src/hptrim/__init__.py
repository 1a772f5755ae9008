"""Causal connectivity estimation for partially observed Hawkes networks.

Workflow: define or generate a :class:`~hptrim.network.NetworkSpec`,
simulate events (or ingest recorded spikes), bin them into a regression
design, and fit one of the estimators (hp_trim, naive, hive). See the
CLI (``hptrim --help``) for the file-based interface.
"""

from ._accel import USING_NUMBA
from ._kernels import derive_stream
from .design import (
    ConfoundingDiagnostic,
    RegressionData,
    build_design,
    load_regression,
    oracle_confounding_bias,
    save_regression,
    standardize_columns,
)
from .errors import ConfigError, DataError, SimulationRunawayError, StationarityError
from .estimators import (
    EdgeMetrics,
    HiveState,
    NetworkEstimate,
    adjacency_to_csv,
    edge_metrics,
    estimate_q,
    estimate_to_dot,
    estimate_to_json,
    fit_hive,
    fit_hp_trim,
    fit_naive,
    hetero_pca,
    hive_state,
    orthogonal_complement_projector,
    threshold_edges,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    PRESETS,
    export_report,
    ingest_spikes,
    preset_config,
    report_to_json,
    run_experiment,
    stability_holdout,
)
from .lasso import LassoFit, PenaltyRule, fit_lasso, kkt_residuals, lambda_max, select_lambda
from .network import (
    NetworkSpec,
    SpectrumReport,
    TransitionKernel,
    assumption_summary,
    check_stationarity,
    make_block_network,
    make_orthogonal_block_network,
    spec_from_json,
    spec_to_json,
)
from .simulate import EventData, empirical_rates, save_events, simulate, stationary_rates
from .spectral import SpectralTransform, apply_transform, compute_svd, spectrum_to_csv, trim_transform

__version__ = "0.1.0"
