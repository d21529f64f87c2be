"""crowdcast: a hybrid human+machine forecasting engine.

Modules:

- core: questions, forecasts, sources, the tournament log
- scoring: ordered/nominal Brier scores, MDB/MMDB, standardization, Cohen's d
- tsmodels: ARIMA/ETS/random-walk fits, predictive distributions, PHE2
- aggregation: recency, decay/skill weighting, recalibration, extremization,
  human/machine combination
- allocation: question ordering and forecast-budget policies
- simulator: synthetic tournaments, sparsity experiment, backcast comparison
- cli: command-line interface with canonical CSV/JSON ingestion
- kernels: compiled hot loops with a pure-Python fallback
"""

__version__ = "0.1.0"

from .core import (BINARY, NOMINAL, ORDINAL, Forecast, Ifp, Source,
                   TournamentLog, ValidationError, active_forecast_on_day,
                   latest_per_source, uniform_forecast, validate_forecast)
from .scoring import (ScoreReport, brier_for_ifp, brier_nominal,
                      brier_ordinal, cohens_d, mdb, mmdb_individual,
                      standardize)
from .tsmodels import (FitError, FittedModel, PredictiveDistribution, Series,
                       auto_arima, fit_arima, fit_ets, fit_random_walk, phe2,
                       refresh_state, to_option_probs)
from .aggregation import (AggregationConfig, aggregate_ifp_daily,
                          combine_with_machine, extremize_aggregate,
                          recalibrate_individual, slot_forecast)
from .replay import SkillTimeline, mean_slot_brier, slot_daily_matrix
from .allocation import (AllocationPolicy, BudgetReport, ConsensusRule,
                         apply_policy, consensus_reached, evaluate_policies,
                         swift_order)
from .simulator import (SimConfig, SimResult, backcast_compare, gen_world,
                        run_tournament, sparsity_experiment)

__all__ = [
    "__version__",
    "BINARY", "ORDINAL", "NOMINAL",
    "Ifp", "Forecast", "Source", "TournamentLog", "ValidationError",
    "validate_forecast", "uniform_forecast", "latest_per_source",
    "active_forecast_on_day",
    "ScoreReport", "brier_nominal", "brier_ordinal", "brier_for_ifp",
    "mdb", "mmdb_individual", "standardize", "cohens_d",
    "Series", "FitError", "FittedModel", "PredictiveDistribution",
    "fit_arima", "auto_arima", "fit_ets", "fit_random_walk",
    "refresh_state", "to_option_probs", "phe2",
    "AggregationConfig", "aggregate_ifp_daily", "slot_forecast",
    "recalibrate_individual", "extremize_aggregate", "combine_with_machine",
    "SkillTimeline", "slot_daily_matrix", "mean_slot_brier",
    "AllocationPolicy", "BudgetReport", "ConsensusRule", "swift_order",
    "consensus_reached", "apply_policy", "evaluate_policies",
    "SimConfig", "SimResult", "gen_world", "run_tournament",
    "sparsity_experiment", "backcast_compare",
]
