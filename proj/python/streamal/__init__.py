"""Stream active-learning lab with a forgetful annotation oracle."""

from ._core import (
    ForgettingParams,
    fit_forgetting_params,
    forgetting_score,
    generate_schedule,
    hashed_bow,
    rank_auc,
    reference_schedules,
    regime_params,
    run_config,
    tokenize,
    two_tailed_position_test,
)

__all__ = [
    "ForgettingParams",
    "fit_forgetting_params",
    "forgetting_score",
    "generate_schedule",
    "hashed_bow",
    "rank_auc",
    "reference_schedules",
    "regime_params",
    "run_config",
    "tokenize",
    "two_tailed_position_test",
]
