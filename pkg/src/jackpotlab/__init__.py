"""jackpotlab: a simulation-and-estimation laboratory for jackpot betting.

Simulates populations of gamblers who learn their prediction ability from
weekly jackpot results, emits the raw mobile-money transaction streams, and
estimates the learning and financial-impact regressions (fixed effects,
symmetry Wald tests, 2SLS) against planted ground truth.
"""

from .analysis import (
    categorize_feedback,
    feedback_regression,
    heterogeneity_regression,
    ihs,
    learning_regression,
    restrict_all_buckets,
    two_sls,
)
from .beliefs import Belief, CutoffProcess, UpdateRule, belief_variance, decide_bet, expected_ability, posterior_update
from .intervals import AbilityEstimate, ability_table, clopper_pearson
from .jackpot import (
    JackpotResult,
    JackpotSpec,
    favorite_strategy_probability,
    multibet_payout,
    prize_probability,
    prize_tier,
    simulate_jackpot,
)
from .panel import PANEL_COLUMNS, PanelObservation, read_panel_csv, write_panel_csv
from .regression import RegressionResult, ols_robust, two_stage_least_squares, two_way_within, within_transform
from .scenario import ScenarioConfig, default_scenario, load_config
from .simulate import bucket_fill_check, run_scenario, simulate_to_dir
from .txlog import BetMessage, aggregate_panel, format_bet_message, parse_bet_message, parse_log_dir

__version__ = "0.1.0"
