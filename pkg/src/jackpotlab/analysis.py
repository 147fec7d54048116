"""Panel analyses: the IHS transform, feedback categorization with the
all-buckets restriction, and the learning / feedback / IV / heterogeneity
regressions with their sample filters (prize-week exclusion, lag
availability).
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .regression import (
    RegressionResult,
    ols_robust,
    two_stage_least_squares,
    two_way_within,
    wald_linear,
    within_transform,
)

__all__ = [
    "InsufficientSampleError",
    "ihs",
    "ihs_inverse",
    "categorize_feedback",
    "all_bucket_ids",
    "restrict_all_buckets",
    "learning_regression",
    "feedback_regression",
    "two_sls",
    "heterogeneity_regression",
    "OUTCOME_TRANSFORMS",
]

FEEDBACK_MODES = ("relative", "absolute")
SYMMETRY_TEST = "abs_equal"


class InsufficientSampleError(ValueError):
    """Too few consecutive-week observations to run the regression."""


def ihs(x):
    """Inverse hyperbolic sine, ln(x + sqrt(x^2 + 1)); ihs(0) = 0."""
    return np.arcsinh(x)


def ihs_inverse(y):
    """Inverse of ihs (the hyperbolic sine)."""
    return np.sinh(y)


def categorize_feedback(panel: pd.DataFrame, cutoff: float = 0.10, mode: str = "relative") -> pd.DataFrame:
    """Attach a 'feedback' column: positive / negative / base per betting week.

    Thresholds sit around each individual's mean share of correct picks over
    their observed betting weeks: relative mode uses mean*(1 +/- cutoff),
    absolute mode mean +/- cutoff probability points. Both comparisons are
    strict, so boundary weeks land in the base category. Weeks without picks
    get no category.
    """
    if mode not in FEEDBACK_MODES:
        raise ValueError(f"mode must be one of {FEEDBACK_MODES}, got {mode!r}")
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    out = panel.copy()
    share = out["share_correct"].to_numpy(np.float64)
    means = out["share_correct"].groupby(out["individual_id"]).transform("mean").to_numpy(np.float64)
    if mode == "relative":
        hi, lo = means * (1.0 + cutoff), means * (1.0 - cutoff)
    else:
        hi, lo = means + cutoff, means - cutoff
    feedback = np.full(len(out), None, dtype=object)
    with np.errstate(invalid="ignore"):
        valid = ~np.isnan(share)
        feedback[valid & (share > hi)] = "positive"
        feedback[valid & (share < lo)] = "negative"
        feedback[valid & (share >= lo) & (share <= hi)] = "base"
    out["feedback"] = feedback
    return out


def all_bucket_ids(panel: pd.DataFrame) -> set:
    """Individuals with at least one week in each feedback category."""
    if "feedback" not in panel.columns:
        raise ValueError("categorize_feedback must run first")
    marked = panel[panel["feedback"].notna()]
    counts = marked.groupby("individual_id")["feedback"].nunique()
    return set(counts[counts == 3].index)


def restrict_all_buckets(panel: pd.DataFrame) -> pd.DataFrame:
    """Drop individuals lacking any positive, negative or base week."""
    keep = all_bucket_ids(panel)
    return panel[panel["individual_id"].isin(keep)].reset_index(drop=True)


def _sorted_arrays(panel: pd.DataFrame, columns: list[str]):
    """Panel plus columns as float arrays, sorted by (individual, week)."""
    if not len(panel):
        raise InsufficientSampleError("empty panel")
    ids = panel["individual_id"].to_numpy(np.int64)
    weeks = panel["week"].to_numpy(np.int64)
    if weeks.min() < 0:
        raise ValueError("week indices must be non-negative")
    stride = np.int64(weeks.max() + 1)
    key = ids * stride + weeks
    if not np.all(np.diff(key) > 0):
        order = np.argsort(key, kind="stable")
        if np.any(np.diff(key[order]) == 0):
            raise ValueError("duplicate (individual, week) rows in panel")
        panel = panel.iloc[order]
        ids, weeks, key = ids[order], weeks[order], key[order]
    data = {c: panel[c].to_numpy(np.float64) for c in columns}
    return panel, ids, weeks, key, stride, data


def _shifted(key: np.ndarray, ids: np.ndarray, weeks: np.ndarray, stride: np.int64,
             values: np.ndarray, shift: int) -> np.ndarray:
    """values at (id, week - shift), NaN if that row does not exist."""
    target = ids * stride + (weeks - shift)
    pos = np.searchsorted(key, target)
    pos_clipped = np.minimum(pos, len(key) - 1)
    found = (key[pos_clipped] == target) & (weeks - shift >= 0) & (weeks - shift < stride)
    out = np.full(len(values), np.nan)
    out[found] = values[pos_clipped[found]]
    return out


def _finish(sample_mask: np.ndarray, what: str, minimum: int = 10) -> None:
    if sample_mask.sum() < minimum:
        raise InsufficientSampleError(
            f"{what}: only {int(sample_mask.sum())} usable observations (need >= {minimum})"
        )


def _counts(ids: np.ndarray, weeks: np.ndarray) -> tuple[int, int]:
    return len(np.unique(ids)), len(np.unique(weeks))


def learning_regression(panel: pd.DataFrame, lag: int = 1, dependent: str = "placed_jackpot") -> RegressionResult:
    """Dependent at week t on the share of correct picks at week t-lag.

    Dependent is the bet-placement indicator or ihs betting expenditure.
    Controls: midweek and weekend ticket counts at t-lag; individual fixed
    effects absorbed. Excludes rows whose lag week won a jackpot prize, so
    the feedback variation carries no income effect.
    """
    if dependent not in ("placed_jackpot", "ihs_expenditure"):
        raise ValueError(f"unknown dependent {dependent!r}")
    if lag < 1:
        raise ValueError("lag must be >= 1")
    cols = ["share_correct", "tickets_midweek", "tickets_weekend", "won_prize",
            "placed_jackpot", "betting_expenditure"]
    _, ids, weeks, key, stride, data = _sorted_arrays(panel, cols)

    share_lag = _shifted(key, ids, weeks, stride, data["share_correct"], lag)
    tm_lag = _shifted(key, ids, weeks, stride, data["tickets_midweek"], lag)
    tw_lag = _shifted(key, ids, weeks, stride, data["tickets_weekend"], lag)
    prize_lag = _shifted(key, ids, weeks, stride, data["won_prize"], lag)

    mask = ~np.isnan(share_lag) & (prize_lag == 0)
    _finish(mask, "learning regression")

    y = data["placed_jackpot"][mask] if dependent == "placed_jackpot" else ihs(data["betting_expenditure"][mask])
    x = np.column_stack([share_lag[mask], tm_lag[mask], tw_lag[mask]])
    groups = ids[mask]
    n_ids, n_wks = _counts(groups, weeks[mask])

    yd = within_transform(y, groups)
    xd = within_transform(x, groups)
    names = [f"share_correct_lag{lag}", f"tickets_midweek_lag{lag}", f"tickets_weekend_lag{lag}"]
    result = ols_robust(yd, xd, names, absorbed=n_ids, n_individuals=n_ids, n_weeks=n_wks)
    sd_share = float(np.std(share_lag[mask], ddof=1))
    result.extras.update(
        dependent=dependent,
        sd_instrument=sd_share,
        effect_per_sd=float(result.coef[0]) * sd_share,
    )
    return result


def feedback_regression(
    panel: pd.DataFrame,
    horizon: int = 1,
    cutoff: float = 0.10,
    mode: str = "relative",
    restrict: bool = True,
    two_way: bool = False,
) -> RegressionResult:
    """Bet placement at t+horizon on positive/negative feedback at t.

    Requires categorized feedback; by default applies the all-buckets
    restriction so both indicator coefficients are estimated on the same
    individuals. Excludes weeks that won a prize at t. Reports the Wald
    test of beta_p + beta_n = 0 (equal response magnitudes) under
    ``wald_tests['abs_equal']``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    marked = categorize_feedback(panel, cutoff, mode)
    if restrict:
        marked = restrict_all_buckets(marked)
        if not len(marked):
            raise InsufficientSampleError("no individuals survive the all-buckets restriction")

    cols = ["tickets_midweek", "tickets_weekend", "won_prize", "placed_jackpot"]
    marked, ids, weeks, key, stride, data = _sorted_arrays(marked, cols)
    feedback = marked["feedback"].to_numpy(object)

    lead = _shifted(key, ids, weeks, stride, data["placed_jackpot"], -horizon)
    has_cat = pd.notna(feedback)
    mask = has_cat & ~np.isnan(lead) & (data["won_prize"] == 0)
    _finish(mask, "feedback regression")

    pos = (feedback == "positive")[mask].astype(float)
    neg = (feedback == "negative")[mask].astype(float)
    x = np.column_stack([pos, neg, data["tickets_midweek"][mask], data["tickets_weekend"][mask]])
    y = lead[mask]
    groups = ids[mask]
    wk = weeks[mask]
    n_ids, n_wks = _counts(groups, wk)
    names = ["positive_feedback", "negative_feedback", "tickets_midweek", "tickets_weekend"]

    if two_way:
        stacked, info = two_way_within(np.column_stack([y, x]), groups, wk)
        yd, xd = stacked[:, 0], stacked[:, 1:]
        absorbed = info["absorbed"]
        result = ols_robust(yd, xd, names, absorbed=absorbed, n_individuals=n_ids, n_weeks=n_wks)
        result.extras["two_way"] = info
    else:
        yd = within_transform(y, groups)
        xd = within_transform(x, groups)
        result = ols_robust(yd, xd, names, absorbed=n_ids, n_individuals=n_ids, n_weeks=n_wks)

    result.wald_tests[SYMMETRY_TEST] = wald_linear(result, [1.0, 1.0, 0.0, 0.0])
    result.extras.update(horizon=horizon, cutoff=cutoff, mode=mode, restricted=restrict)
    return result


# Default transform applied to each financial outcome column in the IV model:
# elasticity outcomes enter in ihs, net savings in raw KSH, the loan
# application indicator as-is.
OUTCOME_TRANSFORMS = {
    "savings_withdrawal": "ihs",
    "savings_deposit": "ihs",
    "net_savings": "raw",
    "loan_applied": "raw",
    "loans_received": "ihs",
    "loan_repayments": "ihs",
}


def two_sls(
    panel: pd.DataFrame,
    outcome: str,
    *,
    outcome_transform: str | None = None,
    lag: int = 1,
    weak_f_threshold: float = 10.0,
) -> RegressionResult:
    """IV estimate of the effect of ihs betting expenditure on an outcome.

    The endogenous regressor is ihs(betting_expenditure) at t, instrumented
    by the share of correct picks at t-lag, controlling for ticket counts
    at t-lag with individual fixed effects absorbed. Rows whose lag week
    won a prize are excluded. The first-stage robust partial F is reported;
    below the threshold the result is flagged weak (not an error).
    """
    transform = outcome_transform or OUTCOME_TRANSFORMS.get(outcome, "raw")
    if transform not in ("ihs", "raw"):
        raise ValueError(f"unknown outcome transform {transform!r}")
    cols = ["share_correct", "tickets_midweek", "tickets_weekend", "won_prize",
            "betting_expenditure", outcome]
    _, ids, weeks, key, stride, data = _sorted_arrays(panel, cols)

    share_lag = _shifted(key, ids, weeks, stride, data["share_correct"], lag)
    tm_lag = _shifted(key, ids, weeks, stride, data["tickets_midweek"], lag)
    tw_lag = _shifted(key, ids, weeks, stride, data["tickets_weekend"], lag)
    prize_lag = _shifted(key, ids, weeks, stride, data["won_prize"], lag)

    mask = ~np.isnan(share_lag) & (prize_lag == 0)
    _finish(mask, "2SLS")

    y = data[outcome][mask]
    if transform == "ihs":
        y = ihs(y)
    x_endog = ihs(data["betting_expenditure"][mask])
    z = share_lag[mask]
    w = np.column_stack([tm_lag[mask], tw_lag[mask]])
    groups = ids[mask]
    n_ids, n_wks = _counts(groups, weeks[mask])

    yd = within_transform(y, groups)
    xd = within_transform(x_endog, groups)
    zd = within_transform(z, groups)
    wd = within_transform(w, groups)
    names = ["ihs_expenditure", f"tickets_midweek_lag{lag}", f"tickets_weekend_lag{lag}"]
    result = two_stage_least_squares(
        yd, xd, zd, wd, names,
        absorbed=n_ids,
        weak_f_threshold=weak_f_threshold,
        n_individuals=n_ids,
        n_weeks=n_wks,
    )
    result.extras.update(outcome=outcome, transform=transform, instrument=f"share_correct_lag{lag}")
    return result


def heterogeneity_regression(panel: pd.DataFrame, lags: int = 1) -> RegressionResult:
    """Share of correct picks at t on its lags, with week fixed effects.

    Uses only individuals betting in enough consecutive weeks for all lags;
    controls for midweek/weekend ticket counts at each lag; no individual
    effects, so the lag coefficients pick up ability heterogeneity.
    Excludes weeks that won a prize at t.
    """
    if not 1 <= lags:
        raise ValueError("lags must be >= 1")
    cols = ["share_correct", "tickets_midweek", "tickets_weekend", "won_prize"]
    _, ids, weeks, key, stride, data = _sorted_arrays(panel, cols)

    share = data["share_correct"]
    lagged_shares = [_shifted(key, ids, weeks, stride, share, l) for l in range(1, lags + 1)]
    lagged_tm = [_shifted(key, ids, weeks, stride, data["tickets_midweek"], l) for l in range(1, lags + 1)]
    lagged_tw = [_shifted(key, ids, weeks, stride, data["tickets_weekend"], l) for l in range(1, lags + 1)]

    mask = ~np.isnan(share) & (data["won_prize"] == 0)
    for arr in lagged_shares:
        mask &= ~np.isnan(arr)
    _finish(mask, "heterogeneity regression")

    y = share[mask]
    x = np.column_stack(
        [arr[mask] for arr in lagged_shares]
        + [arr[mask] for arr in lagged_tm]
        + [arr[mask] for arr in lagged_tw]
    )
    wk = weeks[mask]
    n_ids, n_wks = _counts(ids[mask], wk)

    yd = within_transform(y, wk)
    xd = within_transform(x, wk)
    names = (
        [f"share_correct_lag{l}" for l in range(1, lags + 1)]
        + [f"tickets_midweek_lag{l}" for l in range(1, lags + 1)]
        + [f"tickets_weekend_lag{l}" for l in range(1, lags + 1)]
    )
    result = ols_robust(yd, xd, names, absorbed=n_wks, n_individuals=n_ids, n_weeks=n_wks)
    result.extras.update(lags=lags, week_fixed_effects=True)
    return result
