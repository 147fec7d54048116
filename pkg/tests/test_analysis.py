import math

import numpy as np
import pandas as pd
import pytest

from jackpotlab.analysis import (
    InsufficientSampleError,
    all_bucket_ids,
    categorize_feedback,
    feedback_regression,
    heterogeneity_regression,
    ihs,
    ihs_inverse,
    learning_regression,
    restrict_all_buckets,
    two_sls,
)
from jackpotlab.panel import PANEL_COLUMNS


class TestIhs:
    def test_zero(self):
        assert ihs(0.0) == 0.0

    def test_formula_at_100(self):
        want = math.log(100 + math.sqrt(100**2 + 1))
        assert ihs(100.0) == pytest.approx(want, abs=1e-12)
        assert ihs(100.0) == pytest.approx(5.29834, abs=1e-5)

    def test_log_like_asymptotics(self):
        for x in (10.0, 50.0, 1e4, 1e7):
            assert abs(ihs(x) - math.log(2 * x)) < 0.003

    def test_strictly_increasing(self):
        xs = np.linspace(0, 1e5, 1000)
        assert np.all(np.diff(ihs(xs)) > 0)

    def test_odd_function(self):
        xs = np.array([0.5, 3.0, 120.0])
        assert np.allclose(ihs(-xs), -ihs(xs), atol=1e-12)

    def test_inverse_roundtrip(self):
        xs = np.array([0.0, 1e-4, 1.0, 250.0, 9e5])
        assert np.allclose(ihs_inverse(ihs(xs)), xs, rtol=1e-10, atol=1e-10)


def toy_panel(rows):
    """Rows: (individual, week, picks_correct, picks_total, placed_next...)"""
    frame = pd.DataFrame(rows)
    for col in PANEL_COLUMNS:
        if col not in frame.columns:
            frame[col] = 0
    frame["share_correct"] = np.where(
        frame["picks_total"] > 0, frame["picks_correct"] / frame["picks_total"], np.nan
    )
    frame["placed_jackpot"] = (frame["picks_total"] > 0).astype(int)
    return frame[PANEL_COLUMNS]


class TestCategorizeFeedback:
    def _shares_panel(self, shares_by_individual):
        rows = []
        for individual, shares in shares_by_individual.items():
            for week, share in enumerate(shares):
                if share is None:
                    rows.append(dict(individual_id=individual, week=week,
                                     picks_correct=0, picks_total=0))
                else:
                    rows.append(dict(individual_id=individual, week=week,
                                     picks_correct=int(share * 100), picks_total=100))
        return toy_panel(rows)

    def test_constant_shares_all_base(self):
        marked = categorize_feedback(self._shares_panel({1: [0.30, 0.30, 0.30]}), 0.10)
        assert list(marked["feedback"]) == ["base", "base", "base"]

    def test_threshold_arithmetic(self):
        # mean 0.30; 0.34 > 0.33 -> positive
        marked = categorize_feedback(self._shares_panel({1: [0.26, 0.30, 0.34]}), 0.10)
        assert list(marked["feedback"]) == ["negative", "base", "positive"]

    def test_boundary_is_base(self):
        # mean of (0.20, 0.30, 0.40) = 0.30; exactly mean*1.1 = 0.33 -> base
        marked = categorize_feedback(self._shares_panel({1: [0.27, 0.30, 0.33]}), 0.10)
        assert list(marked["feedback"]) == ["base", "base", "base"]

    def test_absolute_mode(self):
        marked = categorize_feedback(
            self._shares_panel({1: [0.10, 0.30, 0.55]}), 0.10, mode="absolute"
        )
        # mean ~0.31667: 0.10 < 0.2167 neg; 0.55 > 0.4167 pos
        assert list(marked["feedback"]) == ["negative", "base", "positive"]

    def test_missing_weeks_uncategorized(self):
        marked = categorize_feedback(self._shares_panel({1: [0.3, None, 0.3]}), 0.10)
        assert marked["feedback"][1] is None

    def test_unknown_mode_errors(self):
        with pytest.raises(ValueError):
            categorize_feedback(self._shares_panel({1: [0.3]}), 0.10, mode="scaled")


class TestRestriction:
    def test_single_week_individuals_dropped(self):
        panel = toy_panel(
            [dict(individual_id=1, week=0, picks_correct=5, picks_total=13)]
            + [dict(individual_id=2, week=w, picks_correct=c, picks_total=13)
               for w, c in enumerate([2, 5, 8, 5])]
        )
        marked = categorize_feedback(panel, 0.10)
        kept = all_bucket_ids(marked)
        assert 1 not in kept and 2 in kept
        restricted = restrict_all_buckets(marked)
        assert set(restricted["individual_id"]) == {2}

    def test_smaller_cutoff_keeps_more(self):
        # weekly shares tight around the mean (several tickets per week),
        # so the binding bucket is positive/negative and the narrower
        # cutoff keeps more individuals
        rng = np.random.default_rng(0)
        rows = []
        for i in range(300):
            for w in range(8):
                rows.append(dict(individual_id=i, week=w,
                                 picks_correct=int(rng.binomial(99, 0.33)), picks_total=99))
        panel = toy_panel(rows)
        kept_05 = all_bucket_ids(categorize_feedback(panel, 0.05))
        kept_10 = all_bucket_ids(categorize_feedback(panel, 0.10))
        assert len(kept_05) > len(kept_10)


def synthetic_learning_panel(n=400, weeks=10, respond=0.5, seed=0):
    """Bet placement responds linearly to last week's share with known slope."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        for w in range(weeks):
            tm = int(rng.integers(1, 3))
            tw = int(rng.integers(0, 2))
            m = 13 * tm + 17 * tw
            correct = int(rng.binomial(m, 0.4))
            rows.append(
                dict(individual_id=i, week=w, tickets_midweek=tm, tickets_weekend=tw,
                     picks_total=m, picks_correct=correct,
                     share_correct=correct / m, placed_jackpot=1,
                     betting_expenditure=0.0, betting_income=0.0, won_prize=0,
                     savings_deposit=0.0, savings_withdrawal=0.0, net_savings=0.0,
                     loan_applied=0, loans_received=0.0, loan_repayments=0.0)
            )
    frame = pd.DataFrame(rows)[PANEL_COLUMNS]
    # overwrite placement as a linear response to the lagged share
    frame = frame.sort_values(["individual_id", "week"], ignore_index=True)
    lag = frame.groupby("individual_id")["share_correct"].shift(1)
    prob = np.clip(0.2 + respond * lag.fillna(0.4), 0, 1)
    frame["placed_jackpot"] = (rng.random(len(frame)) < prob).astype(int)
    return frame


class TestLearningRegression:
    def test_recovers_linear_response(self):
        panel = synthetic_learning_panel(n=2_000, weeks=12, respond=0.5, seed=3)
        result = learning_regression(panel)
        lo, hi = result.conf_int()[0]
        assert lo < 0.5 < hi
        assert result.extras["dependent"] == "placed_jackpot"
        assert result.extras["effect_per_sd"] == pytest.approx(
            result.coef[0] * result.extras["sd_instrument"]
        )

    def test_no_response_panel(self):
        panel = synthetic_learning_panel(n=1_500, weeks=12, respond=0.0, seed=4)
        result = learning_regression(panel)
        assert abs(result.tstats()[0]) < 3.0

    def test_prize_weeks_excluded(self):
        panel = synthetic_learning_panel(n=50, weeks=6, seed=5)
        with_prizes = panel.copy()
        with_prizes.loc[with_prizes["week"] == 2, "won_prize"] = 1
        with_prizes.loc[with_prizes["week"] == 2, "betting_income"] = 1000.0
        result = learning_regression(with_prizes)
        base = learning_regression(panel)
        assert result.n_obs < base.n_obs

    def test_insufficient_sample_errors(self):
        panel = synthetic_learning_panel(n=2, weeks=2, seed=6)
        with pytest.raises(InsufficientSampleError):
            learning_regression(panel)

    def test_ihs_expenditure_dependent(self):
        panel = synthetic_learning_panel(n=500, weeks=8, seed=7)
        rng = np.random.default_rng(8)
        panel["betting_expenditure"] = rng.integers(0, 300, len(panel)).astype(float)
        result = learning_regression(panel, dependent="ihs_expenditure")
        assert result.extras["dependent"] == "ihs_expenditure"


class TestFeedbackRegression:
    def test_runs_and_reports_wald(self):
        panel = synthetic_learning_panel(n=1_000, weeks=12, respond=0.6, seed=9)
        result = feedback_regression(panel)
        assert "abs_equal" in result.wald_tests
        stat, p = result.wald_tests["abs_equal"]
        assert 0 <= p <= 1
        assert result["positive_feedback"] > 0 > result["negative_feedback"]

    def test_two_way_variant(self):
        panel = synthetic_learning_panel(n=400, weeks=10, respond=0.6, seed=10)
        result = feedback_regression(panel, two_way=True)
        assert result.extras["two_way"]["n_weeks"] >= 9

    def test_restriction_reduces_individuals(self):
        panel = synthetic_learning_panel(n=600, weeks=5, respond=0.6, seed=11)
        unrestricted = feedback_regression(panel, restrict=False)
        restricted = feedback_regression(panel, restrict=True)
        assert restricted.n_individuals <= unrestricted.n_individuals


class TestTwoSlsPanel:
    def test_recovers_planted_beta(self):
        # panel DGP mirroring the simulator's financial equation
        rng = np.random.default_rng(12)
        panel = synthetic_learning_panel(n=2_500, weeks=12, respond=0.8, seed=13)
        exp = np.where(panel["placed_jackpot"] == 1, rng.integers(20, 200, len(panel)), 0)
        panel["betting_expenditure"] = exp.astype(float)
        v = rng.normal(6.0, 1.0, panel["individual_id"].nunique())
        latent = 0.5 * ihs(panel["betting_expenditure"].values) + v[panel["individual_id"]] \
            + rng.normal(0, 1, len(panel))
        panel["savings_withdrawal"] = np.sinh(np.maximum(latent, 0))
        result = two_sls(panel, "savings_withdrawal")
        lo, hi = result.conf_int()[0]
        assert lo < 0.5 < hi
        assert result.partial_f > 10
        assert result.extras["transform"] == "ihs"

    def test_raw_outcome_transform(self):
        rng = np.random.default_rng(1)
        panel = synthetic_learning_panel(n=500, weeks=8, respond=0.8, seed=14)
        panel["betting_expenditure"] = rng.integers(0, 300, len(panel)).astype(float)
        panel["net_savings"] = rng.normal(size=len(panel))
        result = two_sls(panel, "net_savings")
        assert result.extras["transform"] == "raw"


class TestHeterogeneityRegression:
    def test_dispersed_ability_positive_lag(self):
        rng = np.random.default_rng(15)
        rows = []
        for i in range(1_000):
            theta = rng.beta(10, 20)
            for w in range(8):
                m = 13
                c = rng.binomial(m, theta)
                rows.append(dict(individual_id=i, week=w, picks_correct=int(c), picks_total=m,
                                 tickets_midweek=1 + int(rng.integers(0, 2)),
                                 tickets_weekend=int(rng.integers(0, 2))))
        panel = toy_panel(rows)
        result = heterogeneity_regression(panel, lags=1)
        assert result.tstats()[0] > 1.96

    def test_degenerate_ability_no_persistence(self):
        rng = np.random.default_rng(16)
        rows = []
        for i in range(1_000):
            for w in range(8):
                c = rng.binomial(13, 1 / 3)
                rows.append(dict(individual_id=i, week=w, picks_correct=int(c), picks_total=13,
                                 tickets_midweek=1 + int(rng.integers(0, 2)),
                                 tickets_weekend=int(rng.integers(0, 2))))
        panel = toy_panel(rows)
        result = heterogeneity_regression(panel, lags=1)
        assert abs(result.tstats()[0]) < 3.0

    def test_week_fe_invariance_to_common_shift(self):
        rng = np.random.default_rng(17)
        rows = []
        for i in range(300):
            theta = rng.uniform(0.2, 0.5)
            for w in range(6):
                c = rng.binomial(100, theta)
                rows.append(dict(individual_id=i, week=w, picks_correct=int(c), picks_total=100,
                                 tickets_midweek=1 + int(rng.integers(0, 2)),
                                 tickets_weekend=int(rng.integers(0, 2))))
        panel = toy_panel(rows)
        base = heterogeneity_regression(panel, lags=1)
        shifted = panel.copy()
        bump = shifted["week"] == 3
        shifted.loc[bump, "share_correct"] = shifted.loc[bump, "share_correct"] + 0.05
        moved = heterogeneity_regression(shifted, lags=1)
        # week-FE absorb any common within-week shift of the dependent
        assert moved.coef[0] == pytest.approx(base.coef[0], abs=5e-3)
