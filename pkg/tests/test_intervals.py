import math

import numpy as np
import pandas as pd
import pytest
import scipy.stats

from jackpotlab.intervals import (
    RANDOM_GUESS_ABILITY,
    ability_table,
    clopper_pearson,
)


def binomial_tail_bisect(s, m, level=0.95):
    """Independent oracle: bisection on direct binomial tail sums.

    lower = largest p with P(X >= s | p) <= alpha/2 (0 when s=0);
    upper = smallest p with P(X <= s | p) <= alpha/2 (1 when s=m).
    """
    alpha = 1.0 - level

    def upper_tail(p):  # P(X >= s)
        return sum(math.comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(s, m + 1))

    def lower_tail(p):  # P(X <= s)
        return sum(math.comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(0, s + 1))

    def bisect(f, target):
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(mid) <= target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    lower = 0.0 if s == 0 else bisect(upper_tail, alpha / 2)
    # P(X <= s | p) decreases in p: smallest acceptable p via mirrored bisection
    if s == m:
        upper = 1.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if lower_tail(mid) > alpha / 2:
                lo = mid
            else:
                hi = mid
        upper = 0.5 * (lo + hi)
    return lower, upper


class TestClopperPearson:
    def test_zero_successes_edge(self):
        est = clopper_pearson(0, 20)
        assert est.lower == 0.0
        assert est.upper > 0.0

    def test_all_successes_edge(self):
        est = clopper_pearson(20, 20)
        assert est.upper == 1.0
        assert est.lower < 1.0

    def test_oracle_at_33_of_100(self):
        est = clopper_pearson(33, 100)
        lo, hi = binomial_tail_bisect(33, 100)
        assert est.lower == pytest.approx(lo, abs=1e-6)
        assert est.upper == pytest.approx(hi, abs=1e-6)

    def test_matches_scipy_spot_checks(self):
        for s, m in [(3, 17), (50, 119), (250, 500), (1, 1000)]:
            est = clopper_pearson(s, m)
            lo = scipy.stats.beta.ppf(0.025, s, m - s + 1) if s > 0 else 0.0
            hi = scipy.stats.beta.ppf(0.975, s + 1, m - s) if s < m else 1.0
            assert est.lower == pytest.approx(float(lo), abs=1e-9)
            assert est.upper == pytest.approx(float(hi), abs=1e-9)

    def test_interval_orders(self):
        est = clopper_pearson(7, 19, level=0.9)
        assert 0 <= est.lower <= est.point <= est.upper <= 1

    def test_zero_matches_errors(self):
        with pytest.raises(ValueError):
            clopper_pearson(0, 0)

    def test_width_at_1129_matches(self):
        # large-sample width for mid-range shares is below 0.06
        est = clopper_pearson(452, 1129)  # share = 0.40
        assert est.width < 0.06

    def test_monte_carlo_coverage_small(self):
        rng = np.random.default_rng(31)
        for theta, m in [(0.2, 17), (0.5, 60)]:
            draws = rng.binomial(m, theta, size=2_000)
            bounds = {s: clopper_pearson(int(s), m) for s in np.unique(draws)}
            covered = np.array([bounds[s].lower <= theta <= bounds[s].upper for s in draws])
            assert covered.mean() >= 0.94


class TestAbilityTable:
    def _panel(self, counts):
        rows = []
        for i, (s, m) in enumerate(counts):
            rows.append(
                {"individual_id": i, "week": 0, "picks_correct": s, "picks_total": m}
            )
        return pd.DataFrame(rows)

    def test_filters_and_sorts_by_matches(self):
        table = ability_table(self._panel([(40, 120), (10, 90), (300, 700)]), min_matches=100)
        assert list(table.frame["matches"]) == [120, 700]

    def test_fraction_above_reference(self):
        table = ability_table(self._panel([(50, 100), (20, 100)]), min_matches=50)
        assert table.fraction_above_reference == 0.5
        assert table.reference == RANDOM_GUESS_ABILITY

    def test_disjoint_intervals_flagged(self):
        table = ability_table(self._panel([(100, 600), (350, 600)]), min_matches=100)
        assert table.has_disjoint_intervals

    def test_overlapping_intervals_not_flagged(self):
        table = ability_table(self._panel([(200, 600), (210, 600)]), min_matches=100)
        assert not table.has_disjoint_intervals

    def test_random_population_calibration(self):
        # theta = 1/3 everywhere: about half the point estimates above 1/3
        # and about alpha of the intervals exclude it
        rng = np.random.default_rng(8)
        m = 600
        draws = rng.binomial(m, RANDOM_GUESS_ABILITY, size=400)
        panel = self._panel([(int(s), m) for s in draws])
        table = ability_table(panel, min_matches=100)
        assert abs(table.fraction_above_reference - 0.5) < 0.1
        assert table.frame["excludes_random"].mean() < 0.10

    def test_aggregates_weeks(self):
        panel = pd.DataFrame(
            {
                "individual_id": [1, 1, 1],
                "week": [0, 1, 2],
                "picks_correct": [5, 6, 7],
                "picks_total": [30, 30, 40],
            }
        )
        table = ability_table(panel, min_matches=100)
        assert list(table.frame["matches"]) == [100]
        assert list(table.frame["successes"]) == [18]
