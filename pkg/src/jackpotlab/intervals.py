"""Exact binomial (Clopper-Pearson) ability intervals and per-gambler
ability tables with the random-guessing reference line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .special import beta_ppf

__all__ = [
    "RANDOM_GUESS_ABILITY",
    "AbilityEstimate",
    "clopper_pearson",
    "AbilityTable",
    "ability_table",
]

# Three equally weighted outcomes per match (home / draw / away).
RANDOM_GUESS_ABILITY = 1.0 / 3.0


@dataclass(frozen=True)
class AbilityEstimate:
    """Point estimate s/m with an exact two-sided confidence interval."""

    successes: int
    matches: int
    point: float
    lower: float
    upper: float
    level: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower <= self.point <= self.upper <= 1.0:
            raise ValueError("interval must satisfy 0 <= lower <= point <= upper <= 1")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def excludes(self, value: float) -> bool:
        return value < self.lower or value > self.upper


def clopper_pearson(successes: int, matches: int, level: float = 0.95) -> AbilityEstimate:
    """Exact binomial interval from beta quantiles.

    lower solves Beta(s, m-s+1) at (1-level)/2 and upper solves
    Beta(s+1, m-s) at 1-(1-level)/2, with the conventional edges
    s=0 -> lower=0 and s=m -> upper=1.
    """
    if matches < 1:
        raise ValueError("need at least one match")
    if not 0 <= successes <= matches:
        raise ValueError(f"successes={successes} outside [0, {matches}]")
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must be in (0, 1)")
    alpha = 1.0 - level
    lower = 0.0 if successes == 0 else beta_ppf(alpha / 2.0, successes, matches - successes + 1)
    upper = 1.0 if successes == matches else beta_ppf(1.0 - alpha / 2.0, successes + 1, matches - successes)
    return AbilityEstimate(successes, matches, successes / matches, lower, upper, level)


@dataclass
class AbilityTable:
    """Per-gambler ability estimates for frequent bettors.

    ``frame`` has one row per retained individual, sorted by match count,
    with columns (individual_id, matches, successes, point, lower, upper,
    above_random, excludes_random).
    """

    frame: pd.DataFrame
    level: float
    min_matches: int
    reference: float
    fraction_above_reference: float
    has_disjoint_intervals: bool


def ability_table(panel: pd.DataFrame, min_matches: int = 500, level: float = 0.95) -> AbilityTable:
    """Ability estimates for individuals with at least ``min_matches`` picks.

    Aggregates each individual's total correct/total picks over the whole
    panel, attaches Clopper-Pearson intervals, and reports the fraction of
    point estimates above the random-guessing reference of 1/3 plus whether
    any two intervals are disjoint (evidence of ability heterogeneity).
    """
    totals = (
        panel.groupby("individual_id", as_index=False)[["picks_correct", "picks_total"]]
        .sum()
        .rename(columns={"picks_correct": "successes", "picks_total": "matches"})
    )
    totals = totals[totals["matches"] >= max(min_matches, 1)]

    rows = []
    cache: dict[tuple[int, int], AbilityEstimate] = {}
    for rec in totals.itertuples(index=False):
        key = (int(rec.successes), int(rec.matches))
        est = cache.get(key)
        if est is None:
            est = cache[key] = clopper_pearson(key[0], key[1], level)
        rows.append(
            {
                "individual_id": rec.individual_id,
                "matches": key[1],
                "successes": key[0],
                "point": est.point,
                "lower": est.lower,
                "upper": est.upper,
                "above_random": est.point > RANDOM_GUESS_ABILITY,
                "excludes_random": est.excludes(RANDOM_GUESS_ABILITY),
            }
        )
    columns = ["individual_id", "matches", "successes", "point", "lower", "upper",
               "above_random", "excludes_random"]
    frame = pd.DataFrame(rows, columns=columns).sort_values(
        ["matches", "individual_id"], ignore_index=True
    )
    fraction = float(frame["above_random"].mean()) if len(frame) else float("nan")
    disjoint = bool(len(frame) >= 2 and frame["upper"].min() < frame["lower"].max())
    return AbilityTable(frame, level, min_matches, RANDOM_GUESS_ABILITY, fraction, disjoint)
