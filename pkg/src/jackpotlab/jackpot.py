"""Jackpot slates, prize ladders, outcome simulation and exact win odds.

A jackpot asks for a 1/x/2 prediction on every match of a slate (13 matches
midweek, 17 on the weekend). Prizes start at 10 and 12 correct predictions
respectively and grow along a configurable ladder. Also provides the
multibet comparison (stake times the product of chosen decimal odds) and
exact prize probabilities for i.i.d. and per-match success probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .special import binom_tail_upper

__all__ = [
    "MIDWEEK_MATCHES",
    "WEEKEND_MATCHES",
    "MIDWEEK_PRIZE_THRESHOLD",
    "WEEKEND_PRIZE_THRESHOLD",
    "KSH_PER_USD",
    "USD_WEEKEND_LADDER",
    "DEFAULT_WEEKEND_LADDER",
    "DEFAULT_MIDWEEK_LADDER",
    "PICK_SYMBOLS",
    "JackpotSpec",
    "JackpotResult",
    "simulate_jackpot",
    "prize_tier",
    "prize_probability",
    "multibet_payout",
    "implied_probabilities",
    "bookmaker_margin",
    "favorite_probabilities",
    "favorite_strategy_probability",
    "poisson_binomial_tail",
    "realized_outcome_odds",
    "load_slate",
    "slate_from_dict",
]

MIDWEEK_MATCHES = 13
WEEKEND_MATCHES = 17
MIDWEEK_PRIZE_THRESHOLD = 10
WEEKEND_PRIZE_THRESHOLD = 12

# Approximate exchange rate used for the shipped ladder defaults.
KSH_PER_USD = 100

# Weekend bonus ladder in USD. 12-15 correct are the published 31 March 2019
# bonuses; 16 is interpolated; 17 matches the quoted KSH 129m jackpot.
USD_WEEKEND_LADDER = {12: 460, 13: 2_190, 14: 8_140, 15: 64_300, 16: 288_000, 17: 1_290_000}

DEFAULT_WEEKEND_LADDER = {k: v * KSH_PER_USD for k, v in USD_WEEKEND_LADDER.items()}

# Midweek ladder (KSH): no published example, values chosen to grow steeply.
DEFAULT_MIDWEEK_LADDER = {10: 35_000, 11: 180_000, 12: 1_200_000, 13: 12_000_000}

PICK_SYMBOLS = ("1", "x", "2")  # home win, draw, away win

_KIND_SHAPES = {
    "midweek": (MIDWEEK_MATCHES, MIDWEEK_PRIZE_THRESHOLD),
    "weekend": (WEEKEND_MATCHES, WEEKEND_PRIZE_THRESHOLD),
}


@dataclass(frozen=True)
class JackpotSpec:
    """One jackpot offering: slate size, prize rules and optional odds.

    ``prize_ladder`` maps every correct-count from the threshold up to
    ``n_matches`` to a strictly increasing prize. ``match_odds`` holds one
    (home, draw, away) decimal-odds triple per match; the inverse odds of a
    real slate sum to more than one (the bookmaker's margin).
    ``outcomes`` optionally records the realized result symbols.
    """

    kind: str
    n_matches: int
    prize_threshold: int
    prize_ladder: dict[int, float]
    match_odds: tuple[tuple[float, float, float], ...] | None = None
    outcomes: tuple[str, ...] | None = None
    match_labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind in _KIND_SHAPES:
            n, threshold = _KIND_SHAPES[self.kind]
            if (self.n_matches, self.prize_threshold) != (n, threshold):
                raise ValueError(
                    f"{self.kind} jackpot must have {n} matches and prize threshold {threshold}"
                )
        elif self.kind != "custom":
            raise ValueError(f"unknown jackpot kind {self.kind!r}")
        if self.n_matches < 1:
            raise ValueError("n_matches must be >= 1")
        if not 1 <= self.prize_threshold <= self.n_matches:
            raise ValueError("prize_threshold must be in [1, n_matches]")
        expected_keys = list(range(self.prize_threshold, self.n_matches + 1))
        if sorted(self.prize_ladder) != expected_keys:
            raise ValueError(
                f"prize ladder must cover correct-counts {expected_keys[0]}..{expected_keys[-1]}"
            )
        values = [self.prize_ladder[k] for k in expected_keys]
        if values[0] <= 0 or any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("prize ladder must be positive and strictly increasing")
        if self.match_odds is not None:
            if len(self.match_odds) != self.n_matches:
                raise ValueError("match_odds must have one triple per match")
            for i, triple in enumerate(self.match_odds):
                if len(triple) != 3 or any(o <= 1.0 for o in triple):
                    raise ValueError(f"match {i}: odds must be three decimals > 1")
                if sum(1.0 / o for o in triple) <= 1.0:
                    raise ValueError(f"match {i}: inverse odds must sum to > 1 (bookmaker margin)")
        if self.outcomes is not None:
            if len(self.outcomes) != self.n_matches:
                raise ValueError("outcomes must have one symbol per match")
            bad = [s for s in self.outcomes if s not in PICK_SYMBOLS]
            if bad:
                raise ValueError(f"invalid outcome symbols {bad}")

    @classmethod
    def midweek(cls, prize_ladder: dict[int, float] | None = None, **kwargs) -> "JackpotSpec":
        ladder = dict(DEFAULT_MIDWEEK_LADDER if prize_ladder is None else prize_ladder)
        return cls("midweek", MIDWEEK_MATCHES, MIDWEEK_PRIZE_THRESHOLD, ladder, **kwargs)

    @classmethod
    def weekend(cls, prize_ladder: dict[int, float] | None = None, **kwargs) -> "JackpotSpec":
        ladder = dict(DEFAULT_WEEKEND_LADDER if prize_ladder is None else prize_ladder)
        return cls("weekend", WEEKEND_MATCHES, WEEKEND_PRIZE_THRESHOLD, ladder, **kwargs)

    def prize_lookup(self) -> np.ndarray:
        """Prize indexed by correct-count, zeros below the threshold."""
        table = np.zeros(self.n_matches + 1)
        for k, v in self.prize_ladder.items():
            table[k] = v
        return table


@dataclass(frozen=True)
class JackpotResult:
    """Outcome of one simulated ticket."""

    correct: int
    prize: float
    won_prize: bool


def simulate_jackpot(spec: JackpotSpec, ability: float, rng: np.random.Generator) -> JackpotResult:
    """Draw one ticket: correct ~ Binomial(n_matches, ability)."""
    if not 0.0 <= ability <= 1.0:
        raise ValueError(f"ability must be in [0, 1], got {ability}")
    correct = int(rng.binomial(spec.n_matches, ability))
    prize = prize_tier(spec, correct)
    return JackpotResult(correct, prize, prize > 0.0)


def prize_tier(spec: JackpotSpec, correct: int) -> float:
    """Prize (0 below the threshold) for a given correct-count."""
    if not 0 <= correct <= spec.n_matches:
        raise ValueError(f"correct={correct} outside [0, {spec.n_matches}]")
    return float(spec.prize_ladder.get(correct, 0.0))


def prize_probability(spec: JackpotSpec, ability: float) -> float:
    """Exact P(correct >= threshold) for i.i.d. per-match success prob."""
    if not 0.0 <= ability <= 1.0:
        raise ValueError(f"ability must be in [0, 1], got {ability}")
    return binom_tail_upper(spec.n_matches, spec.prize_threshold, ability)


def multibet_payout(outcome_odds, stake: float) -> float:
    """Stake times the product of the chosen outcomes' decimal odds."""
    odds = list(outcome_odds)
    if not odds:
        raise ValueError("multibet requires at least one leg")
    if any(o <= 0.0 for o in odds):
        raise ValueError("odds must be positive")
    if stake <= 0.0:
        raise ValueError("stake must be positive")
    product = 1.0
    for o in odds:
        product *= o
    return stake * product


def implied_probabilities(odds_triple) -> tuple[float, float, float]:
    """Margin-normalized outcome probabilities: (1/o_i) / sum(1/o_j)."""
    inv = [1.0 / o for o in odds_triple]
    total = sum(inv)
    return tuple(v / total for v in inv)


def bookmaker_margin(odds_triple) -> float:
    """Excess of summed inverse odds over 1."""
    return sum(1.0 / o for o in odds_triple) - 1.0


def favorite_probabilities(spec: JackpotSpec) -> np.ndarray:
    """Implied probability of each match's favorite (lowest odds) outcome."""
    if spec.match_odds is None:
        raise ValueError("spec carries no match odds")
    probs = []
    for triple in spec.match_odds:
        implied = implied_probabilities(triple)
        probs.append(max(implied))
    return np.asarray(probs)


def poisson_binomial_tail(probs, k: int) -> float:
    """P(sum of independent Bernoulli(p_j) >= k), by exact convolution."""
    probs = np.asarray(probs, dtype=float)
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    dist = np.zeros(len(probs) + 1)
    dist[0] = 1.0
    for j, p in enumerate(probs):
        dist[1 : j + 2] = dist[1 : j + 2] * (1.0 - p) + dist[: j + 1] * p
        dist[0] *= 1.0 - p
    if k <= 0:
        return 1.0
    if k > len(probs):
        return 0.0
    return float(dist[k:].sum())


def favorite_strategy_probability(spec: JackpotSpec) -> float:
    """P(win any prize) when picking every match's favorite."""
    return poisson_binomial_tail(favorite_probabilities(spec), spec.prize_threshold)


def realized_outcome_odds(spec: JackpotSpec) -> tuple[float, ...]:
    """Decimal odds of each match's realized outcome."""
    if spec.match_odds is None or spec.outcomes is None:
        raise ValueError("spec needs both match odds and recorded outcomes")
    index = {sym: i for i, sym in enumerate(PICK_SYMBOLS)}
    return tuple(spec.match_odds[j][index[sym]] for j, sym in enumerate(spec.outcomes))


def slate_from_dict(payload: dict) -> JackpotSpec:
    """Build a JackpotSpec from the JSON slate schema."""
    kind = payload.get("kind", "custom")
    matches = payload["matches"]
    odds = tuple(tuple(float(o) for o in m["odds"]) for m in matches)
    outcomes = None
    if all("outcome" in m for m in matches):
        outcomes = tuple(str(m["outcome"]) for m in matches)
    labels = None
    if all("home" in m and "away" in m for m in matches):
        labels = tuple(f"{m['home']} vs {m['away']}" for m in matches)
    ladder = None
    if "prize_ladder" in payload:
        ladder = {int(k): float(v) for k, v in payload["prize_ladder"].items()}
    if kind == "midweek":
        return JackpotSpec.midweek(ladder, match_odds=odds, outcomes=outcomes, match_labels=labels)
    if kind == "weekend":
        return JackpotSpec.weekend(ladder, match_odds=odds, outcomes=outcomes, match_labels=labels)
    n = len(matches)
    threshold = int(payload["prize_threshold"])
    if ladder is None:
        raise ValueError("custom slates must carry a prize_ladder")
    return JackpotSpec("custom", n, threshold, ladder, match_odds=odds, outcomes=outcomes, match_labels=labels)


def load_slate(path) -> JackpotSpec:
    """Load a jackpot slate (odds triples, optional outcomes) from JSON."""
    with open(Path(path), "r", encoding="utf-8") as fh:
        return slate_from_dict(json.load(fh))


def example_weekend_slate() -> JackpotSpec:
    """The packaged 17-match example weekend slate with realized outcomes."""
    from importlib.resources import files

    payload = json.loads(files("jackpotlab.data").joinpath("weekend_slate_2021-06-05.json").read_text())
    return slate_from_dict(payload)
