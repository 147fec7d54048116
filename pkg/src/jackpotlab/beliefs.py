"""Beta-Binomial beliefs over betting ability and the cutoff betting rule.

A gambler's belief about their per-match prediction ability is a Beta
distribution held as success/failure counts: a prior component accumulated
from watching matches and a betting component accumulated from placed bets.
Updating is conjugate (count addition), optionally frozen ("stubborn") or
reweighted ("asymmetric") for simulation contrasts. The betting decision
compares expected ability against a weekly cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Belief",
    "UpdateRule",
    "CutoffProcess",
    "posterior_update",
    "expected_ability",
    "belief_variance",
    "decide_bet",
]


def _check_count(name: str, value: float) -> None:
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class Belief:
    """Beta belief over ability, stored as four non-negative counts.

    ``prior_*`` counts come from matches watched before betting started;
    ``bet_*`` counts from placed bets. The all-zero belief is the improper
    (Haldane) case: it carries no information and has no defined mean.
    """

    prior_successes: float = 0
    prior_failures: float = 0
    bet_successes: float = 0
    bet_failures: float = 0

    def __post_init__(self) -> None:
        _check_count("prior_successes", self.prior_successes)
        _check_count("prior_failures", self.prior_failures)
        _check_count("bet_successes", self.bet_successes)
        _check_count("bet_failures", self.bet_failures)

    @property
    def matches_watched(self) -> float:
        return self.prior_successes + self.prior_failures

    @property
    def matches_bet(self) -> float:
        return self.bet_successes + self.bet_failures

    @property
    def total_matches(self) -> float:
        return self.matches_watched + self.matches_bet

    @property
    def is_uninformed(self) -> bool:
        """True for the zero-count (Haldane) belief."""
        return self.total_matches == 0


@dataclass(frozen=True)
class UpdateRule:
    """How bet results feed the belief.

    ``bayesian`` adds counts one-for-one; ``stubborn`` ignores results
    entirely; ``asymmetric`` scales success/failure increments by the two
    weights (``bayesian`` is the weight-(1, 1) special case).
    """

    kind: str = "bayesian"
    positive_weight: float = 1.0
    negative_weight: float = 1.0

    _KINDS = ("bayesian", "stubborn", "asymmetric")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown update rule kind {self.kind!r}")
        _check_count("positive_weight", self.positive_weight)
        _check_count("negative_weight", self.negative_weight)

    @classmethod
    def bayesian(cls) -> "UpdateRule":
        return cls("bayesian")

    @classmethod
    def stubborn(cls) -> "UpdateRule":
        return cls("stubborn")

    @classmethod
    def asymmetric(cls, positive_weight: float, negative_weight: float) -> "UpdateRule":
        return cls("asymmetric", positive_weight, negative_weight)

    @property
    def effective_weights(self) -> tuple[float, float]:
        """(success, failure) increment multipliers implied by the rule."""
        if self.kind == "bayesian":
            return (1.0, 1.0)
        if self.kind == "stubborn":
            return (0.0, 0.0)
        return (self.positive_weight, self.negative_weight)


@dataclass(frozen=True)
class CutoffProcess:
    """Week-to-week distribution of the betting cutoff.

    Draws are per individual per week and clamped to [0, 1], so the
    dispersion parameter is unconstrained. ``uniform`` draws on
    [mean - dispersion, mean + dispersion]; ``normal`` draws
    N(mean, dispersion^2).
    """

    mean_cutoff: float
    dispersion: float = 0.0
    kind: str = "uniform"

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean_cutoff <= 1.0:
            raise ValueError(f"mean_cutoff must be in [0, 1], got {self.mean_cutoff}")
        _check_count("dispersion", self.dispersion)
        if self.kind not in ("uniform", "normal"):
            raise ValueError(f"unknown cutoff process kind {self.kind!r}")

    def draw(self, rng: np.random.Generator, size: int | None = None):
        """Draw cutoff(s), clamped to [0, 1]."""
        if self.kind == "uniform":
            raw = self.mean_cutoff + self.dispersion * (2.0 * rng.uniform(size=size) - 1.0)
        else:
            raw = self.mean_cutoff + self.dispersion * rng.standard_normal(size=size)
        return np.clip(raw, 0.0, 1.0) if size is not None else float(min(max(raw, 0.0), 1.0))


def posterior_update(belief: Belief, successes: float, failures: float, rule: UpdateRule) -> Belief:
    """Fold a batch of bet results into the belief under the given rule.

    Conjugacy makes this pure count addition, so batched and sequential
    updates agree exactly. Asymmetric rules scale the increments, turning
    the bet counts into non-negative reals.
    """
    _check_count("successes", successes)
    _check_count("failures", failures)
    w_pos, w_neg = rule.effective_weights
    if rule.kind == "stubborn":
        return belief
    return Belief(
        belief.prior_successes,
        belief.prior_failures,
        belief.bet_successes + w_pos * successes,
        belief.bet_failures + w_neg * failures,
    )


def expected_ability(belief: Belief) -> float | None:
    """E[theta] = (prior + bet successes) / total matches.

    Returns None for the uninformed (zero-count) belief, where the ratio is
    undefined; callers decide what that means (see ``decide_bet``).
    """
    total = belief.total_matches
    if total == 0:
        return None
    return (belief.prior_successes + belief.bet_successes) / total


def belief_variance(belief: Belief) -> float:
    """Var[theta] = s*u / (m^2 (m+1)) with s, u, m the pooled counts."""
    total = belief.total_matches
    if total == 0:
        raise ValueError("variance undefined for the uninformed belief")
    s = belief.prior_successes + belief.bet_successes
    u = belief.prior_failures + belief.bet_failures
    return (s * u) / (total * total * (total + 1.0))


def decide_bet(belief: Belief, cutoff: float) -> bool:
    """Bet iff expected ability >= cutoff (weak inequality).

    The uninformed belief bets unconditionally: agents with no history at
    all enter gambling, where their priors then form.
    """
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError(f"cutoff must be in [0, 1], got {cutoff}")
    mean = expected_ability(belief)
    if mean is None:
        return True
    return mean >= cutoff
