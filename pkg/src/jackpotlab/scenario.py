"""Scenario configuration: population mixtures of agent policies, financial
ground truth, and JSON (de)serialization with field-level diagnostics.

A scenario is a population of agents split across policy components. Each
component carries an ability distribution, a prior strength, an update rule,
a cutoff process and ticket/stake distributions. The financial block plants
the true elasticities the estimators are validated against.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .beliefs import CutoffProcess, UpdateRule

__all__ = [
    "ConfigError",
    "CountDistribution",
    "AbilityDistribution",
    "PolicyComponent",
    "FinancialParams",
    "ScenarioConfig",
    "AgentPolicy",
    "load_config",
    "default_scenario",
]

DEFAULT_START_DATE = dt.date(2017, 1, 2)  # a Monday


class ConfigError(ValueError):
    """Invalid scenario configuration; message carries the field path."""


@dataclass(frozen=True)
class CountDistribution:
    """Non-negative integer draws: constant, shifted Poisson or categorical."""

    kind: str
    value: int = 1
    mean: float = 1.0
    minimum: int = 0
    values: tuple[int, ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if self.value < 0:
                raise ConfigError("constant value must be >= 0")
        elif self.kind == "poisson":
            if self.mean < self.minimum:
                raise ConfigError("poisson mean must be >= its minimum")
            if self.minimum < 0:
                raise ConfigError("poisson minimum must be >= 0")
        elif self.kind == "categorical":
            if not self.values or len(self.values) != len(self.probs):
                raise ConfigError("categorical needs matching values/probs")
            if any(v < 0 for v in self.values):
                raise ConfigError("categorical values must be >= 0")
            if abs(sum(self.probs) - 1.0) > 1e-9 or any(p < 0 for p in self.probs):
                raise ConfigError("categorical probs must be non-negative and sum to 1")
        else:
            raise ConfigError(f"unknown count distribution kind {self.kind!r}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.value, dtype=np.int64)
        if self.kind == "poisson":
            return self.minimum + rng.poisson(self.mean - self.minimum, size=size)
        return rng.choice(np.asarray(self.values, dtype=np.int64), size=size, p=self.probs)

    @property
    def min_value(self) -> int:
        if self.kind == "constant":
            return self.value
        if self.kind == "poisson":
            return self.minimum
        return min(v for v, p in zip(self.values, self.probs) if p > 0)

    @classmethod
    def from_dict(cls, payload: dict, where: str) -> "CountDistribution":
        try:
            kind = payload["kind"]
            if kind == "constant":
                return cls("constant", value=int(payload["value"]))
            if kind == "poisson":
                return cls("poisson", mean=float(payload["mean"]), minimum=int(payload.get("min", 0)))
            if kind == "categorical":
                return cls(
                    "categorical",
                    values=tuple(int(v) for v in payload["values"]),
                    probs=tuple(float(p) for p in payload["probs"]),
                )
            raise ConfigError(f"{where}.kind: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "poisson":
            return {"kind": "poisson", "mean": self.mean, "min": self.minimum}
        return {"kind": "categorical", "values": list(self.values), "probs": list(self.probs)}


@dataclass(frozen=True)
class AbilityDistribution:
    """Per-agent true ability draws on [0, 1]."""

    kind: str
    value: float = 1.0 / 3.0
    alpha: float = 1.0
    beta: float = 1.0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "point":
            if not 0.0 <= self.value <= 1.0:
                raise ConfigError("point ability must be in [0, 1]")
        elif self.kind == "beta":
            if self.alpha <= 0 or self.beta <= 0:
                raise ConfigError("beta ability needs positive shape parameters")
        elif self.kind == "uniform":
            if not 0.0 <= self.low <= self.high <= 1.0:
                raise ConfigError("uniform ability needs 0 <= low <= high <= 1")
        else:
            raise ConfigError(f"unknown ability distribution kind {self.kind!r}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "point":
            return np.full(size, self.value)
        if self.kind == "beta":
            return rng.beta(self.alpha, self.beta, size=size)
        return rng.uniform(self.low, self.high, size=size)

    @classmethod
    def from_dict(cls, payload: dict, where: str) -> "AbilityDistribution":
        try:
            kind = payload["kind"]
            if kind == "point":
                return cls("point", value=float(payload["value"]))
            if kind == "beta":
                return cls("beta", alpha=float(payload["alpha"]), beta=float(payload["beta"]))
            if kind == "uniform":
                return cls("uniform", low=float(payload["low"]), high=float(payload["high"]))
            raise ConfigError(f"{where}.kind: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def to_dict(self) -> dict:
        if self.kind == "point":
            return {"kind": "point", "value": self.value}
        if self.kind == "beta":
            return {"kind": "beta", "alpha": self.alpha, "beta": self.beta}
        return {"kind": "uniform", "low": self.low, "high": self.high}


def _update_rule_from_dict(payload: dict, where: str) -> UpdateRule:
    try:
        kind = payload["kind"]
        if kind in ("bayesian", "stubborn"):
            return UpdateRule(kind)
        if kind == "asymmetric":
            return UpdateRule.asymmetric(
                float(payload["positive_weight"]), float(payload["negative_weight"])
            )
        raise ConfigError(f"{where}.kind: unknown kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _update_rule_to_dict(rule: UpdateRule) -> dict:
    if rule.kind == "asymmetric":
        return {"kind": "asymmetric", "positive_weight": rule.positive_weight,
                "negative_weight": rule.negative_weight}
    return {"kind": rule.kind}


def _cutoff_from_dict(payload: dict, where: str) -> CutoffProcess:
    try:
        return CutoffProcess(
            mean_cutoff=float(payload["mean"]),
            dispersion=float(payload.get("dispersion", 0.0)),
            kind=str(payload.get("kind", "uniform")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class PolicyComponent:
    """One slice of the population mixture."""

    weight: float
    update: UpdateRule
    ability: AbilityDistribution
    prior_matches: int
    cutoff: CutoffProcess
    tickets_midweek: CountDistribution
    tickets_weekend: CountDistribution
    stake: CountDistribution

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigError("policy weight must be in [0, 1]")
        if self.prior_matches < 0:
            raise ConfigError("prior_matches must be >= 0")
        if self.stake.min_value < 1:
            raise ConfigError("stakes must be at least 1 KSH")

    @classmethod
    def from_dict(cls, payload: dict, where: str) -> "PolicyComponent":
        try:
            return cls(
                weight=float(payload["weight"]),
                update=_update_rule_from_dict(payload["update"], f"{where}.update"),
                ability=AbilityDistribution.from_dict(payload["ability"], f"{where}.ability"),
                prior_matches=int(payload.get("prior_matches", 0)),
                cutoff=_cutoff_from_dict(payload["cutoff"], f"{where}.cutoff"),
                tickets_midweek=CountDistribution.from_dict(
                    payload["tickets_midweek"], f"{where}.tickets_midweek"),
                tickets_weekend=CountDistribution.from_dict(
                    payload["tickets_weekend"], f"{where}.tickets_weekend"),
                stake=CountDistribution.from_dict(payload["stake"], f"{where}.stake"),
            )
        except KeyError as exc:
            raise ConfigError(f"{where}: missing field {exc}") from None

    def to_dict(self) -> dict:
        return {
            "weight": self.weight,
            "update": _update_rule_to_dict(self.update),
            "ability": self.ability.to_dict(),
            "prior_matches": self.prior_matches,
            "cutoff": {"kind": self.cutoff.kind, "mean": self.cutoff.mean_cutoff,
                       "dispersion": self.cutoff.dispersion},
            "tickets_midweek": self.tickets_midweek.to_dict(),
            "tickets_weekend": self.tickets_weekend.to_dict(),
            "stake": self.stake.to_dict(),
        }


@dataclass(frozen=True)
class FinancialParams:
    """Planted financial ground truth (all elasticities on the ihs scale)."""

    beta_savings_withdrawal: float = 0.0
    beta_savings_deposit: float = 0.0
    beta_loan: float = 0.0
    fixed_effect_scale: float = 1.0
    noise_scale: float = 1.0
    savings_baseline: float = 6.0
    loan_baseline: float = 0.0

    def __post_init__(self) -> None:
        if self.fixed_effect_scale < 0 or self.noise_scale < 0:
            raise ConfigError("scale parameters must be >= 0")

    @classmethod
    def from_dict(cls, payload: dict, where: str) -> "FinancialParams":
        known = {f: payload[f] for f in payload}
        allowed = {
            "beta_savings_withdrawal", "beta_savings_deposit", "beta_loan",
            "fixed_effect_scale", "noise_scale", "savings_baseline", "loan_baseline",
        }
        unknown = set(known) - allowed
        if unknown:
            raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
        try:
            return cls(**{k: float(v) for k, v in known.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "beta_savings_withdrawal": self.beta_savings_withdrawal,
            "beta_savings_deposit": self.beta_savings_deposit,
            "beta_loan": self.beta_loan,
            "fixed_effect_scale": self.fixed_effect_scale,
            "noise_scale": self.noise_scale,
            "savings_baseline": self.savings_baseline,
            "loan_baseline": self.loan_baseline,
        }


@dataclass(frozen=True)
class AgentPolicy:
    """One realized agent: drawn ability, prior counts and behavior rules."""

    true_ability: float
    prior: tuple[float, float]
    update_rule: UpdateRule
    cutoff_process: CutoffProcess
    tickets_per_active_week: tuple[CountDistribution, CountDistribution]
    stake_per_ticket: CountDistribution

    def __post_init__(self) -> None:
        if not 0.0 <= self.true_ability <= 1.0:
            raise ConfigError("true_ability must be in [0, 1]")
        if self.stake_per_ticket.min_value < 1:
            raise ConfigError("stakes must be at least 1 KSH")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full simulation recipe; identical config + seed is bit-reproducible."""

    population: int
    weeks: int
    policies: tuple[PolicyComponent, ...]
    financial: FinancialParams = field(default_factory=FinancialParams)
    start_date: dt.date = DEFAULT_START_DATE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 1:
            raise ConfigError("population must be >= 1")
        if self.weeks < 2:
            raise ConfigError("weeks must be >= 2 (lags require at least two)")
        if not self.policies:
            raise ConfigError("at least one policy component required")
        total = sum(p.weight for p in self.policies)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"policy weights must sum to 1, got {total}")
        if self.start_date.weekday() != 0:
            raise ConfigError(f"start_date must be a Monday, got {self.start_date}")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))

    @classmethod
    def from_dict(cls, payload: dict) -> "ScenarioConfig":
        try:
            policies = tuple(
                PolicyComponent.from_dict(p, f"policies[{i}]")
                for i, p in enumerate(payload["policies"])
            )
            financial = FinancialParams.from_dict(payload.get("financial", {}), "financial")
            start = dt.date.fromisoformat(payload.get("start_date", DEFAULT_START_DATE.isoformat()))
            return cls(
                population=int(payload["population"]),
                weeks=int(payload["weeks"]),
                policies=policies,
                financial=financial,
                start_date=start,
                seed=int(payload.get("seed", 0)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing top-level field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "weeks": self.weeks,
            "policies": [p.to_dict() for p in self.policies],
            "financial": self.financial.to_dict(),
            "start_date": self.start_date.isoformat(),
            "seed": self.seed,
        }

    def to_json(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def load_config(path) -> ScenarioConfig:
    """Load and validate a scenario JSON; ConfigError carries diagnostics."""
    try:
        with open(Path(path), "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from None
    return ScenarioConfig.from_dict(payload)


def default_scenario(
    population: int = 2_000,
    weeks: int = 60,
    *,
    seed: int = 0,
    beta_savings_withdrawal: float = 0.0,
    beta_savings_deposit: float = 0.0,
    beta_loan: float = 0.0,
    update: UpdateRule | None = None,
) -> ScenarioConfig:
    """A single-component Bayesian-learner population with dispersed ability.

    Abilities are Beta(10, 20) (mean 1/3), priors come from 26 watched
    matches, cutoffs are uniform around 0.31 with half-width 0.07, and
    ticket counts vary so the ticket controls have within variation.
    """
    component = PolicyComponent(
        weight=1.0,
        update=update or UpdateRule.bayesian(),
        ability=AbilityDistribution("beta", alpha=10.0, beta=20.0),
        prior_matches=26,
        cutoff=CutoffProcess(mean_cutoff=0.31, dispersion=0.07, kind="uniform"),
        tickets_midweek=CountDistribution("categorical", values=(1, 2), probs=(0.7, 0.3)),
        tickets_weekend=CountDistribution("categorical", values=(1, 2, 3), probs=(0.6, 0.3, 0.1)),
        stake=CountDistribution("categorical", values=(20, 50, 100, 200), probs=(0.4, 0.3, 0.2, 0.1)),
    )
    return ScenarioConfig(
        population=population,
        weeks=weeks,
        policies=(component,),
        financial=FinancialParams(
            beta_savings_withdrawal=beta_savings_withdrawal,
            beta_savings_deposit=beta_savings_deposit,
            beta_loan=beta_loan,
        ),
        seed=seed,
    )
