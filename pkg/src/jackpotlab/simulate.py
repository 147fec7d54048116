"""Synthetic gambler populations with planted ground truth.

Each week every agent draws a cutoff, bets iff expected ability clears it,
buys midweek/weekend tickets, has per-ticket correct counts drawn
Binomial(n_matches, true ability), wins ladder prizes at or above the
thresholds, updates beliefs per policy, and generates financial outcomes
Y = beta * arsinh(betting expenditure) + individual effect + noise with the
configured true betas. Week t results feed the belief used in week t+1.

The engine is vectorized across agents; all randomness flows from
purpose-separated child streams of the master seed, so a config + seed pair
is bit-reproducible, with or without transaction-log emission. When logs
are emitted, each ticket becomes one bet-confirmation line plus one betting
debit; prizes, savings and loan flows become ledger records; weekly realized
outcome strings go to weeks.json so the parser can re-score picks.
"""

from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np
import pandas as pd

from .analysis import all_bucket_ids, categorize_feedback
from .jackpot import JackpotSpec
from .panel import validate_panel
from .scenario import ScenarioConfig
from .txlog import (
    WeekCalendar,
    WeekOutcomes,
    format_bet_message_fields,
)

__all__ = [
    "BETTING_COMPANY",
    "SAVINGS_COMPANY",
    "LOAN_COMPANIES",
    "TransactionWriter",
    "run_scenario",
    "simulate_to_dir",
    "bucket_fill_check",
]

BETTING_COMPANY = "SportPesa"
SAVINGS_COMPANY = "M-Shwari"
LOAN_COMPANIES = ("Tala", "Branch", "KCB", "Equity Bank", "Co-op Bank")

_SYMBOLS = np.array(["1", "x", "2"])  # home, draw, away
# The two alternative symbols for each realized-outcome index.
_ALT_SYMBOLS = np.array([["x", "2"], ["1", "2"], ["1", "x"]])

_WALLET_START = 1_000
_WALLET_TOPUP = 300


class TransactionWriter:
    """Streams bets.log, ledger.csv and weeks.json for a simulation run."""

    def __init__(self, out_dir, calendar: WeekCalendar):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.calendar = calendar
        self.bets_path = out / "bets.log"
        self.ledger_path = out / "ledger.csv"
        self.weeks_path = out / "weeks.json"
        self._bets = open(self.bets_path, "w", encoding="ascii", newline="\n")
        self._ledger_fh = open(self.ledger_path, "w", encoding="utf-8", newline="")
        self._ledger = csv.writer(self._ledger_fh)
        self._ledger.writerow(["individual_id", "timestamp", "counterparty", "direction", "amount"])
        self._mid_outcomes: list[str] = []
        self._weekend_outcomes: list[str] = []

    def record_week(self, midweek_outcomes: str, weekend_outcomes: str) -> None:
        self._mid_outcomes.append(midweek_outcomes)
        self._weekend_outcomes.append(weekend_outcomes)

    def bet(self, individual: int, date: dt.date, bet_id: str, picks: str, stake: int, balance: int) -> None:
        message = format_bet_message_fields(bet_id, picks, stake, balance)
        self._bets.write(f"{individual}\t{date.isoformat()}\t{message}\n")

    def ledger_rows(self, rows) -> None:
        self._ledger.writerows(rows)

    def close(self) -> None:
        self._bets.close()
        self._ledger_fh.close()
        WeekOutcomes(self.calendar, self._mid_outcomes, self._weekend_outcomes).to_json(self.weeks_path)

    def __enter__(self) -> "TransactionWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _per_component(rng, components, comp_idx, draw):
    """Stack per-component draws into one population array (fixed order)."""
    out = None
    for ci, comp in enumerate(components):
        values = draw(comp, rng)
        if out is None:
            out = np.empty(len(comp_idx), dtype=values.dtype)
        out[comp_idx == ci] = values[comp_idx == ci]
    return out


def _ragged_stakes(rng, components, comp_of_ticket):
    stakes = np.zeros(len(comp_of_ticket), dtype=np.int64)
    for ci, comp in enumerate(components):
        mask = comp_of_ticket == ci
        n = int(mask.sum())
        if n:
            stakes[mask] = comp.stake.draw(rng, n)
    return stakes


def _pick_strings(rng, n_matches: int, correct: np.ndarray, outcome_idx: np.ndarray) -> list[str]:
    """Ticket pick strings consistent with the drawn correct counts.

    The correctly predicted positions are a uniform random subset of the
    slate; wrong positions get one of the two other symbols.
    """
    n = len(correct)
    order = np.argsort(rng.random((n, n_matches)), axis=1)
    rank = np.argsort(order, axis=1)
    correct_mask = rank < correct[:, None]
    wrong_choice = rng.integers(0, 2, size=(n, n_matches))
    right = _SYMBOLS[outcome_idx]
    wrong = _ALT_SYMBOLS[outcome_idx[None, :], wrong_choice]
    chars = np.where(correct_mask, right[None, :], wrong)
    return ["#".join(row) for row in chars]


def run_scenario(config: ScenarioConfig, writer: TransactionWriter | None = None) -> pd.DataFrame:
    """Simulate the configured population; returns the individual-week panel.

    Passing a TransactionWriter additionally streams the raw transaction
    logs; the panel is bit-identical either way. Every active week buys at
    least one ticket (a weekend ticket is added if both ticket draws come
    up zero).
    """
    pop, weeks = config.population, config.weeks
    comps = config.policies
    fin = config.financial
    calendar = WeekCalendar(config.start_date, weeks)

    ss = np.random.SeedSequence(config.seed)
    (rng_pop, rng_cut, rng_tick, rng_stake, rng_play, rng_fin, rng_out, rng_picks) = (
        np.random.default_rng(child) for child in ss.spawn(8)
    )

    # Population: component assignment, abilities, priors, behavior arrays.
    weights = [c.weight for c in comps]
    comp_idx = rng_pop.choice(len(comps), size=pop, p=weights) if len(comps) > 1 else np.zeros(pop, np.int64)
    theta = _per_component(rng_pop, comps, comp_idx, lambda c, r: np.clip(c.ability.draw(r, pop), 0.0, 1.0))
    prior_m = np.array([c.prior_matches for c in comps], dtype=np.int64)[comp_idx]
    s_w = rng_pop.binomial(prior_m, theta).astype(np.float64)
    w_pos = np.array([c.update.effective_weights[0] for c in comps])[comp_idx]
    w_neg = np.array([c.update.effective_weights[1] for c in comps])[comp_idx]
    cut_mean = np.array([c.cutoff.mean_cutoff for c in comps])[comp_idx]
    cut_disp = np.array([c.cutoff.dispersion for c in comps])[comp_idx]
    cut_normal = np.array([c.cutoff.kind == "normal" for c in comps])[comp_idx]

    v_sw = rng_fin.normal(fin.savings_baseline, fin.fixed_effect_scale, pop)
    v_sd = rng_fin.normal(fin.savings_baseline, fin.fixed_effect_scale, pop)
    v_lr = rng_fin.normal(fin.loan_baseline, fin.fixed_effect_scale, pop)
    v_lp = rng_fin.normal(fin.loan_baseline, fin.fixed_effect_scale, pop)

    mid_prize = JackpotSpec.midweek().prize_lookup()
    wk_prize = JackpotSpec.weekend().prize_lookup()

    prior_total = prior_m.astype(np.float64)
    sb = np.zeros(pop)
    ub = np.zeros(pop)
    agents = np.arange(pop)
    wallet = np.full(pop, _WALLET_START, dtype=np.int64)
    bet_counter = 0

    cols = (
        "tickets_midweek tickets_weekend picks_total picks_correct betting_expenditure "
        "betting_income won_prize savings_deposit savings_withdrawal loans_received loan_repayments"
    ).split()
    track = {c: np.zeros((weeks, pop)) for c in cols}

    for t in range(weeks):
        u = rng_cut.uniform(size=pop)
        z = rng_cut.standard_normal(pop)
        cutoff = np.where(cut_normal, cut_mean + cut_disp * z, cut_mean + cut_disp * (2.0 * u - 1.0))
        np.clip(cutoff, 0.0, 1.0, out=cutoff)

        total = prior_total + sb + ub
        informed = total > 0
        mean = np.divide(s_w + sb, total, out=np.zeros(pop), where=informed)
        bet = np.where(informed, mean >= cutoff, True)

        tm = np.zeros(pop, dtype=np.int64)
        tw = np.zeros(pop, dtype=np.int64)
        for ci, comp in enumerate(comps):
            draw_m = comp.tickets_midweek.draw(rng_tick, pop)
            draw_w = comp.tickets_weekend.draw(rng_tick, pop)
            sel = (comp_idx == ci) & bet
            tm[sel] = draw_m[sel]
            tw[sel] = draw_w[sel]
        tw[bet & (tm + tw == 0)] = 1

        idx_m = np.repeat(agents, tm)
        idx_w = np.repeat(agents, tw)
        correct_m = rng_play.binomial(13, theta[idx_m]) if len(idx_m) else np.zeros(0, np.int64)
        correct_w = rng_play.binomial(17, theta[idx_w]) if len(idx_w) else np.zeros(0, np.int64)
        stake_m = _ragged_stakes(rng_stake, comps, comp_idx[idx_m])
        stake_w = _ragged_stakes(rng_stake, comps, comp_idx[idx_w])
        prize_m = mid_prize[correct_m]
        prize_w = wk_prize[correct_w]

        picks_correct = (
            np.bincount(idx_m, weights=correct_m, minlength=pop)
            + np.bincount(idx_w, weights=correct_w, minlength=pop)
        )
        picks_total = 13 * tm + 17 * tw
        expenditure = (
            np.bincount(idx_m, weights=stake_m, minlength=pop)
            + np.bincount(idx_w, weights=stake_w, minlength=pop)
        )
        income = (
            np.bincount(idx_m, weights=prize_m, minlength=pop)
            + np.bincount(idx_w, weights=prize_w, minlength=pop)
        )

        ihs_exp = np.arcsinh(expenditure)
        eps_sw = rng_fin.normal(0.0, fin.noise_scale, pop)
        eps_sd = rng_fin.normal(0.0, fin.noise_scale, pop)
        eps_lr = rng_fin.normal(0.0, fin.noise_scale, pop)
        eps_lp = rng_fin.normal(0.0, fin.noise_scale, pop)
        sw_amt = np.sinh(np.maximum(fin.beta_savings_withdrawal * ihs_exp + v_sw + eps_sw, 0.0))
        sd_amt = np.sinh(np.maximum(fin.beta_savings_deposit * ihs_exp + v_sd + eps_sd, 0.0))
        lr_amt = np.sinh(np.maximum(fin.beta_loan * ihs_exp + v_lr + eps_lr, 0.0))
        lp_amt = np.sinh(np.maximum(fin.beta_loan * ihs_exp + v_lp + eps_lp, 0.0))

        track["tickets_midweek"][t] = tm
        track["tickets_weekend"][t] = tw
        track["picks_total"][t] = picks_total
        track["picks_correct"][t] = picks_correct
        track["betting_expenditure"][t] = expenditure
        track["betting_income"][t] = income
        track["won_prize"][t] = income > 0
        track["savings_deposit"][t] = sd_amt
        track["savings_withdrawal"][t] = sw_amt
        track["loans_received"][t] = lr_amt
        track["loan_repayments"][t] = lp_amt

        if writer is not None:
            mid_out_idx = rng_out.integers(0, 3, size=13)
            wk_out_idx = rng_out.integers(0, 3, size=17)
            writer.record_week("".join(_SYMBOLS[mid_out_idx]), "".join(_SYMBOLS[wk_out_idx]))
            for idx, correct, stakes, prizes, out_idx, n_matches, bet_date, settle_date in (
                (idx_m, correct_m, stake_m, prize_m, mid_out_idx, 13,
                 calendar.midweek_bet_date(t), calendar.midweek_settle_date(t)),
                (idx_w, correct_w, stake_w, prize_w, wk_out_idx, 17,
                 calendar.weekend_bet_date(t), calendar.weekend_settle_date(t)),
            ):
                if not len(idx):
                    continue
                picks = _pick_strings(rng_picks, n_matches, correct, out_idx)
                date_iso = bet_date.isoformat()
                debit_rows = []
                for j in range(len(idx)):
                    agent = int(idx[j])
                    stake = int(stakes[j])
                    wallet[agent] = max(0, wallet[agent] - stake)
                    bet_counter += 1
                    writer.bet(agent, bet_date, format(bet_counter, "x"), picks[j], stake, int(wallet[agent]))
                    debit_rows.append((agent, date_iso, BETTING_COMPANY, "debit", float(stake)))
                writer.ledger_rows(debit_rows)
                settle_iso = settle_date.isoformat()
                writer.ledger_rows(
                    (int(idx[j]), settle_iso, BETTING_COMPANY, "credit", float(prizes[j]))
                    for j in np.flatnonzero(prizes > 0)
                )

            savings_iso = calendar.savings_date(t).isoformat()
            writer.ledger_rows(
                (int(i), savings_iso, SAVINGS_COMPANY, "debit", float(sd_amt[i]))
                for i in np.flatnonzero(sd_amt > 0)
            )
            writer.ledger_rows(
                (int(i), savings_iso, SAVINGS_COMPANY, "credit", float(sw_amt[i]))
                for i in np.flatnonzero(sw_amt > 0)
            )
            loan_in_iso = calendar.loan_credit_date(t).isoformat()
            writer.ledger_rows(
                (int(i), loan_in_iso, LOAN_COMPANIES[int(i) % len(LOAN_COMPANIES)], "credit", float(lr_amt[i]))
                for i in np.flatnonzero(lr_amt > 0)
            )
            loan_out_iso = calendar.loan_debit_date(t).isoformat()
            writer.ledger_rows(
                (int(i), loan_out_iso, LOAN_COMPANIES[int(i) % len(LOAN_COMPANIES)], "debit", float(lp_amt[i]))
                for i in np.flatnonzero(lp_amt > 0)
            )
            wallet += income.astype(np.int64) + _WALLET_TOPUP

        sb = sb + w_pos * picks_correct
        ub = ub + w_neg * (picks_total - picks_correct)

    def flat(name: str, dtype=np.float64) -> np.ndarray:
        raw = track[name].T.reshape(-1)
        return raw.astype(dtype) if raw.dtype != dtype else raw

    picks_total_flat = flat("picks_total", np.int64)
    picks_correct_flat = flat("picks_correct", np.int64)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(picks_total_flat > 0, picks_correct_flat / picks_total_flat, np.nan)
    sd_flat = flat("savings_deposit")
    sw_flat = flat("savings_withdrawal")
    lr_flat = flat("loans_received")

    frame = pd.DataFrame(
        {
            "individual_id": np.repeat(agents, weeks),
            "week": np.tile(np.arange(weeks), pop),
            "tickets_midweek": flat("tickets_midweek", np.int64),
            "tickets_weekend": flat("tickets_weekend", np.int64),
            "picks_total": picks_total_flat,
            "picks_correct": picks_correct_flat,
            "share_correct": share,
            "placed_jackpot": (picks_total_flat > 0).astype(np.int64),
            "betting_expenditure": flat("betting_expenditure"),
            "betting_income": flat("betting_income"),
            "won_prize": flat("won_prize", np.int64),
            "savings_deposit": sd_flat,
            "savings_withdrawal": sw_flat,
            "net_savings": sd_flat - sw_flat,
            "loan_applied": (lr_flat > 0).astype(np.int64),
            "loans_received": lr_flat,
            "loan_repayments": flat("loan_repayments"),
        }
    )
    return validate_panel(frame)


def simulate_to_dir(config: ScenarioConfig, out_dir) -> dict[str, Path]:
    """Run a scenario and write panel.csv plus the transaction-log bundle."""
    from .panel import write_panel_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    calendar = WeekCalendar(config.start_date, config.weeks)
    with TransactionWriter(out, calendar) as writer:
        panel = run_scenario(config, writer)
    panel_path = out / "panel.csv"
    write_panel_csv(panel, panel_path)
    return {
        "panel": panel_path,
        "bets": writer.bets_path,
        "ledger": writer.ledger_path,
        "weeks": writer.weeks_path,
    }


def bucket_fill_check(panel: pd.DataFrame, cutoff: float = 0.10, mode: str = "relative") -> set:
    """Individuals with at least one week in each feedback category."""
    return all_bucket_ids(categorize_feedback(panel, cutoff, mode))
