"""Bet-confirmation messages, mobile-money ledger lines, and the
aggregation of both streams into the individual-week panel.

The bet message grammar is bit-exact ASCII::

    You've placed Jackpot BetID <id> <p1>#<p2>#...#<pN> for KSH <stake>. \
S-Pesa available balance KSH <balance>. <suffix>

with integer KSH amounts and picks over the alphabet {1, 2, x} (home win,
away win, draw). Anything after the balance clause is recorded verbatim as
the suffix. The ledger is a CSV with columns
(individual_id, timestamp, counterparty, direction, amount); a company
table maps counterparties to {betting, savings, loan, other}.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .panel import PANEL_COLUMNS, validate_panel

__all__ = [
    "PICK_ALPHABET",
    "DEFAULT_SUFFIX",
    "VALID_PICK_COUNTS",
    "BetMessage",
    "BetMessageError",
    "NotBetMessageError",
    "MalformedPickError",
    "PickCountError",
    "AmountError",
    "EnvelopeError",
    "CalendarError",
    "format_bet_message",
    "format_bet_message_fields",
    "parse_bet_message",
    "format_bet_line",
    "parse_bet_line",
    "parse_log_dir",
    "LedgerRecord",
    "CompanyTable",
    "DEFAULT_COMPANIES",
    "WeekCalendar",
    "WeekOutcomes",
    "read_ledger_csv",
    "aggregate_panel",
]

PICK_ALPHABET = ("1", "2", "x")
VALID_PICK_COUNTS = (13, 17)
DEFAULT_SUFFIX = "Games resulted on full time."

_PREFIX = "You've placed Jackpot BetID "
_STAKE_SEP = " for KSH "
_BALANCE_SEP = ". S-Pesa available balance KSH "
_TAIL_RE = re.compile(r"^(.*?)\. S-Pesa available balance KSH (.*?)\.(?: (.*))?$", re.DOTALL)


class BetMessageError(ValueError):
    """Base class for the enumerated bet-message parse failures."""


class NotBetMessageError(BetMessageError):
    """The line is not a jackpot bet confirmation."""


class MalformedPickError(BetMessageError):
    """A pick token is outside the {1, 2, x} alphabet."""


class PickCountError(BetMessageError):
    """The number of picks is neither 13 nor 17."""


class AmountError(BetMessageError):
    """Stake or balance is not a non-negative integer KSH amount."""


class EnvelopeError(ValueError):
    """A bets.log line does not carry a valid (id, date, message) envelope."""


class CalendarError(ValueError):
    """A timestamp falls outside the panel's week calendar."""


@dataclass(frozen=True)
class BetMessage:
    """Structured content of one jackpot bet confirmation."""

    bet_id: str
    picks: tuple[str, ...]
    stake: int
    balance: int
    suffix: str = DEFAULT_SUFFIX

    def __post_init__(self) -> None:
        if not self.bet_id or not self.bet_id.isalnum():
            raise ValueError(f"bet_id must be a non-empty alphanumeric token, got {self.bet_id!r}")
        if len(self.picks) not in VALID_PICK_COUNTS:
            raise ValueError(f"picks must have 13 or 17 entries, got {len(self.picks)}")
        bad = [p for p in self.picks if p not in PICK_ALPHABET]
        if bad:
            raise ValueError(f"invalid pick symbols {bad}")
        if not isinstance(self.stake, int) or self.stake < 1:
            raise ValueError("stake must be an integer >= 1 KSH")
        if not isinstance(self.balance, int) or self.balance < 0:
            raise ValueError("balance must be an integer >= 0 KSH")

    @property
    def kind(self) -> str:
        return "midweek" if len(self.picks) == 13 else "weekend"

    @property
    def picks_string(self) -> str:
        return "#".join(self.picks)


def format_bet_message_fields(
    bet_id: str, picks_string: str, stake: int, balance: int, suffix: str = DEFAULT_SUFFIX
) -> str:
    """Render the confirmation line from raw fields (no validation)."""
    line = f"{_PREFIX}{bet_id} {picks_string}{_STAKE_SEP}{stake}{_BALANCE_SEP}{balance}."
    return f"{line} {suffix}" if suffix else line


def format_bet_message(message: BetMessage) -> str:
    """Render the exact confirmation line for a BetMessage."""
    return format_bet_message_fields(
        message.bet_id, message.picks_string, message.stake, message.balance, message.suffix
    )


def parse_bet_message(line: str) -> BetMessage:
    """Parse a confirmation line; exact inverse of format_bet_message.

    Raises one of the enumerated errors: NotBetMessageError,
    MalformedPickError, PickCountError, AmountError.
    """
    if not line.startswith(_PREFIX):
        raise NotBetMessageError("line does not start with the jackpot bet prefix")
    rest = line[len(_PREFIX):]
    bet_id, sep, rest = rest.partition(" ")
    if not sep or not bet_id or not bet_id.isalnum():
        raise NotBetMessageError(f"missing or malformed bet id {bet_id!r}")
    picks_str, sep, tail = rest.partition(_STAKE_SEP)
    if not sep:
        raise NotBetMessageError("missing stake clause")
    tokens = tuple(picks_str.split("#"))
    bad = [t for t in tokens if t not in PICK_ALPHABET]
    if bad:
        raise MalformedPickError(f"invalid pick token(s) {bad[:3]!r}")
    if len(tokens) not in VALID_PICK_COUNTS:
        raise PickCountError(f"expected 13 or 17 picks, got {len(tokens)}")
    m = _TAIL_RE.match(tail)
    if m is None:
        raise NotBetMessageError("missing balance clause")
    stake_str, balance_str, suffix = m.group(1), m.group(2), m.group(3)
    if not stake_str.isdigit():
        raise AmountError(f"unparseable stake {stake_str!r}")
    if not balance_str.isdigit():
        raise AmountError(f"unparseable balance {balance_str!r}")
    stake = int(stake_str)
    if stake < 1:
        raise AmountError("stake must be at least 1 KSH")
    return BetMessage(bet_id, tokens, stake, int(balance_str), suffix or "")


def format_bet_line(individual_id: int, timestamp: dt.date, message: BetMessage) -> str:
    """One bets.log line: tab-separated envelope around the message text."""
    return f"{individual_id}\t{timestamp.isoformat()}\t{format_bet_message(message)}"


def parse_bet_line(line: str) -> tuple[int, dt.date, str]:
    """Split a bets.log line into (individual_id, date, message text)."""
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise EnvelopeError(f"expected 3 tab-separated fields, got {len(parts)}")
    id_str, date_str, message = parts
    try:
        individual_id = int(id_str)
        timestamp = dt.date.fromisoformat(date_str)
    except ValueError as exc:
        raise EnvelopeError(str(exc)) from None
    return individual_id, timestamp, message


@dataclass(frozen=True)
class LedgerRecord:
    """One mobile-money transaction, from the individual's perspective.

    direction 'debit' = the individual pays the counterparty, 'credit' =
    the individual receives money.
    """

    individual_id: int
    timestamp: dt.date
    counterparty: str
    direction: str
    amount: float

    def __post_init__(self) -> None:
        if self.direction not in ("credit", "debit"):
            raise ValueError(f"direction must be credit or debit, got {self.direction!r}")
        if not self.amount > 0:
            raise ValueError("amount must be positive")


# M-Shwari is mapped to savings (it is the mobile-money savings product);
# the consumer-credit companies carry the loan category.
DEFAULT_COMPANIES = {
    "SportPesa": "betting",
    "M-Shwari": "savings",
    "Tala": "loan",
    "Branch": "loan",
    "KCB": "loan",
    "Equity Bank": "loan",
    "Co-op Bank": "loan",
}

_CATEGORIES = ("betting", "savings", "loan", "other")


class CompanyTable:
    """Deterministic counterparty -> category mapping; unknown -> 'other'."""

    def __init__(self, mapping: dict[str, str] | None = None):
        table = dict(DEFAULT_COMPANIES if mapping is None else mapping)
        for name, cat in table.items():
            if cat not in _CATEGORIES:
                raise ValueError(f"company {name!r} has unknown category {cat!r}")
        self.mapping = table

    @classmethod
    def from_json(cls, path) -> "CompanyTable":
        with open(Path(path), "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def categorize(self, counterparty: str) -> str:
        return self.mapping.get(counterparty, "other")

    def categorize_series(self, names: pd.Series) -> pd.Series:
        return names.map(self.mapping).fillna("other")


class WeekCalendar:
    """Maps dates to panel week indices. Weeks are ISO (Monday-start).

    The convention for simulated transaction dates: midweek bets resolve on
    Wednesday/Thursday, weekend bets on Saturday/Sunday, savings flows on
    Friday, loan credits on Tuesday and repayments on Thursday.
    """

    def __init__(self, start: dt.date, n_weeks: int):
        if start.weekday() != 0:
            raise ValueError(f"calendar must start on a Monday, got {start} ({start:%A})")
        if n_weeks < 1:
            raise ValueError("calendar needs at least one week")
        self.start = start
        self.n_weeks = n_weeks

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=7 * self.n_weeks)

    def week_of(self, timestamp: dt.date) -> int:
        days = (timestamp - self.start).days
        if days < 0 or days >= 7 * self.n_weeks:
            raise CalendarError(f"timestamp {timestamp} outside calendar [{self.start}, {self.end})")
        return days // 7

    def week_start(self, week: int) -> dt.date:
        return self.start + dt.timedelta(days=7 * week)

    def midweek_bet_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=2)

    def midweek_settle_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=3)

    def weekend_bet_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=5)

    def weekend_settle_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=6)

    def savings_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=4)

    def loan_credit_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=1)

    def loan_debit_date(self, week: int) -> dt.date:
        return self.week_start(week) + dt.timedelta(days=3)


class WeekOutcomes:
    """Realized per-match outcome symbols for every week's two slates."""

    def __init__(self, calendar: WeekCalendar, midweek: list[str], weekend: list[str]):
        if len(midweek) != calendar.n_weeks or len(weekend) != calendar.n_weeks:
            raise ValueError("need one outcome string per week per slate")
        for s in midweek:
            if len(s) != 13 or any(c not in PICK_ALPHABET for c in s):
                raise ValueError(f"bad midweek outcome string {s!r}")
        for s in weekend:
            if len(s) != 17 or any(c not in PICK_ALPHABET for c in s):
                raise ValueError(f"bad weekend outcome string {s!r}")
        self.calendar = calendar
        self.midweek = list(midweek)
        self.weekend = list(weekend)

    def to_json(self, path) -> None:
        payload = {
            "start_date": self.calendar.start.isoformat(),
            "n_weeks": self.calendar.n_weeks,
            "weeks": [
                {"week": w, "midweek": self.midweek[w], "weekend": self.weekend[w]}
                for w in range(self.calendar.n_weeks)
            ],
        }
        with open(Path(path), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "WeekOutcomes":
        with open(Path(path), "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        calendar = WeekCalendar(dt.date.fromisoformat(payload["start_date"]), int(payload["n_weeks"]))
        midweek = [""] * calendar.n_weeks
        weekend = [""] * calendar.n_weeks
        for entry in payload["weeks"]:
            midweek[int(entry["week"])] = entry["midweek"]
            weekend[int(entry["week"])] = entry["weekend"]
        return cls(calendar, midweek, weekend)


LEDGER_COLUMNS = ["individual_id", "timestamp", "counterparty", "direction", "amount"]


def read_ledger_csv(path) -> pd.DataFrame:
    """Read a ledger CSV with the documented five columns."""
    frame = pd.read_csv(
        path,
        dtype={"individual_id": np.int64, "counterparty": "category", "direction": "category", "amount": np.float64},
        float_precision="round_trip",  # exact IEEE round-trip, bit-identical aggregation
    )
    missing = [c for c in LEDGER_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"ledger is missing column(s): {', '.join(missing)}")
    return frame


def _weeks_from_timestamps(timestamps: pd.Series, calendar: WeekCalendar) -> np.ndarray:
    dates = pd.to_datetime(timestamps, format="%Y-%m-%d").values.astype("datetime64[D]")
    days = (dates - np.datetime64(calendar.start, "D")).astype(np.int64)
    bad = (days < 0) | (days >= 7 * calendar.n_weeks)
    if bad.any():
        offender = timestamps.iloc[int(np.argmax(bad))]
        raise CalendarError(f"timestamp {offender} outside calendar [{calendar.start}, {calendar.end})")
    return days // 7


def _count_correct(picks: list[str], weeks: np.ndarray, outcome_strings: list[str], n: int) -> np.ndarray:
    if not picks:
        return np.zeros(0, dtype=np.int64)
    mat = np.frombuffer("".join(picks).encode("ascii"), dtype="S1").reshape(-1, n)
    outcome_mat = np.frombuffer("".join(outcome_strings).encode("ascii"), dtype="S1").reshape(-1, n)
    return (mat == outcome_mat[weeks]).sum(axis=1).astype(np.int64)


def aggregate_panel(
    ledger: pd.DataFrame,
    bets,
    outcomes: WeekOutcomes,
    calendar: WeekCalendar | None = None,
    companies: CompanyTable | None = None,
) -> pd.DataFrame:
    """Fold ledger records and bet messages into individual-week rows.

    ``bets`` is any iterable of (individual_id, date, BetMessage), consumed
    once. Monetary sums come from the ledger (by company category and
    direction); ticket counts and correct-prediction counts come from the
    bet messages scored against each week's realized outcomes. Individuals
    appearing in either stream get a row for every calendar week. Unknown
    counterparties fall into category 'other' and are ignored; timestamps
    outside the calendar raise CalendarError.
    """
    calendar = calendar or outcomes.calendar
    companies = companies or CompanyTable()

    frames: dict[tuple[str, str], pd.DataFrame] = {}
    prize_weeks = loan_weeks = None
    ids: set[int] = set()

    if len(ledger):
        led = ledger[LEDGER_COLUMNS].copy()
        led["week"] = _weeks_from_timestamps(led["timestamp"], calendar)
        led["category"] = companies.categorize_series(led["counterparty"].astype(str))
        ids.update(int(i) for i in led["individual_id"].unique())
        sums = (
            led.groupby(["individual_id", "week", "category", "direction"], observed=True)["amount"]
            .sum()
            .reset_index()
        )
        for cat, direction in (("betting", "debit"), ("betting", "credit"), ("savings", "debit"),
                               ("savings", "credit"), ("loan", "credit"), ("loan", "debit")):
            sel = sums[(sums["category"] == cat) & (sums["direction"] == direction)]
            frames[(cat, direction)] = sel[["individual_id", "week", "amount"]]
        prize_weeks = frames[("betting", "credit")][["individual_id", "week"]]
        loan_weeks = frames[("loan", "credit")][["individual_id", "week"]]

    by_kind: dict[int, tuple[list[int], list[int], list[str]]] = {13: ([], [], []), 17: ([], [], [])}
    for individual, timestamp, message in bets:
        week = calendar.week_of(timestamp)
        kind_ids, kind_weeks, kind_picks = by_kind[len(message.picks)]
        kind_ids.append(individual)
        kind_weeks.append(week)
        kind_picks.append("".join(message.picks))

    bet_rows = None
    rows = []
    for n, outcome_strings in ((13, outcomes.midweek), (17, outcomes.weekend)):
        kind_ids, kind_weeks, kind_picks = by_kind[n]
        if not kind_ids:
            continue
        id_arr = np.asarray(kind_ids, dtype=np.int64)
        week_arr = np.asarray(kind_weeks, dtype=np.int64)
        ids.update(int(i) for i in np.unique(id_arr))
        correct = _count_correct(kind_picks, week_arr, outcome_strings, n)
        rows.append(
            pd.DataFrame(
                {
                    "individual_id": id_arr,
                    "week": week_arr,
                    "tickets_midweek": np.int64(n == 13),
                    "tickets_weekend": np.int64(n == 17),
                    "picks_total": np.int64(n),
                    "picks_correct": correct,
                }
            )
        )
    if rows:
        bet_rows = (
            pd.concat(rows, ignore_index=True)
            .groupby(["individual_id", "week"], as_index=False)
            .sum()
        )

    if not ids:
        return validate_panel(pd.DataFrame({c: pd.Series(dtype="float64") for c in PANEL_COLUMNS}))

    grid = pd.MultiIndex.from_product(
        [sorted(ids), range(calendar.n_weeks)], names=["individual_id", "week"]
    ).to_frame(index=False)

    def attach(frame, grid, name):
        if frame is None or not len(frame):
            grid[name] = 0.0
            return grid
        renamed = frame.rename(columns={"amount": name})
        merged = grid.merge(renamed, on=["individual_id", "week"], how="left")
        merged[name] = merged[name].fillna(0.0)
        return merged

    grid = attach(frames.get(("betting", "debit")), grid, "betting_expenditure")
    grid = attach(frames.get(("betting", "credit")), grid, "betting_income")
    grid = attach(frames.get(("savings", "debit")), grid, "savings_deposit")
    grid = attach(frames.get(("savings", "credit")), grid, "savings_withdrawal")
    grid = attach(frames.get(("loan", "credit")), grid, "loans_received")
    grid = attach(frames.get(("loan", "debit")), grid, "loan_repayments")

    if bet_rows is not None:
        grid = grid.merge(bet_rows, on=["individual_id", "week"], how="left")
        for col in ("tickets_midweek", "tickets_weekend", "picks_total", "picks_correct"):
            grid[col] = grid[col].fillna(0).astype(np.int64)
    else:
        for col in ("tickets_midweek", "tickets_weekend", "picks_total", "picks_correct"):
            grid[col] = np.int64(0)

    def flag_weeks(pairs, name):
        if pairs is None or not len(pairs):
            grid[name] = 0
            return
        marked = pairs.drop_duplicates().assign(**{name: 1})
        merged = grid.merge(marked, on=["individual_id", "week"], how="left")
        grid[name] = merged[name].fillna(0).astype(np.int64).values

    flag_weeks(prize_weeks, "won_prize")
    flag_weeks(loan_weeks, "loan_applied")

    with np.errstate(invalid="ignore", divide="ignore"):
        grid["share_correct"] = np.where(
            grid["picks_total"] > 0, grid["picks_correct"] / grid["picks_total"], np.nan
        )
    grid["placed_jackpot"] = ((grid["tickets_midweek"] + grid["tickets_weekend"]) > 0).astype(np.int64)
    grid["net_savings"] = grid["savings_deposit"] - grid["savings_withdrawal"]

    return validate_panel(grid.sort_values(["individual_id", "week"], ignore_index=True))


PARSE_ERROR_KINDS = (
    "not_bet_message",
    "malformed_pick",
    "bad_pick_count",
    "bad_amount",
    "bad_envelope",
)

_ERROR_KEYS = {
    NotBetMessageError: "not_bet_message",
    MalformedPickError: "malformed_pick",
    PickCountError: "bad_pick_count",
    AmountError: "bad_amount",
}


def parse_log_dir(log_dir, companies: CompanyTable | None = None):
    """Parse a simulation log bundle back into a panel.

    Expects ``bets.log``, ``ledger.csv`` and ``weeks.json`` inside
    ``log_dir``. Returns (panel, error_counts) where error_counts tallies
    skipped bet lines per enumerated parse-error kind; parse errors never
    abort the run, they only drop the offending line.
    """
    base = Path(log_dir)
    outcomes = WeekOutcomes.from_json(base / "weeks.json")
    ledger = read_ledger_csv(base / "ledger.csv")

    errors = {kind: 0 for kind in PARSE_ERROR_KINDS}

    def stream():
        with open(base / "bets.log", "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    individual, timestamp, text = parse_bet_line(line)
                    yield individual, timestamp, parse_bet_message(text)
                except EnvelopeError:
                    errors["bad_envelope"] += 1
                except BetMessageError as exc:
                    errors[_ERROR_KEYS[type(exc)]] += 1

    panel = aggregate_panel(ledger, stream(), outcomes, companies=companies)
    return panel, errors
