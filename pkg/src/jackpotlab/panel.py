"""Individual-week panel schema shared by the simulator, the transaction-log
aggregator and the estimators.

One row per individual per calendar week. ``share_correct`` is missing (NaN)
in weeks with no picks; such rows drop out of any regression that needs the
corresponding lag. ``loan_applied`` is defined as "any loan credit observed
in the week" so the direct and log-aggregated panels agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

__all__ = [
    "PANEL_COLUMNS",
    "PANEL_DTYPES",
    "PanelObservation",
    "SchemaError",
    "validate_panel",
    "write_panel_csv",
    "read_panel_csv",
    "shift_join",
]


class SchemaError(ValueError):
    """A frame does not conform to the panel schema."""


PANEL_COLUMNS = [
    "individual_id",
    "week",
    "tickets_midweek",
    "tickets_weekend",
    "picks_total",
    "picks_correct",
    "share_correct",
    "placed_jackpot",
    "betting_expenditure",
    "betting_income",
    "won_prize",
    "savings_deposit",
    "savings_withdrawal",
    "net_savings",
    "loan_applied",
    "loans_received",
    "loan_repayments",
]

_INT = np.int64
_FLOAT = np.float64

PANEL_DTYPES = {
    "individual_id": _INT,
    "week": _INT,
    "tickets_midweek": _INT,
    "tickets_weekend": _INT,
    "picks_total": _INT,
    "picks_correct": _INT,
    "share_correct": _FLOAT,
    "placed_jackpot": _INT,  # 0/1
    "betting_expenditure": _FLOAT,
    "betting_income": _FLOAT,
    "won_prize": _INT,  # 0/1
    "savings_deposit": _FLOAT,
    "savings_withdrawal": _FLOAT,
    "net_savings": _FLOAT,
    "loan_applied": _INT,  # 0/1
    "loans_received": _FLOAT,
    "loan_repayments": _FLOAT,
}


@dataclass(frozen=True)
class PanelObservation:
    """One individual-week row (see PANEL_COLUMNS for the CSV order)."""

    individual_id: int
    week: int
    tickets_midweek: int = 0
    tickets_weekend: int = 0
    picks_total: int = 0
    picks_correct: int = 0
    share_correct: float = float("nan")
    placed_jackpot: bool = False
    betting_expenditure: float = 0.0
    betting_income: float = 0.0
    won_prize: bool = False
    savings_deposit: float = 0.0
    savings_withdrawal: float = 0.0
    net_savings: float = 0.0
    loan_applied: bool = False
    loans_received: float = 0.0
    loan_repayments: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.picks_correct <= self.picks_total:
            raise ValueError("picks_correct must lie in [0, picks_total]")
        if self.won_prize and self.betting_income <= 0:
            raise ValueError("won_prize implies positive betting income")


def validate_panel(frame: pd.DataFrame) -> pd.DataFrame:
    """Check columns and coerce dtypes; raises SchemaError naming gaps.

    Conforming frames (exact column order and dtypes) pass through without
    copying; otherwise a reordered, coerced copy is returned.
    """
    missing = [c for c in PANEL_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"panel is missing column(s): {', '.join(missing)}")
    out = frame if list(frame.columns) == PANEL_COLUMNS else frame[PANEL_COLUMNS]
    needs = [col for col, dtype in PANEL_DTYPES.items() if out[col].dtype != dtype]
    if not needs:
        return out
    if out is frame:
        out = frame.copy()
    for col in needs:
        dtype = PANEL_DTYPES[col]
        try:
            out[col] = out[col].astype(dtype)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"panel column {col!r} not coercible to {dtype.__name__}: {exc}") from None
    return out


def write_panel_csv(frame: pd.DataFrame, path) -> None:
    """Write the panel with the documented column order and dtypes."""
    validate_panel(frame).to_csv(path, index=False)


def read_panel_csv(path) -> pd.DataFrame:
    """Read a panel CSV, validating the schema."""
    try:
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise SchemaError(f"cannot read panel CSV {path}: {exc}") from None
    return validate_panel(frame)


def shift_join(panel: pd.DataFrame, cols: list[str], shift: int, suffix: str) -> pd.DataFrame:
    """Attach columns from week t-shift (shift<0 means a lead) per individual.

    Returns the panel with extra columns named ``{col}{suffix}``; missing
    weeks yield NaN.
    """
    moved = panel[["individual_id", "week"] + cols].copy()
    moved["week"] = moved["week"] + shift
    merged = panel.merge(moved, on=["individual_id", "week"], how="left", suffixes=("", suffix))
    return merged
