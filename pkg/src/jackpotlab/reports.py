"""Paper-style table emitters with embedded run manifests.

Every report is written twice: a human-readable fixed-width text layout
mirroring the published tables (coefficients, round-bracket robust SEs,
square-bracket 95% CIs, sample counts) and a machine-readable tidy CSV.
Both embed a manifest (command, parameters, seed, input content hashes,
package version) so any table can be re-derived; absolute paths stay out
of the embedded manifest so identical inputs yield byte-identical tables.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .analysis import (
    SYMMETRY_TEST,
    feedback_regression,
    heterogeneity_regression,
    learning_regression,
    two_sls,
)
from .intervals import ability_table
from .regression import RegressionResult

__all__ = [
    "RunManifest",
    "sha256_path",
    "TABLE_NAMES",
    "build_table",
    "write_report",
]

TABLE_NAMES = (
    "table2",
    "table3",
    "table4",
    "tableA1",
    "tableA2",
    "tableA3",
    "tableA4",
    "tableA5",
    "figure1",
)


def sha256_path(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Reproducibility record embedded in every emitted table."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    input_hashes: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "inputs": self.input_hashes,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def csv_comment(self) -> str:
        return f"# manifest: {self.to_json()}"

    def text_footer(self) -> str:
        return f"manifest: {self.to_json()}"


def _fmt(x, digits: int = 3) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return "."
    return f"{x:.{digits}f}"


def _ci_str(lo: float, hi: float) -> str:
    return f"[{_fmt(lo)}, {_fmt(hi)}]"


def _grid(rows: list[list[str]], header: list[str], title: str, notes: list[str]) -> str:
    widths = [max(len(str(r[j])) for r in [header] + rows) for j in range(len(header))]
    out = [title, "=" * (sum(widths) + 2 * (len(widths) - 1))]
    out.append("  ".join(str(h).ljust(widths[j]) for j, h in enumerate(header)))
    out.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    for r in rows:
        out.append("  ".join(str(c).ljust(widths[j]) for j, c in enumerate(r)))
    out.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    out.extend(notes)
    return "\n".join(out) + "\n"


def _tidy_rows(table: str, column: str, result: RegressionResult) -> list[dict]:
    ci = result.conf_int()
    se = result.se()
    rows = []
    for j, name in enumerate(result.names):
        rows.append(
            {
                "table": table,
                "column": column,
                "term": name,
                "estimate": result.coef[j],
                "se": se[j],
                "ci_low": ci[j, 0],
                "ci_high": ci[j, 1],
                "n_obs": result.n_obs,
                "n_individuals": result.n_individuals,
                "n_weeks": result.n_weeks,
                "partial_f": result.partial_f,
                "wald_abs_equal_p": result.wald_tests.get(SYMMETRY_TEST, (None, None))[1],
            }
        )
    return rows


def _table2(panel: pd.DataFrame, **_) -> tuple[str, pd.DataFrame]:
    results = {
        "Placed jackpot bet": learning_regression(panel, dependent="placed_jackpot"),
        "Betting expenditure": learning_regression(panel, dependent="ihs_expenditure"),
    }
    header = ["", *results.keys()]
    share = [r.names[0] for r in results.values()][0]
    first = [res for res in results.values()]
    rows = [
        ["Share correct in week t-1", *[_fmt(r.coef[0]) for r in first]],
        ["", *[f"({_fmt(r.se()[0])})" for r in first]],
        ["", *[_ci_str(*r.conf_int()[0]) for r in first]],
        ["Individual fixed effects", *["Yes"] * 2],
        ["Week fixed effects", *["No"] * 2],
        ["Individuals", *[str(r.n_individuals) for r in first]],
        ["Weeks", *[str(r.n_weeks) for r in first]],
        ["Observations", *[str(r.n_obs) for r in first]],
        ["Effect of +1 sd of share", *[_fmt(100 * r.extras["effect_per_sd"], 2) for r in first]],
    ]
    notes = [
        "Controls: midweek and weekend ticket counts in week t-1. Sample excludes",
        "individual-weeks that won a jackpot prize in week t-1. Robust standard errors",
        "in round brackets; 95% confidence intervals in square brackets. The last row",
        "scales the coefficient by one sd of the lagged share (x100: pp / percent).",
        f"(share term: {share})",
    ]
    text = _grid(rows, header, "Response to previous week's betting results", notes)
    tidy = pd.DataFrame([row for col, res in results.items() for row in _tidy_rows("table2", col, res)])
    return text, tidy


def _feedback_table(panel, name, title, cutoff, mode, two_way=False, **_) -> tuple[str, pd.DataFrame]:
    horizons = (1, 2, 3, 4)
    results = {f"t+{h}": feedback_regression(panel, horizon=h, cutoff=cutoff, mode=mode, two_way=two_way)
               for h in horizons}
    vals = list(results.values())
    rows = [
        ["Positive feedback (beta_p)", *[_fmt(r["positive_feedback"]) for r in vals]],
        ["", *[f"({_fmt(r.se()[0])})" for r in vals]],
        ["Negative feedback (beta_n)", *[_fmt(r["negative_feedback"]) for r in vals]],
        ["", *[f"({_fmt(r.se()[1])})" for r in vals]],
        ["P-value |beta_p| = |beta_n|", *[_fmt(r.wald_tests[SYMMETRY_TEST][1]) for r in vals]],
        ["Individual fixed effects", *["Yes"] * 4],
        ["Week fixed effects", *["Yes" if two_way else "No"] * 4],
        ["Individuals", *[str(r.n_individuals) for r in vals]],
        ["Weeks", *[str(r.n_weeks) for r in vals]],
        ["Observations", *[str(r.n_obs) for r in vals]],
    ]
    notes = [
        f"Feedback categories: share correct vs own mean, cutoff {cutoff:g} ({mode});",
        "boundary weeks fall in the base category. Individuals observed in all three",
        "categories only. Controls: ticket counts in week t. Sample excludes weeks",
        "that won a jackpot prize in week t. Robust standard errors in round brackets.",
    ]
    text = _grid(rows, ["", *results.keys()], title, notes)
    tidy = pd.DataFrame([row for col, res in results.items() for row in _tidy_rows(name, col, res)])
    return text, tidy


def _table3(panel, cutoff=0.10, mode="relative", **kw):
    return _feedback_table(panel, "table3", "Response to positive and negative feedback", cutoff, mode)


def _tableA3(panel, mode="relative", **kw):
    return _feedback_table(panel, "tableA3", "Response to feedback, 5% cutoff", 0.05, mode)


def _tableA4(panel, mode="relative", **kw):
    return _feedback_table(panel, "tableA4", "Response to feedback, 15% cutoff", 0.15, mode)


def _tableA5(panel, cutoff=0.10, mode="relative", **kw):
    return _feedback_table(
        panel, "tableA5", "Response to feedback with week fixed effects", cutoff, mode, two_way=True
    )


_IV_COLUMNS = (
    ("Savings withdrawal", "savings_withdrawal", "elasticity"),
    ("Savings deposit", "savings_deposit", "elasticity"),
    ("Net savings deposit", "net_savings", "KSH"),
    ("Applied for loan", "loan_applied", "indicator"),
    ("Loans received", "loans_received", "elasticity"),
    ("Loan repayments", "loan_repayments", "elasticity"),
)


def _table4(panel, **_) -> tuple[str, pd.DataFrame]:
    results = {label: two_sls(panel, column) for label, column, _ in _IV_COLUMNS}
    vals = list(results.values())
    digits = [0 if unit == "KSH" else 3 for _, _, unit in _IV_COLUMNS]
    rows = [
        ["Units", *[unit for _, _, unit in _IV_COLUMNS]],
        ["Betting expenditure", *[_fmt(r.coef[0], d) for r, d in zip(vals, digits)]],
        ["", *[f"({_fmt(r.se()[0], d)})" for r, d in zip(vals, digits)]],
        ["", *[f"[{_fmt(r.conf_int()[0][0], d)}, {_fmt(r.conf_int()[0][1], d)}]" for r, d in zip(vals, digits)]],
        ["First-stage partial F", *[_fmt(r.partial_f, 2) for r in vals]],
        ["Weak instrument (F<10)", *["yes" if r.weak_instrument else "no" for r in vals]],
        ["Individual fixed effects", *["Yes"] * 6],
        ["Individuals", *[str(r.n_individuals) for r in vals]],
        ["Weeks", *[str(r.n_weeks) for r in vals]],
        ["Observations", *[str(r.n_obs) for r in vals]],
    ]
    notes = [
        "2SLS: ihs betting expenditure instrumented by the share of correct picks in",
        "week t-1, controlling for ticket counts in week t-1, individual FE absorbed.",
        "Elasticity outcomes enter as ihs; net savings in KSH; loan application as an",
        "indicator. Sample excludes weeks following a jackpot prize. Robust SEs in",
        "round brackets, 95% CIs in square brackets.",
    ]
    text = _grid(rows, ["", *results.keys()], "IV estimates of increased betting expenditure", notes)
    tidy = pd.DataFrame([row for col, res in results.items() for row in _tidy_rows("table4", col, res)])
    return text, tidy


def _tableA2(panel, **_) -> tuple[str, pd.DataFrame]:
    results = {f"({l})": heterogeneity_regression(panel, lags=l) for l in (1, 2, 3, 4)}
    rows = []
    for lag in (1, 2, 3, 4):
        term = f"share_correct_lag{lag}"
        est_row = [f"Share correct t-{lag}"]
        se_row = [""]
        for res in results.values():
            if term in res.names:
                j = res.names.index(term)
                est_row.append(_fmt(res.coef[j]))
                se_row.append(f"({_fmt(res.se()[j])})")
            else:
                est_row.append("")
                se_row.append("")
        rows.append(est_row)
        rows.append(se_row)
    vals = list(results.values())
    rows += [
        ["Individual fixed effects", *["No"] * 4],
        ["Week fixed effects", *["Yes"] * 4],
        ["Individuals", *[str(r.n_individuals) for r in vals]],
        ["Weeks", *[str(r.n_weeks) for r in vals]],
        ["Observations", *[str(r.n_obs) for r in vals]],
    ]
    notes = [
        "Dependent variable: share of correct picks in week t. Controls: midweek and",
        "weekend ticket counts at each included lag. Week fixed effects only. Sample",
        "excludes weeks that won a jackpot prize in week t. Robust SEs in brackets.",
    ]
    text = _grid(rows, ["", *results.keys()], "Correlation of correct predictions across weeks", notes)
    tidy = pd.DataFrame([row for col, res in results.items() for row in _tidy_rows("tableA2", col, res)])
    return text, tidy


_A1_VARS = (
    ("Betting expenditure (weekly)", "betting_expenditure"),
    ("Betting income (weekly)", "betting_income"),
    ("Savings deposits (weekly)", "savings_deposit"),
    ("Savings withdrawals (weekly)", "savings_withdrawal"),
    ("Loans received (weekly)", "loans_received"),
)


def _tableA1(panel, **_) -> tuple[str, pd.DataFrame]:
    ever_bet = panel.groupby("individual_id")["placed_jackpot"].transform("max") > 0
    groups = {
        "Gamblers": panel[ever_bet],
        "Non-gamblers": panel[~ever_bet],
        "Full sample": panel,
    }
    rows = [["Number of individuals",
             *[str(g["individual_id"].nunique()) for g in groups.values()]]]
    tidy_rows = []
    for label, col in _A1_VARS:
        mean_row = [label]
        pct_row = [""]
        for gname, g in groups.items():
            if len(g):
                mean = g[col].mean()
                p25, p75 = np.percentile(g[col], [25, 75])
            else:
                mean = p25 = p75 = float("nan")
            mean_row.append(_fmt(mean, 2))
            pct_row.append(f"[{_fmt(p25, 0)}, {_fmt(p75, 0)}]")
            tidy_rows.append(
                {"table": "tableA1", "column": gname, "term": col,
                 "mean": mean, "p25": p25, "p75": p75,
                 "n_individuals": g["individual_id"].nunique(), "n_obs": len(g)}
            )
        rows.append(mean_row)
        rows.append(pct_row)
    notes = [
        "Mean values with 25th and 75th percentiles in brackets, over individual-week",
        "observations. Gamblers are individuals with at least one jackpot ticket.",
        "Amounts in KSH.",
    ]
    text = _grid(rows, ["", *groups.keys()], "Summary statistics", notes)
    return text, pd.DataFrame(tidy_rows)


def _figure1(panel, min_matches=500, level=0.95, **_) -> tuple[str, pd.DataFrame]:
    table = ability_table(panel, min_matches=min_matches, level=level)
    frame = table.frame.copy()
    frame["random_guess"] = table.reference
    lines = [
        "Ability estimates for frequent gamblers",
        f"individuals with >= {min_matches} picks: {len(frame)}",
        f"fraction of point estimates above 1/3: {_fmt(table.fraction_above_reference)}",
        f"disjoint confidence intervals present: {table.has_disjoint_intervals}",
        f"confidence level: {level:g}",
    ]
    if len(frame):
        widths = frame["upper"] - frame["lower"]
        lines.append(f"smallest interval width: {_fmt(widths.min())} "
                     f"(individual with {int(frame.loc[widths.idxmin(), 'matches'])} picks)")
    return "\n".join(lines) + "\n", frame


_BUILDERS = {
    "table2": _table2,
    "table3": _table3,
    "table4": _table4,
    "tableA1": _tableA1,
    "tableA2": _tableA2,
    "tableA3": _tableA3,
    "tableA4": _tableA4,
    "tableA5": _tableA5,
    "figure1": _figure1,
}


def build_table(panel: pd.DataFrame, which: str, **params) -> tuple[str, pd.DataFrame]:
    """Build one report: returns (text, tidy frame)."""
    if which not in _BUILDERS:
        raise ValueError(f"unknown table {which!r}; choose from {', '.join(TABLE_NAMES)}")
    return _BUILDERS[which](panel, **params)


def write_report(
    out_dir,
    which: str,
    text: str,
    frame: pd.DataFrame,
    manifest: RunManifest,
    figure=None,
) -> dict[str, Path]:
    """Write <which>.txt / .csv (manifest embedded) and optionally .png."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    txt_path = out / f"{which}.txt"
    csv_path = out / f"{which}.csv"
    txt_path.write_text(text + "\n" + manifest.text_footer() + "\n", encoding="utf-8")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(manifest.csv_comment() + "\n")
        frame.to_csv(fh, index=False)
    paths = {"txt": txt_path, "csv": csv_path}
    if figure is not None:
        png_path = out / f"{which}.png"
        figure.savefig(png_path)
        import matplotlib.pyplot as plt

        plt.close(figure)
        paths["png"] = png_path
    return paths
