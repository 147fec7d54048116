"""Matplotlib figures rendered by the report path, saved next to the CSVs.

The ability figure mirrors the published layout: a horizontal histogram of
estimated abilities on the left, per-gambler point estimates with exact
confidence whiskers ordered by match count on the right, and the 1/3
random-guessing reference line across both panels.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .intervals import AbilityTable

__all__ = ["ability_figure", "coefficient_figure"]

_REFERENCE_STYLE = {"color": "black", "linewidth": 1.0, "linestyle": "--"}


def ability_figure(table: AbilityTable):
    """Histogram plus ordered interval whiskers with the 1/3 reference."""
    frame = table.frame
    fig, (ax_hist, ax_pts) = plt.subplots(
        1, 2, figsize=(10, 5), sharey=True, gridspec_kw={"width_ratios": [1, 3]}
    )
    if len(frame):
        ax_hist.hist(frame["point"], bins=min(30, max(5, len(frame) // 5)),
                     orientation="horizontal", color="0.6")
        x = np.arange(len(frame))
        lower_err = frame["point"] - frame["lower"]
        upper_err = frame["upper"] - frame["point"]
        ax_pts.errorbar(x, frame["point"], yerr=[lower_err, upper_err],
                        fmt="o", color="black", markersize=3, elinewidth=0.8, capsize=2)
        ax_pts.set_xlim(-1, len(frame))
    for ax in (ax_hist, ax_pts):
        ax.axhline(table.reference, **_REFERENCE_STYLE)
    ax_hist.set_xlabel("count")
    ax_hist.set_ylabel("estimated ability (share of correct picks)")
    ax_pts.set_xlabel(f"gamblers with >= {table.min_matches} picks, ordered by picks")
    fig.suptitle(f"Ability estimates with {table.level:.0%} exact confidence intervals")
    fig.tight_layout()
    return fig


def coefficient_figure(tidy: pd.DataFrame, title: str):
    """Dot-and-whisker plot of coefficient estimates with their 95% CIs."""
    rows = tidy.dropna(subset=["estimate"]) if "estimate" in tidy.columns else tidy.iloc[0:0]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.45 * max(len(rows), 1) + 1.5)))
    if len(rows):
        labels = [f"{c}: {t}" for c, t in zip(rows["column"], rows["term"])]
        y = np.arange(len(rows))[::-1]
        has_ci = "ci_low" in rows.columns and rows["ci_low"].notna().all()
        if has_ci:
            ax.errorbar(
                rows["estimate"], y,
                xerr=[rows["estimate"] - rows["ci_low"], rows["ci_high"] - rows["estimate"]],
                fmt="o", color="black", markersize=4, elinewidth=0.9, capsize=2,
            )
        else:
            ax.plot(rows["estimate"], y, "o", color="black", markersize=4)
        ax.set_yticks(y)
        ax.set_yticklabels(labels, fontsize=8)
        ax.axvline(0.0, **_REFERENCE_STYLE)
    ax.set_xlabel("estimate (95% CI)")
    ax.set_title(title)
    fig.tight_layout()
    return fig
