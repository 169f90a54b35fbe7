"""Figure rendering for grid and optimization results.

Figures are written next to the CSV they accompany, named by suffix off
the CSV stem.  Rows come in as plain dicts matching the CSV schema, so
this module stays decoupled from the engine types.  Uses the Agg
backend; no display is ever required.
"""

from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_grid_figures", "render_trace_figure"]

# strip volatile PNG metadata so reruns produce stable files
_META = {"Software": None, "Creation Time": None}


def _finite(values) -> np.ndarray:
    arr = np.array([v for v in values if v is not None], dtype=np.float64)
    return arr[np.isfinite(arr)]


def _grouped(rows, keys, value):
    out = defaultdict(list)
    for row in rows:
        out[tuple(row[k] for k in keys)].append(row[value])
    return out


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def render_grid_figures(rows, csv_path, knob_label: str) -> list[str]:
    """Correlation and slack summaries for grid-run rows.

    Produces mean test Pearson (with sample-std bands) against the split
    knob per slack count, the same against the slack count per knob
    value, and the mean nonzero-slack fraction when any cell used slack.
    """
    stem, _ = os.path.splitext(csv_path)
    paths = []
    m_values = sorted({row["m"] for row in rows})
    n_values = sorted({row["n_1"] for row in rows})

    by_cell = _grouped(rows, ("n_1", "m"), "pearson")

    fig, ax = plt.subplots(figsize=(6, 4))
    for m in m_values:
        xs, means, stds = [], [], []
        for n1 in n_values:
            vals = _finite(by_cell.get((n1, m), []))
            if vals.size:
                xs.append(n1)
                means.append(vals.mean())
                stds.append(vals.std(ddof=1) if vals.size > 1 else 0.0)
        if xs:
            ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, label=f"m={m}")
    ax.set_xlabel(knob_label)
    ax.set_ylabel("test Pearson correlation")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    paths.append(_save(fig, f"{stem}_pearson_vs_knob.png"))

    fig, ax = plt.subplots(figsize=(6, 4))
    for n1 in n_values:
        xs, means, stds = [], [], []
        for m in m_values:
            vals = _finite(by_cell.get((n1, m), []))
            if vals.size:
                xs.append(m)
                means.append(vals.mean())
                stds.append(vals.std(ddof=1) if vals.size > 1 else 0.0)
        if xs:
            ax.errorbar(
                xs, means, yerr=stds, marker="s", capsize=3,
                label=f"{knob_label}={n1}",
            )
    ax.set_xlabel("slack variables m")
    ax.set_ylabel("test Pearson correlation")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    paths.append(_save(fig, f"{stem}_pearson_vs_m.png"))

    if any(m > 0 for m in m_values):
        frac_by_m = defaultdict(list)
        for row in rows:
            if row["m"] > 0:
                frac_by_m[row["m"]].append(row["n_nonzero_slack"] / row["m"])
        fig, ax = plt.subplots(figsize=(6, 4))
        ms = sorted(frac_by_m)
        means = [np.mean(frac_by_m[m]) for m in ms]
        stds = [
            np.std(frac_by_m[m], ddof=1) if len(frac_by_m[m]) > 1 else 0.0
            for m in ms
        ]
        ax.errorbar(ms, means, yerr=stds, marker="o", capsize=3)
        ax.axhline(0.5, linestyle="--", alpha=0.5)
        ax.set_ylim(-0.05, 1.05)
        ax.set_xlabel("slack variables m")
        ax.set_ylabel("fraction of nonzero slack bits")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        paths.append(_save(fig, f"{stem}_slack_fraction.png"))

    return paths


def render_trace_figure(rows, csv_path) -> list[str]:
    """Model estimate vs true response per optimization iteration."""
    stem, _ = os.path.splitext(csv_path)
    its = [row["iteration"] for row in rows]
    y_model = [row["y_model"] for row in rows]
    y_true = [row["y_true"] for row in rows]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(its, y_model, marker="o", label="model minimum y")
    if any(v is not None for v in y_true):
        ax1.plot(its, y_true, marker="s", label="black-box response y'")
        gaps = [
            abs(t - m) if t is not None else np.nan
            for t, m in zip(y_true, y_model)
        ]
        ax2.semilogy(its, gaps, marker=".", color="tab:red")
        ax2.set_ylabel("|y' - y|")
    ax1.set_ylabel("energy / response")
    ax1.legend()
    ax1.grid(True, alpha=0.3)
    ax2.set_xlabel("iteration")
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    return [_save(fig, f"{stem}_trace.png")]
