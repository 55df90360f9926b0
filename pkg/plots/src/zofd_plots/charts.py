"""Chart rendering for the experiment CSV artifacts.

The input contract is the delimited output of the companion optimizer CLI: an
optional ``#``-prefixed provenance comment line, a header row, then data rows.
Four chart types cover the artifacts it writes: generation-time bars,
gradient-error boxes, convergence bands, and solved-fraction profiles.

Rendering is deterministic for identical input bytes: the style is pinned via
an explicit rc block, the SVG id hash salt is fixed, and no wall-clock
metadata is written into the output. Input files are only ever opened for
reading.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless; must be set before pyplot is imported

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

#: single-letter series labels keyed by the optimizer's direction-kind names
KIND_LETTERS = {
    "spherical": "S",
    "gaussian": "G",
    "rademacher": "R",
    "coordinate": "C",
    "householder": "H",
    "butterfly": "B",
    "perm_householder": "P",
    "qr_haar": "Q",
    "stiefel": "St",
}

#: columns each chart type needs; extra columns are allowed and ignored
REQUIRED_COLUMNS = {
    "timing": ("kind", "d", "ell", "mean_s", "std_s", "repeats"),
    "grad_error": ("problem", "kind", "ell", "trial", "rel_error"),
    "convergence": ("problem", "kind", "ell", "repeat", "evals", "f_best"),
    "profile": ("tau", "fraction_solved"),
}

CHARTS = tuple(REQUIRED_COLUMNS)

#: pinned style so identical CSV bytes render to identical image bytes
_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 100.0,
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linewidth": 0.6,
    "legend.framealpha": 0.9,
    "svg.hashsalt": "zofd-plots",
}


class SchemaError(ValueError):
    """The CSV lacks columns the requested chart needs."""


class EmptyInputError(ValueError):
    """The CSV holds no data rows; nothing to draw."""


class MonotonicityWarning(UserWarning):
    """A profile series decreased somewhere although tau only grew."""


@dataclass
class PlotSpec:
    """One figure request: which CSV, which chart, where to write it."""

    input_csv: Path
    chart: str
    out_image: Path
    group_by: tuple = ()
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    dpi: int = 150
    svg: bool = False

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(
                f"unknown chart {self.chart!r}; choose from {', '.join(CHARTS)}"
            )
        if self.dpi < 10:
            raise ValueError(f"dpi must be at least 10, got {self.dpi}")
        self.input_csv = Path(self.input_csv)
        self.out_image = Path(self.out_image)
        self.group_by = tuple(self.group_by)


def kind_letter(kind) -> str:
    """Legend letter for a direction kind; unknown kinds keep their name."""
    return KIND_LETTERS.get(str(kind), str(kind))


def load_frame(spec: PlotSpec) -> pd.DataFrame:
    """Read the CSV behind ``spec`` and enforce the chart's column contract."""
    if not spec.input_csv.exists():
        raise FileNotFoundError(f"input CSV not found: {spec.input_csv}")
    try:
        df = pd.read_csv(spec.input_csv, comment="#")
    except pd.errors.EmptyDataError:
        raise EmptyInputError(f"{spec.input_csv} holds no data rows") from None
    missing = [c for c in REQUIRED_COLUMNS[spec.chart] if c not in df.columns]
    if missing:
        raise SchemaError(
            f"{spec.chart} chart needs columns "
            f"{', '.join(REQUIRED_COLUMNS[spec.chart])}; "
            f"missing: {', '.join(missing)}"
        )
    if df.empty:
        raise EmptyInputError(f"{spec.input_csv} holds no data rows")
    return df


def _series_key(df: pd.DataFrame, spec: PlotSpec, default: tuple) -> list:
    """Column names that split the frame into plotted series."""
    cols = spec.group_by or default
    return [c for c in cols if c in df.columns]


def _series_label(key_cols, key) -> str:
    if not isinstance(key, tuple):
        key = (key,)
    parts = []
    for col, val in zip(key_cols, key):
        if col == "kind":
            parts.append(kind_letter(val))
        elif col == "problem":
            parts.append(str(val))
        else:
            parts.append(f"{col}={val}")
    return " ".join(parts) if parts else "all"


def _figure_timing(df: pd.DataFrame, spec: PlotSpec):
    fig, ax = plt.subplots()
    labels = [
        f"{kind_letter(r.kind)}\nd={r.d} ell={r.ell}" for r in df.itertuples()
    ]
    pos = np.arange(len(df))
    ax.bar(pos, df["mean_s"], yerr=df["std_s"], capsize=3.0, color="#4878a8")
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_yscale("log")
    ax.set_ylabel(spec.ylabel or "generation time per matrix [s]")
    ax.set_xlabel(spec.xlabel or "direction kind")
    return fig


def _figure_grad_error(df: pd.DataFrame, spec: PlotSpec):
    fig, ax = plt.subplots()
    key_cols = _series_key(df, spec, ("kind", "ell"))
    groups = list(df.groupby(key_cols, sort=True))
    ax.boxplot(
        [g["rel_error"].to_numpy() for _, g in groups],
        tick_labels=[_series_label(key_cols, k) for k, _ in groups],
    )
    ax.set_yscale("log")
    ax.set_ylabel(spec.ylabel or "relative gradient error")
    ax.set_xlabel(spec.xlabel or "series")
    ax.tick_params(axis="x", labelsize=8)
    return fig


def _figure_convergence(df: pd.DataFrame, spec: PlotSpec):
    fig, ax = plt.subplots()
    # problem must stay in the default split: each problem has its own eval
    # grid and value scale, so pooling them draws meaningless sawtooth bands
    key_cols = _series_key(df, spec, ("problem", "kind", "ell"))
    positive = True
    for key, group in df.groupby(key_cols, sort=True):
        stats = group.groupby("evals")["f_best"].agg(["mean", "std"]).fillna(0.0)
        stats = stats.sort_index()
        lo = stats["mean"] - stats["std"]
        hi = stats["mean"] + stats["std"]
        positive &= bool((lo > 0).all())
        ax.plot(stats.index, stats["mean"], label=_series_label(key_cols, key))
        ax.fill_between(stats.index, lo, hi, alpha=0.25)
    if positive:
        ax.set_yscale("log")
    ax.set_ylabel(spec.ylabel or "best value so far")
    ax.set_xlabel(spec.xlabel or "function evaluations")
    ax.legend(fontsize=8)
    return fig


def _figure_profile(df: pd.DataFrame, spec: PlotSpec):
    fig, ax = plt.subplots()
    key_cols = _series_key(df, spec, ("kind", "ell"))
    groups = list(df.groupby(key_cols, sort=True)) if key_cols else [((), df)]
    broken = []
    for key, group in groups:
        series = group.sort_values("tau")
        fracs = series["fraction_solved"].to_numpy()
        label = _series_label(key_cols, key)
        if np.any(np.diff(fracs) < 0):
            broken.append(label)
        ax.plot(series["tau"], fracs, drawstyle="steps-post", label=label)
    if broken:
        names = ", ".join(broken)
        warnings.warn(
            f"fraction_solved decreases with growing tau for: {names}",
            MonotonicityWarning,
            stacklevel=2,
        )
        fig.text(
            0.99, 0.01, f"warning: non-monotone series: {names}",
            ha="right", va="bottom", fontsize=7, color="#aa2222",
        )
    ax.set_xscale("log")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(spec.ylabel or "fraction of problems solved")
    ax.set_xlabel(spec.xlabel or "threshold tau")
    ax.legend(fontsize=8)
    return fig


_FIGURES = {
    "timing": _figure_timing,
    "grad_error": _figure_grad_error,
    "convergence": _figure_convergence,
    "profile": _figure_profile,
}


def build_figure(spec: PlotSpec):
    """Load, validate, and draw; returns the figure without writing it."""
    df = load_frame(spec)
    with matplotlib.rc_context(_STYLE):
        fig = _FIGURES[spec.chart](df, spec)
        if spec.title:
            fig.axes[0].set_title(spec.title)
        fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Render one chart to ``spec.out_image``; returns the written path.

    All validation happens before the figure is drawn, so failed calls leave
    no file behind. The write goes through a sibling temp file and a rename.
    """
    fig = build_figure(spec)
    fmt = "svg" if spec.svg else "png"
    # SVG embeds a creation date unless told otherwise; PNG via Agg does not.
    metadata = {"Date": None} if spec.svg else None
    tmp = spec.out_image.with_name(spec.out_image.name + ".tmp")
    try:
        with matplotlib.rc_context(_STYLE):
            fig.savefig(tmp, format=fmt, dpi=spec.dpi, metadata=metadata)
        os.replace(tmp, spec.out_image)
    finally:
        plt.close(fig)
        if tmp.exists():
            tmp.unlink()
    return spec.out_image
