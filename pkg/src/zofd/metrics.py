"""Evaluation metrics: gradient error, value progress, solved-fraction profiles.

A :class:`ProfileTable` holds one expected metric value per problem (the
Monte-Carlo mean over direction draws, or the mean best-iterate progress
over repetitions); :func:`fraction_solved` turns it into the share of
problems whose value falls below a threshold.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .directions import generate
from .errors import DomainError, ParameterError


def rel_grad_error(g, grad) -> float:
    """||g - grad|| / ||grad||; undefined for a zero true gradient."""
    g = np.asarray(g, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    denom = np.linalg.norm(grad)
    if denom == 0.0:
        raise DomainError("relative gradient error is undefined at a zero gradient")
    return float(np.linalg.norm(g - grad) / denom)


def value_progress(f_k, f_0, f_min) -> float:
    """(f_k - f_min) / (f_0 - f_min), the normalized remaining suboptimality."""
    if not f_0 > f_min:
        raise DomainError(f"need f_0 > f_min, got f_0={f_0}, f_min={f_min}")
    return (f_k - f_min) / (f_0 - f_min)


@dataclass
class ProfileTable:
    """Per-problem expected metric values over n_samples draws/repetitions."""

    rows: list  # (problem_id, expected_value)
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ParameterError("n_samples must be >= 1")
        for pid, value in self.rows:
            if value < 0:
                raise ParameterError(f"{pid}: expected_value must be >= 0, got {value}")


def fraction_solved(table: ProfileTable, tau) -> float:
    """Share of problems with expected value <= tau."""
    if not table.rows:
        raise DomainError("fraction_solved needs a nonempty table")
    if not tau > 0:
        raise DomainError("tau must be positive")
    values = np.array([v for _, v in table.rows])
    return float(np.mean(values <= tau))


def default_tau_grid():
    """25 logarithmically spaced thresholds between 1e-6 and 1."""
    return np.logspace(-6.0, 0.0, 25)


def profile_curve(table: ProfileTable, taus=None):
    """(tau, fraction_solved) pairs over a threshold grid."""
    if taus is None:
        taus = default_tau_grid()
    return [(float(t), fraction_solved(table, t)) for t in taus]


PROFILE_TABLE_HEADER = "problem_id,expected_value,n_samples"
PROFILE_CURVE_HEADER = "tau,fraction_solved"


def save_profile_table(path, table: ProfileTable, comment=None):
    lines = [f"# {comment}"] if comment else []
    lines.append(PROFILE_TABLE_HEADER)
    for pid, value in table.rows:
        lines.append(f"{pid},{value:.17g},{table.n_samples}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_profile_table(path) -> ProfileTable:
    rows = []
    n_samples = 1
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != PROFILE_TABLE_HEADER:
        raise ParameterError(f"{path}: not a profile table")
    for line in lines[1:]:
        pid, value, n = line.split(",")
        rows.append((pid, float(value)))
        n_samples = int(n)
    return ProfileTable(rows=rows, n_samples=n_samples)


def time_generation(kind, d, ell, repeats=500, rng=None):
    """Wall-clock statistics of direction-matrix generation.

    Runs 5 discarded warm-up generations, then ``repeats`` timed ones on a
    monotonic clock. Stream setup happens before timing starts. Returns
    (mean_seconds, sample_std_seconds).
    """
    if repeats < 2:
        raise ParameterError("repeats must be >= 2 for a standard deviation")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    if gen is None:
        raise ParameterError("time_generation needs an RngStream or Generator")
    for _ in range(5):
        generate(kind, d, ell, gen)
    samples = np.empty(repeats)
    for i in range(repeats):
        t0 = time.perf_counter()
        generate(kind, d, ell, gen)
        samples[i] = time.perf_counter() - t0
    return float(samples.mean()), float(samples.std(ddof=1))
