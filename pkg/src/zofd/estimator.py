"""Forward finite-difference gradient surrogate.

Given a direction matrix P with columns p_i, the surrogate at x is

    g(x, h, P) = (d / ell) * sum_i ((F(x + h p_i) - F(x)) / h) * p_i.

F(x) is evaluated once per estimate and can be supplied by the caller, so
an optimizer sharing the base value with its acceptance test never pays for
it twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .directions import DirectionMatrix
from .errors import DimensionError, EvaluationError, ParameterError


@dataclass
class GradEstimate:
    g: np.ndarray
    evals_used: int
    base_value: float


def eval_batch(f, points):
    """Evaluate an objective at each row of ``points``.

    Uses the objective's vectorized ``eval_many`` when present; otherwise
    falls back to row-by-row calls of ``eval`` (or of ``f`` itself when a
    plain callable is passed). Row order is the summation order.
    """
    many = getattr(f, "eval_many", None)
    if many is not None:
        return np.asarray(many(points), dtype=np.float64)
    single = getattr(f, "eval", f)
    return np.array([float(single(p)) for p in points])


def eval_point(f, x) -> float:
    many = getattr(f, "eval_many", None)
    if many is not None:
        return float(np.asarray(many(np.asarray(x)[None, :]))[0])
    single = getattr(f, "eval", f)
    return float(single(x))


def forward_fd(f, x, h, p: DirectionMatrix, cached_fx=None) -> GradEstimate:
    """Estimate the gradient of ``f`` at ``x`` from forward differences.

    Parameters
    ----------
    f : Objective or callable
    x : array_like, shape (d,)
    h : float
        Forward-difference discretization, must be positive.
    p : DirectionMatrix
        Probe directions; ``p.d`` must match the size of ``x``.
    cached_fx : float, optional
        Previously computed F(x). When given, only the ell probe points are
        evaluated and ``evals_used`` is ell instead of ell + 1.

    Raises
    ------
    ParameterError
        If ``h <= 0`` or not finite.
    DimensionError
        If ``x`` and ``p`` disagree on d.
    EvaluationError
        If any evaluation is non-finite; the offending point is attached.
    """
    if not np.isfinite(h) or h <= 0:
        raise ParameterError(f"h must be positive and finite, got {h}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != p.d:
        raise DimensionError(f"x has shape {x.shape}, directions expect d={p.d}")

    if cached_fx is None:
        fx = eval_point(f, x)
        evals = p.ell + 1
    else:
        fx = float(cached_fx)
        evals = p.ell
    if not np.isfinite(fx):
        raise EvaluationError(f"objective returned {fx} at the base point", point=x)

    probes = x[None, :] + h * p.columns.T
    values = eval_batch(f, probes)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise EvaluationError(
            f"objective returned {values[i]} at probe {i}", point=probes[i]
        )

    weights = (values - fx) / h
    g = (p.d / p.ell) * (p.columns @ weights)
    return GradEstimate(g=g, evals_used=evals, base_value=fx)
