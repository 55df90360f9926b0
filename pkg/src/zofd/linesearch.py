"""Adaptive line-search optimizer driven by finite-difference surrogates.

Each outer iteration draws a fresh direction matrix, estimates the gradient
with :func:`zofd.estimator.forward_fd` (reusing the current objective
value), and backtracks the step size until the sufficient-decrease test

    F(x - gamma g) <= F(x) - c gamma ||g||^2

passes or gamma hits its floor. On acceptance gamma expands by rho_exp (up
to gamma_max); on a floor rejection the iterate is left unchanged and gamma
stays at gamma_min. gamma persists across iterations.

Every objective evaluation, including each backtracking trial and the
single base value per iteration, is charged against a fixed budget. The
budget check runs before each evaluation, so a run can end mid-iteration;
the total number of evaluations equals the budget exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .directions import KINDS, generate
from .errors import EvaluationError, ParameterError
from .estimator import eval_batch, forward_fd
from .rng import RngStream

#: named hyperparameter sets; `adversarial` reduces to the multiplicative
#: scheme where one contraction and one expansion cancel exactly
PRESETS = {
    "synthetic": dict(
        h=1e-7, gamma0=1.0, gamma_min=1e-10, gamma_max=1000.0,
        c=1e-7, theta=0.5, rho_exp=2.0,
    ),
    "cutest": dict(
        h=1e-7, gamma0=0.5, gamma_min=1e-10, gamma_max=1.0,
        c=1e-5, theta=0.5, rho_exp=2.0,
    ),
    "adversarial": dict(
        h=1e-7, gamma0=1.0, gamma_min=1e-10, gamma_max=1000.0,
        c=1e-7, theta=0.9, rho_exp=1.0 / 0.9,
    ),
}


@dataclass
class FdConfig:
    """Estimator and optimizer hyperparameters."""

    budget: int
    ell: int
    kind: str
    h: float = 1e-7
    gamma0: float = 1.0
    gamma_min: float = 1e-10
    gamma_max: float = 1000.0
    c: float = 1e-7
    theta: float = 0.5
    rho_exp: float = 2.0
    strict_eval: bool = False

    def validate(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown direction kind {self.kind!r}")
        if self.ell < 1:
            raise ParameterError("ell must be >= 1")
        if self.budget < self.ell + 2:
            raise ParameterError(
                f"budget must be at least ell + 2 = {self.ell + 2}, got {self.budget}"
            )
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ParameterError("h must be positive and finite")
        if not (0 < self.gamma_min <= self.gamma0 <= self.gamma_max):
            raise ParameterError("need 0 < gamma_min <= gamma0 <= gamma_max")
        if not (0.0 < self.theta < 1.0):
            raise ParameterError("theta must lie in (0, 1)")
        if self.rho_exp < 1.0:
            raise ParameterError("rho_exp must be >= 1")
        if self.c < 0.0:
            raise ParameterError("c must be nonnegative")
        return self


def preset_config(name, budget, ell, kind, **overrides) -> FdConfig:
    """Build an FdConfig from a named preset, with field overrides."""
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = FdConfig(budget=budget, ell=ell, kind=kind, **PRESETS[name])
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()


@dataclass
class TraceRecord:
    evals_so_far: int
    f_best: float
    f_current: float
    gamma: float  # step size after the iteration's update
    accepted: bool


@dataclass
class RunTrace:
    records: list[TraceRecord]
    final_x: np.ndarray
    best_x: np.ndarray
    best_f: float
    evals_total: int


class _BudgetExhausted(Exception):
    pass


class _BudgetedObjective:
    """Charges every evaluation against the budget before it happens.

    When a batch would cross the budget, the affordable prefix is still
    evaluated (those calls are spent) and the exhaustion signal is raised.
    """

    def __init__(self, inner, budget):
        self.inner = inner
        self.budget = budget
        self.used = 0

    def eval_many(self, pts):
        pts = np.atleast_2d(pts)
        n = pts.shape[0]
        if self.used + n > self.budget:
            k = self.budget - self.used
            if k > 0:
                eval_batch(self.inner, pts[:k])
                self.used = self.budget
            raise _BudgetExhausted
        self.used += n
        return eval_batch(self.inner, pts)

    def eval_one(self, x):
        return float(self.eval_many(np.asarray(x)[None, :])[0])


def run(f, x0, cfg: FdConfig, rng: RngStream) -> RunTrace:
    """Minimize ``f`` from ``x0`` under ``cfg`` using directions from ``rng``."""
    cfg.validate()
    x = np.array(x0, dtype=np.float64)
    d = x.size
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    budgeted = _BudgetedObjective(f, cfg.budget)
    gamma = cfg.gamma0

    fx = budgeted.eval_one(x)
    if not np.isfinite(fx):
        raise EvaluationError(f"objective returned {fx} at the start point", point=x)
    f_best = fx
    x_best = x.copy()
    records = [TraceRecord(budgeted.used, f_best, fx, gamma, True)]

    def trial_value(pt):
        v = budgeted.eval_one(pt)
        if cfg.strict_eval and not np.isfinite(v):
            raise EvaluationError(f"objective returned {v} at a trial point", point=pt)
        return v

    try:
        while True:
            p = generate(cfg.kind, d, cfg.ell, gen)
            est = forward_fd(budgeted, x, cfg.h, p, cached_fx=fx)
            g = est.g
            gn2 = float(g @ g)

            ft = trial_value(x - gamma * g)
            ok = np.isfinite(ft) and ft <= fx - cfg.c * gamma * gn2
            while not ok and gamma > cfg.gamma_min:
                gamma = max(gamma * cfg.theta, cfg.gamma_min)
                ft = trial_value(x - gamma * g)
                ok = np.isfinite(ft) and ft <= fx - cfg.c * gamma * gn2

            if ok:
                x = x - gamma * g
                fx = ft
                gamma = min(gamma * cfg.rho_exp, cfg.gamma_max)
                if fx < f_best:
                    f_best = fx
                    x_best = x.copy()
                accepted = True
            else:
                accepted = False  # gamma stays at its floor
            records.append(TraceRecord(budgeted.used, f_best, fx, gamma, accepted))
    except _BudgetExhausted:
        pass

    return RunTrace(
        records=records,
        final_x=x,
        best_x=x_best,
        best_f=f_best,
        evals_total=budgeted.used,
    )


TRACE_HEADER = "evals,f_best,f_current,gamma,accepted"


def save_trace(path, trace: RunTrace, comment: Optional[str] = None):
    """Write a trace as CSV; ``accepted`` is serialized as 0/1."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(TRACE_HEADER)
    for r in trace.records:
        lines.append(
            f"{r.evals_so_far},{r.f_best:.17g},{r.f_current:.17g},"
            f"{r.gamma:.17g},{int(r.accepted)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
