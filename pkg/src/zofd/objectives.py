"""Benchmark objectives with analytic gradients and known minima.

Each constructor returns an :class:`Objective` whose ``eval_many`` maps an
(n, d) array of points to n values; ``eval`` delegates to ``eval_many`` on
a singleton batch, so the scalar view shares the batched code path. Known
minimizers (``x_min``) are carried for testing only and are never handed to
an optimizer.

A name-addressable registry backs the CLI: built-in problems register a
factory, external problems register a validated instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DimensionError
from .rng import RngStream


@dataclass
class Objective:
    name: str
    d: int
    eval_many: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    f_min: Optional[float] = None
    x0_default: np.ndarray = None
    pure: bool = True
    x_min: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.x0_default is None:
            self.x0_default = np.ones(self.d)
        self.x0_default = np.asarray(self.x0_default, dtype=np.float64)
        if self.x0_default.shape != (self.d,):
            raise DimensionError(f"x0_default must have shape ({self.d},)")

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise DimensionError(f"point has shape {x.shape}, objective is d={self.d}")
        return float(self.eval_many(x[None, :])[0])


def central_diff_gradient(f, x, step=1e-6):
    """Coordinate-wise central differences; the oracle against analytic grads."""
    x = np.asarray(x, dtype=np.float64)
    single = getattr(f, "eval", f)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = step
        g[i] = (single(x + e) - single(x - e)) / (2.0 * step)
    return g


def make_least_squares(d, L=100.0, mu=1.0, rng: RngStream = None) -> Objective:
    """Strongly convex quadratic F(x) = ||Ax - y||^2 / 2.

    A = Q S Q^T with Q the orthogonal factor of a Gaussian matrix and S
    diagonal with entries linearly spaced between sqrt(mu) and sqrt(L), so
    the Hessian A^T A has spectrum in [mu, L]. y = A x* for Gaussian x*,
    hence f_min = 0 at x*.
    """
    if d < 1:
        raise DimensionError("d must be positive")
    if not (L >= mu > 0):
        raise ConfigError(f"need L >= mu > 0, got L={L}, mu={mu}")
    if rng is None:
        rng = RngStream(0)
    gen = rng.generator()
    q, _ = np.linalg.qr(gen.standard_normal((d, d)))
    s = np.linspace(np.sqrt(mu), np.sqrt(L), d)
    a = (q * s) @ q.T
    x_star = gen.standard_normal(d)
    y = a @ x_star

    def eval_many(pts):
        r = np.atleast_2d(pts) @ a.T - y
        return 0.5 * np.einsum("ij,ij->i", r, r)

    return Objective(
        name="least_squares",
        d=d,
        eval_many=eval_many,
        grad=lambda x: a.T @ (a @ x - y),
        f_min=0.0,
        x0_default=np.ones(d),
        x_min=x_star,
        meta={"L": L, "mu": mu, "seed": rng.seed, "stream_id": rng.stream_id},
    )


def make_qing(d) -> Objective:
    """F(x) = sum_i (x_i^2 - i)^2, minimized at x_i = +-sqrt(i)."""
    if d < 1:
        raise DimensionError("d must be positive")
    w = np.arange(1.0, d + 1.0)

    def eval_many(pts):
        return ((np.atleast_2d(pts) ** 2 - w) ** 2).sum(axis=1)

    return Objective(
        name="qing",
        d=d,
        eval_many=eval_many,
        grad=lambda x: 4.0 * x * (x**2 - w),
        f_min=0.0,
        x0_default=np.ones(d),
        x_min=np.sqrt(w),
    )


def make_rosenbrock(d) -> Objective:
    """Chained Rosenbrock valley, minimized at the all-ones point."""
    if d < 2:
        raise DimensionError("rosenbrock needs d >= 2")

    def eval_many(pts):
        pts = np.atleast_2d(pts)
        head, tail = pts[:, :-1], pts[:, 1:]
        return (100.0 * (tail - head**2) ** 2 + (head - 1.0) ** 2).sum(axis=1)

    def grad(x):
        g = np.zeros(d)
        diff = x[1:] - x[:-1] ** 2
        g[:-1] = -400.0 * x[:-1] * diff + 2.0 * (x[:-1] - 1.0)
        g[1:] += 200.0 * diff
        return g

    return Objective(
        name="rosenbrock",
        d=d,
        eval_many=eval_many,
        grad=grad,
        f_min=0.0,
        x0_default=np.full(d, 0.5),
        x_min=np.ones(d),
    )


def make_logistic(d, n=1000, lam=1e-5, rng: RngStream = None) -> Objective:
    """Regularized logistic regression on synthetic linearly separable labels.

    Data z_i ~ N(0, I); labels y_i = sign(<x*, z_i>) with sign(0) = +1 for a
    Gaussian x*. No analytic minimum value; progress metrics substitute the
    best observed value.
    """
    if d < 1:
        raise DimensionError("d must be positive")
    if n < 1:
        raise ConfigError("n must be positive")
    if lam < 0:
        raise ConfigError("lambda must be nonnegative")
    if rng is None:
        rng = RngStream(0)
    gen = rng.generator()
    z = gen.standard_normal((n, d))
    x_star = gen.standard_normal(d)
    labels = np.where(z @ x_star >= 0.0, 1.0, -1.0)

    def eval_many(pts):
        pts = np.atleast_2d(pts)
        margins = (pts @ z.T) * labels
        loss = np.logaddexp(0.0, -margins).mean(axis=1)
        return loss + lam * np.einsum("ij,ij->i", pts, pts)

    def grad(x):
        m = (z @ x) * labels
        sig = np.exp(-np.logaddexp(0.0, m))  # sigmoid(-m), overflow-safe
        return z.T @ (-labels * sig) / n + 2.0 * lam * x

    return Objective(
        name="logistic",
        d=d,
        eval_many=eval_many,
        grad=grad,
        x0_default=np.ones(d),
        meta={"n": n, "lam": lam, "seed": rng.seed, "stream_id": rng.stream_id},
    )


def make_trid(d) -> Objective:
    """F(x) = sum (x_i - 1)^2 - sum x_i x_{i-1}.

    The stationarity system gives the minimizer x_i = i (d + 1 - i) and
    minimum value -d (d + 4)(d - 1) / 6.
    """
    if d < 1:
        raise DimensionError("d must be positive")

    def eval_many(pts):
        pts = np.atleast_2d(pts)
        val = ((pts - 1.0) ** 2).sum(axis=1)
        if d > 1:
            val = val - (pts[:, 1:] * pts[:, :-1]).sum(axis=1)
        return val

    def grad(x):
        g = 2.0 * (x - 1.0)
        if d > 1:
            g[1:] -= x[:-1]
            g[:-1] -= x[1:]
        return g

    i = np.arange(1.0, d + 1.0)
    return Objective(
        name="trid",
        d=d,
        eval_many=eval_many,
        grad=grad,
        f_min=-d * (d + 4.0) * (d - 1.0) / 6.0,
        x0_default=np.ones(d),
        x_min=i * (d + 1.0 - i),
    )


def make_griewank(d) -> Objective:
    """F(x) = 1 + sum x_i^2/4000 - prod cos(x_i / sqrt(i)), nonnegative, 0 at 0."""
    if d < 1:
        raise DimensionError("d must be positive")
    sq = np.sqrt(np.arange(1.0, d + 1.0))

    def eval_many(pts):
        pts = np.atleast_2d(pts)
        quad = (pts**2).sum(axis=1) / 4000.0
        return 1.0 + quad - np.cos(pts / sq).prod(axis=1)

    def grad(x):
        c = np.cos(x / sq)
        # products of cos over j != i via prefix/suffix, stable when some c_i = 0
        prefix = np.concatenate(([1.0], np.cumprod(c)[:-1]))
        suffix = np.concatenate((np.cumprod(c[::-1])[-2::-1], [1.0]))
        return x / 2000.0 + np.sin(x / sq) / sq * prefix * suffix

    return Objective(
        name="griewank",
        d=d,
        eval_many=eval_many,
        grad=grad,
        f_min=0.0,
        x0_default=np.ones(d),
        x_min=np.zeros(d),
    )


# ------------------------------------------------------------------ registry

_BUILTIN_FACTORIES = {
    "least_squares": (make_least_squares, True, {"L": 100.0, "mu": 1.0}),
    "qing": (make_qing, False, {}),
    "rosenbrock": (make_rosenbrock, False, {}),
    "logistic": (make_logistic, True, {"n": 1000, "lam": 1e-5}),
    "trid": (make_trid, False, {}),
    "griewank": (make_griewank, False, {}),
}

_EXTERNAL: dict[str, Objective] = {}


def problem_names():
    return sorted(set(_BUILTIN_FACTORIES) | set(_EXTERNAL))


def describe_problems():
    """Registry listing for the CLI: (name, kind, parameter names)."""
    rows = []
    for name in sorted(_BUILTIN_FACTORIES):
        factory, needs_rng, defaults = _BUILTIN_FACTORIES[name]
        params = ["d"] + (["seed"] if needs_rng else []) + sorted(defaults)
        rows.append((name, "builtin", ",".join(params)))
    for name in sorted(_EXTERNAL):
        rows.append((name, "external", f"d={_EXTERNAL[name].d}"))
    return rows


def get_problem(name, d=None, rng: RngStream = None, **params) -> Objective:
    """Instantiate a registered problem by name."""
    if name in _EXTERNAL:
        obj = _EXTERNAL[name]
        if d is not None and d != obj.d:
            raise ConfigError(f"{name} is registered with d={obj.d}, requested {d}")
        return obj
    if name not in _BUILTIN_FACTORIES:
        raise ConfigError(f"unknown problem {name!r}; known: {', '.join(problem_names())}")
    factory, needs_rng, defaults = _BUILTIN_FACTORIES[name]
    if d is None:
        raise ConfigError(f"problem {name!r} needs a dimension")
    kwargs = dict(defaults)
    for key, value in params.items():
        if key not in defaults:
            raise ConfigError(f"problem {name!r} has no parameter {key!r}")
        kwargs[key] = value
    if needs_rng:
        kwargs["rng"] = rng if rng is not None else RngStream(0)
    obj = factory(d, **kwargs)
    obj.meta = {**obj.meta, "problem": name, "d": d}
    return obj


def validate_objective(obj: Objective, rng: RngStream = None, n_points=5):
    """Check the objective's self-consistency invariants.

    Analytic gradients must match central differences (step 1e-6) to 1e-5
    relative at ``n_points`` random points; a declared f_min must match the
    evaluation at the known minimizer to 1e-8 relative.
    """
    gen = (rng or RngStream(2024)).generator()
    if obj.grad is not None:
        for _ in range(n_points):
            x = gen.standard_normal(obj.d)
            g = np.asarray(obj.grad(x), dtype=np.float64)
            num = central_diff_gradient(obj, x, step=1e-6)
            err = np.linalg.norm(g - num) / max(1.0, np.linalg.norm(g))
            if err > 1e-5:
                raise ConfigError(
                    f"{obj.name}: analytic gradient deviates from central "
                    f"differences by {err:.2e}"
                )
    if obj.f_min is not None and obj.x_min is not None:
        got = obj.eval(obj.x_min)
        if abs(got - obj.f_min) > 1e-8 * max(1.0, abs(obj.f_min)):
            raise ConfigError(
                f"{obj.name}: value at the known minimizer is {got!r}, "
                f"declared f_min {obj.f_min!r}"
            )


def register_external(obj: Objective):
    """Add a problem to the registry after validating its invariants."""
    if obj.name in _BUILTIN_FACTORIES or obj.name in _EXTERNAL:
        raise ConfigError(f"problem name {obj.name!r} already registered")
    validate_objective(obj)
    _EXTERNAL[obj.name] = obj


def unregister_external(name):
    """Test helper; built-ins cannot be removed."""
    _EXTERNAL.pop(name, None)
