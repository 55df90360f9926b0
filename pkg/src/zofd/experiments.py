"""Config-driven experiment batches emitting machine-readable CSV/JSON.

Five experiment families share one :class:`ExperimentConfig`: ``timing``
(direction-matrix generation cost), ``grad-error`` (relative estimation
error at a fixed point), ``optimize`` (full line-search runs with traces),
``profile`` (fraction-of-solved-problems curves over the other two), and
``oracle`` (the smoothing-identity verification grid).

Reproducibility contract: re-running a command with the same effective
config and master seed produces byte-identical files, except for measured
wall-clock fields in timing output. Every CSV starts with a comment line
``# config_hash=<12 hex> master_seed=<n>``; JSON output carries the same
two values as top-level fields since JSON has no comments. The hash covers
the canonical (sorted-key, minimal-separator) JSON form of the effective
config. Batch cells draw from streams derived by hashing their label, so
results do not depend on execution order or on ``--jobs``.
"""

from __future__ import annotations

import json
import os
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import objectives, smoothing
from .directions import KINDS, generate
from .errors import ConfigError, DomainError, EvaluationError, ParameterError
from .estimator import forward_fd
from .linesearch import FdConfig, PRESETS, preset_config, run, save_trace
from .metrics import (
    ProfileTable,
    default_tau_grid,
    fraction_solved,
    rel_grad_error,
    time_generation,
    value_progress,
)
from .rng import RngStream, derive_stream

EXPERIMENTS = ("timing", "grad-error", "optimize", "profile", "oracle")

#: per-experiment default repetition counts
DEFAULT_REPEATS = {"timing": 500, "grad-error": 50, "optimize": 10}

TIMING_HEADER = "kind,d,ell,mean_s,std_s,repeats"
GRAD_ERROR_HEADER = "problem,kind,ell,trial,rel_error"
OPTIMIZE_HEADER = "problem,kind,ell,repeat,evals,best_f,V"
CONVERGENCE_HEADER = "problem,kind,ell,repeat,evals,f_best"
PROFILE_TAU_HEADER = "kind,ell,tau,fraction_solved"
PROFILE_EVALS_HEADER = "kind,ell,evals,fraction_solved"
ERRORS_HEADER = "problem,kind,ell,repeat,error"

#: cap on distinct eval checkpoints kept in convergence/profile grids
_GRID_CAP = 256


@dataclass
class ProblemSpec:
    """A registry problem instantiated at dimension d with constructor params."""

    name: str
    d: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def build(self) -> objectives.Objective:
        return objectives.get_problem(
            self.name, self.d, RngStream(self.seed), **self.params
        )

    def label(self):
        return (self.name, self.d)


def parse_ell(spec, d) -> int:
    """Resolve an ell request against dimension d.

    Plain integers must already lie in [1, d]. Strings are either integer
    literals, "d", or "d/K" resolved as ceil(d / K) and clamped to [1, d].
    """
    if isinstance(spec, (int, np.integer)):
        if not 1 <= spec <= d:
            raise ConfigError(f"ell={spec} outside [1, {d}]")
        return int(spec)
    s = str(spec).strip().replace(" ", "")
    if s == "d":
        return d
    if s.startswith("d/"):
        try:
            k = float(s[2:])
        except ValueError:
            raise ConfigError(f"cannot parse ell spec {spec!r}") from None
        if k <= 0:
            raise ConfigError(f"divisor in {spec!r} must be positive")
        return min(max(math.ceil(d / k), 1), d)
    try:
        return parse_ell(int(s), d)
    except ValueError:
        raise ConfigError(f"cannot parse ell spec {spec!r}") from None


_CONFIG_KEYS = {
    "experiment", "problems", "kinds", "ells", "dims", "preset", "budget",
    "repeats", "master_seed", "out_dir", "h", "tau", "source", "input_csv",
    "n_samples", "jobs",
}


@dataclass
class ExperimentConfig:
    experiment: str
    problems: list = None
    kinds: list = None
    ells: list = None
    dims: list = None  # timing only
    preset: object = "synthetic"  # name or dict of FdConfig overrides
    budget: int = 10000
    repeats: int = None
    master_seed: int = 0
    out_dir: str = "results"
    h: float = None  # None defers to the preset / the 1e-7 estimator default
    tau: float = 1e-2
    source: str = "grad_error"  # profile input: grad_error | optimize
    input_csv: str = None
    n_samples: int = 10**5
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if self.kinds is None:
            self.kinds = list(KINDS)
        for kind in self.kinds:
            if kind not in KINDS:
                raise ConfigError(f"unknown direction kind {kind!r}")
        if self.ells is None:
            self.ells = ["d/2", "d"]
        if self.dims is None:
            self.dims = [64]
        if self.problems is None:
            self.problems = [
                ProblemSpec(name, 50) for name in objectives.problem_names()
            ]
        self.problems = [
            p if isinstance(p, ProblemSpec) else ProblemSpec(**p)
            for p in self.problems
        ]
        if self.repeats is None:
            key = self.source.replace("_", "-") if self.experiment == "profile" else self.experiment
            self.repeats = DEFAULT_REPEATS.get(key, 10)
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if isinstance(self.preset, str) and self.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}"
            )
        self.source = self.source.replace("-", "_")
        if self.source not in ("grad_error", "optimize"):
            raise ConfigError("profile source must be grad_error or optimize")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """12 hex chars over the canonical JSON of the effective config.

        ``jobs`` and ``out_dir`` are execution details, not experiment
        identity, and are excluded so that parallelism and output location
        never change file contents.
        """
        payload = {k: v for k, v in self.to_dict().items() if k not in ("jobs", "out_dir")}
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]

    def comment(self) -> str:
        return f"config_hash={self.config_hash()} master_seed={self.master_seed}"

    def fd_config(self, ell, kind) -> FdConfig:
        if isinstance(self.preset, str):
            return preset_config(self.preset, self.budget, ell, kind, h=self.h)
        extra = dict(self.preset)
        unknown = set(extra) - {
            "h", "gamma0", "gamma_min", "gamma_max", "c", "theta", "rho_exp",
            "strict_eval",
        }
        if unknown:
            raise ConfigError(f"unknown FdConfig fields in preset: {sorted(unknown)}")
        if self.h is not None:
            extra["h"] = self.h
        return FdConfig(budget=self.budget, ell=ell, kind=kind, **extra).validate()


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return data


def build_config(experiment, file_data=None, **overrides) -> ExperimentConfig:
    """Merge experiment defaults, a config file, and CLI flag overrides."""
    data = dict(file_data or {})
    file_exp = data.pop("experiment", None)
    if file_exp is not None and file_exp != experiment:
        raise ConfigError(
            f"config file is for experiment {file_exp!r}, command is {experiment!r}"
        )
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return ExperimentConfig(experiment=experiment, **data)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv_atomic(path, header, rows, comment):
    """Write a CSV with a leading comment line; replace the target atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {comment}", header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
    return path


def read_csv_rows(path):
    """(header, rows) of a CSV written by this module; comments skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: empty CSV")
    return lines[0], [ln.split(",") for ln in lines[1:]]


def _out_dir(cfg) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _problem_ids(problems) -> dict:
    """Display id per (name, d); d is appended only when a name repeats."""
    counts = {}
    for p in problems:
        counts[p.name] = counts.get(p.name, 0) + 1
    return {
        p.label(): p.name if counts[p.name] == 1 else f"{p.name}_d{p.d}"
        for p in problems
    }


# ---------------------------------------------------------------------------
# timing


def cmd_timing(cfg: ExperimentConfig) -> Path:
    """Generation-cost table over kinds x dims x ells; always single-process."""
    if cfg.repeats < 2:
        raise ConfigError("timing needs repeats >= 2 for a standard deviation")
    rows = []
    for kind in cfg.kinds:
        for d in cfg.dims:
            for spec in cfg.ells:
                ell = parse_ell(spec, d)
                stream = derive_stream(cfg.master_seed, "timing", kind, d, ell)
                mean_s, std_s = time_generation(kind, d, ell, cfg.repeats, stream)
                rows.append((kind, d, ell, mean_s, std_s, cfg.repeats))
    rows.sort(key=lambda r: (cfg.kinds.index(r[0]), r[1], r[2]))
    return write_csv_atomic(
        _out_dir(cfg) / "timing.csv", TIMING_HEADER, rows, cfg.comment()
    )


# ---------------------------------------------------------------------------
# gradient error


def _grad_error_cell(args):
    name, d, params, pseed, pid, kind, spec, trial, h, master_seed = args
    problem = ProblemSpec(name, d, params, pseed).build()
    ell = parse_ell(spec, d)
    stream = derive_stream(master_seed, name, d, kind, ell, trial)
    x0 = problem.x0_default
    p = generate(kind, d, ell, stream)
    est = forward_fd(problem, x0, h, p)
    return (pid, kind, ell, trial, rel_grad_error(est.g, problem.grad(x0)))


def _cell_order(cfg):
    """Config-order rank of a (label, kind, spec) cell, for the row sort."""
    return {
        (p.label(), kind, spec): (i, j, k)
        for i, p in enumerate(cfg.problems)
        for j, kind in enumerate(cfg.kinds)
        for k, spec in enumerate(cfg.ells)
    }


def _grad_error_rows(cfg: ExperimentConfig):
    if not cfg.problems:
        raise ConfigError("grad-error needs at least one problem")
    h = cfg.h if cfg.h is not None else 1e-7
    for p in cfg.problems:
        obj = p.build()
        if obj.grad is None:
            raise ConfigError(f"problem {p.name!r} has no analytic gradient")
        if np.linalg.norm(obj.grad(obj.x0_default)) == 0.0:
            raise DomainError(
                f"problem {p.name!r}: zero gradient at the evaluation point"
            )

    ids = _problem_ids(cfg.problems)
    external = [p for p in cfg.problems if p.name in objectives._EXTERNAL]
    cells = [
        (p.name, p.d, p.params, p.seed, ids[p.label()], kind, spec, trial, h,
         cfg.master_seed)
        for p in cfg.problems
        for kind in cfg.kinds
        for spec in cfg.ells
        for trial in range(cfg.repeats)
    ]
    if cfg.jobs > 1 and not external:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_grad_error_cell, cells, chunksize=8))
    else:
        rows = [_grad_error_cell(c) for c in cells]
    order = _cell_order(cfg)
    keyed = sorted(
        zip(cells, rows),
        key=lambda cr: (*order[((cr[0][0], cr[0][1]), cr[0][5], cr[0][6])], cr[0][7]),
    )
    return [row for _, row in keyed]


def cmd_grad_error(cfg: ExperimentConfig) -> Path:
    rows = _grad_error_rows(cfg)
    return write_csv_atomic(
        _out_dir(cfg) / "grad_error.csv", GRAD_ERROR_HEADER, rows, cfg.comment()
    )


# ---------------------------------------------------------------------------
# optimization


def _optimize_cell(args):
    name, d, params, pseed, pid, kind, spec, repeat, cfg_dict = args
    cfg = ExperimentConfig(**cfg_dict)
    problem = ProblemSpec(name, d, params, pseed).build()
    ell = parse_ell(spec, d)
    fd = cfg.fd_config(ell, kind)
    stream = derive_stream(cfg.master_seed, name, d, kind, ell, repeat)
    try:
        trace = run(problem, problem.x0_default, fd, stream)
    except EvaluationError as exc:
        return (pid, kind, ell, repeat, None, str(exc))
    return (pid, kind, ell, repeat, trace, None)


def _progress_value(best_f, f0, f_min):
    """V with the boundary conventions of the experiment layer.

    Unknown f_min gives no value (empty CSV field); a start already at or
    below f_min means no progress is possible and scores 1.
    """
    if f_min is None:
        return None
    if f0 <= f_min:
        return 1.0
    return value_progress(best_f, f0, f_min)


def _optimize_results(cfg: ExperimentConfig):
    if not cfg.problems:
        raise ConfigError("optimize needs at least one problem")
    for p in cfg.problems:
        for spec in cfg.ells:
            cfg.fd_config(parse_ell(spec, p.d), cfg.kinds[0])  # validates budget
    ids = _problem_ids(cfg.problems)
    external = [p for p in cfg.problems if p.name in objectives._EXTERNAL]
    cfg_dict = cfg.to_dict()
    cells = [
        (p.name, p.d, p.params, p.seed, ids[p.label()], kind, spec, repeat, cfg_dict)
        for p in cfg.problems
        for kind in cfg.kinds
        for spec in cfg.ells
        for repeat in range(cfg.repeats)
    ]
    if cfg.jobs > 1 and not external:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_optimize_cell, cells, chunksize=1))
    else:
        outcomes = [_optimize_cell(c) for c in cells]
    order = _cell_order(cfg)
    keyed = sorted(
        zip(cells, outcomes),
        key=lambda co: (*order[((co[0][0], co[0][1]), co[0][5], co[0][6])], co[0][7]),
    )
    f_mins = {p.label(): p.build().f_min for p in cfg.problems}
    by_id = {ids[p.label()]: p for p in cfg.problems}
    results, errors = [], []
    for cell, (pid, kind, ell, repeat, trace, err) in keyed:
        if err is not None:
            errors.append((pid, kind, ell, repeat, err))
            continue
        spec_p = by_id[pid]
        f0 = trace.records[0].f_best
        v = _progress_value(trace.best_f, f0, f_mins[spec_p.label()])
        results.append(
            {
                "problem": pid,
                "d": spec_p.d,
                "kind": kind,
                "ell": ell,
                "repeat": repeat,
                "trace": trace,
                "V": v,
                "f_min": f_mins[spec_p.label()],
            }
        )
    return results, errors


def _convergence_rows(results):
    """Forward-fill each run's f_best onto a shared per-(problem, ell) grid."""
    groups = {}
    for r in results:
        groups.setdefault((r["problem"], r["ell"]), []).append(r)
    rows = []
    for (problem, ell), runs in groups.items():
        evals = np.unique(
            np.concatenate(
                [[rec.evals_so_far for rec in r["trace"].records] for r in runs]
            ).astype(np.int64)
        )
        if evals.size > _GRID_CAP:
            idx = np.unique(
                np.round(np.linspace(0, evals.size - 1, _GRID_CAP)).astype(int)
            )
            evals = evals[idx]
        for r in runs:
            xs = np.array([rec.evals_so_far for rec in r["trace"].records])
            ys = np.array([rec.f_best for rec in r["trace"].records])
            pos = np.searchsorted(xs, evals, side="right") - 1
            keep = pos >= 0
            for e, p in zip(evals[keep], pos[keep]):
                rows.append((problem, r["kind"], ell, r["repeat"], int(e), ys[p]))
    return rows


def _trace_filename(r):
    return f"trace_{r['problem']}_d{r['d']}_{r['kind']}_ell{r['ell']}_rep{r['repeat']}.csv"


def cmd_optimize(cfg: ExperimentConfig) -> dict:
    results, errors = _optimize_results(cfg)
    out = _out_dir(cfg)
    summary = [
        (
            r["problem"], r["kind"], r["ell"], r["repeat"],
            r["trace"].evals_total, r["trace"].best_f, r["V"],
        )
        for r in results
    ]
    paths = {
        "summary": write_csv_atomic(
            out / "optimize_summary.csv", OPTIMIZE_HEADER, summary, cfg.comment()
        ),
        "convergence": write_csv_atomic(
            out / "convergence.csv",
            CONVERGENCE_HEADER,
            _convergence_rows(results),
            cfg.comment(),
        ),
    }
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    for r in results:
        save_trace(trace_dir / _trace_filename(r), r["trace"], comment=cfg.comment())
    paths["traces"] = trace_dir
    if errors:
        paths["errors"] = write_csv_atomic(
            out / "errors.csv", ERRORS_HEADER, errors, cfg.comment()
        )
    return paths


# ---------------------------------------------------------------------------
# profiles


def _kind_rank(cfg, kind):
    """Config order first; kinds only seen in an input file sort after, by name."""
    if kind in cfg.kinds:
        return (0, cfg.kinds.index(kind), "")
    return (1, 0, kind)


def _profile_tables_from_grad_error(cfg, rows):
    """Mean rel_error per problem, grouped by (kind, ell)."""
    acc = {}
    for problem, kind, ell, _trial, err in rows:
        acc.setdefault((kind, int(ell)), {}).setdefault(problem, []).append(float(err))
    return {
        key: ProfileTable(
            rows=sorted((pid, float(np.mean(v))) for pid, v in problems.items()),
            n_samples=cfg.repeats,
        )
        for key, problems in acc.items()
    }


def _profile_tables_from_optimize(cfg, results):
    acc = {}
    for r in results:
        if r["V"] is None:
            raise ConfigError(
                f"problem {r['problem']!r} has no known f_min; "
                "progress profiles need one"
            )
        acc.setdefault((r["kind"], r["ell"]), {}).setdefault(
            r["problem"], []
        ).append(r["V"])
    return {
        # mean progress clipped at 0: overshooting the reference minimum
        # still counts as solved, never as a negative expected value
        key: ProfileTable(
            rows=sorted((pid, max(float(np.mean(v)), 0.0)) for pid, v in problems.items()),
            n_samples=cfg.repeats,
        )
        for key, problems in acc.items()
    }


def _profile_evals_rows(cfg, results):
    """Fraction of problems with mean V <= tau, per eval checkpoint."""
    groups = {}
    for r in results:
        if r["f_min"] is None:
            raise ConfigError(
                f"problem {r['problem']!r} has no known f_min; "
                "progress profiles need one"
            )
        groups.setdefault((r["kind"], r["ell"]), []).append(r)
    rows = []
    for (kind, ell), runs in sorted(
        groups.items(), key=lambda kv: (_kind_rank(cfg, kv[0][0]), kv[0][1])
    ):
        evals = np.unique(
            np.concatenate(
                [[rec.evals_so_far for rec in r["trace"].records] for r in runs]
            ).astype(np.int64)
        )
        if evals.size > _GRID_CAP:
            idx = np.unique(
                np.round(np.linspace(0, evals.size - 1, _GRID_CAP)).astype(int)
            )
            evals = evals[idx]
        per_problem = {}
        for r in runs:
            per_problem.setdefault(r["problem"], []).append(r)
        for e in evals:
            solved = 0
            for _problem, pruns in sorted(per_problem.items()):
                vs = []
                for r in pruns:
                    xs = np.array([rec.evals_so_far for rec in r["trace"].records])
                    ys = np.array([rec.f_best for rec in r["trace"].records])
                    pos = max(int(np.searchsorted(xs, e, side="right")) - 1, 0)
                    f0 = r["trace"].records[0].f_best
                    vs.append(_progress_value(ys[pos], f0, r["f_min"]))
                if float(np.mean(vs)) <= cfg.tau:
                    solved += 1
            rows.append((kind, ell, int(e), solved / len(per_problem)))
    return rows


def cmd_profile(cfg: ExperimentConfig) -> dict:
    if not cfg.problems:
        raise ConfigError("profile needs at least one problem")
    out = _out_dir(cfg)
    paths = {}
    taus = default_tau_grid()

    if cfg.source == "grad_error":
        if cfg.input_csv:
            header, raw = read_csv_rows(cfg.input_csv)
            if header != GRAD_ERROR_HEADER:
                raise ConfigError(
                    f"{cfg.input_csv}: expected header {GRAD_ERROR_HEADER!r}"
                )
            rows = [(r[0], r[1], int(r[2]), int(r[3]), float(r[4])) for r in raw]
        else:
            rows = _grad_error_rows(cfg)
        tables = _profile_tables_from_grad_error(cfg, rows)
        evals_rows = None
    else:
        results, _errors = _optimize_results(cfg)
        tables = _profile_tables_from_optimize(cfg, results)
        evals_rows = _profile_evals_rows(cfg, results)

    tau_rows = []
    for (kind, ell), table in sorted(
        tables.items(), key=lambda kv: (_kind_rank(cfg, kv[0][0]), kv[0][1])
    ):
        for tau in taus:
            tau_rows.append((kind, ell, float(tau), fraction_solved(table, tau)))
    paths["tau"] = write_csv_atomic(
        out / "profile_tau.csv", PROFILE_TAU_HEADER, tau_rows, cfg.comment()
    )
    if evals_rows is not None:
        paths["evals"] = write_csv_atomic(
            out / "profile_evals.csv", PROFILE_EVALS_HEADER, evals_rows, cfg.comment()
        )
    return paths


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(cfg: ExperimentConfig):
    """Run the smoothing verification grid; returns (path, all_ok).

    Identity and inequality checks use the 3-standard-error bounds of the
    smoothing module. Unbiasedness checks compare a max over up to d
    coordinates across many cells, so their pass bound is 4 standard errors
    to keep the family-wise false-alarm rate small.
    """
    if cfg.n_samples < 10**3:
        raise ConfigError("oracle needs n_samples >= 1000")
    stream = derive_stream(cfg.master_seed, "oracle")
    cells = smoothing.run_gap_grid(stream, n_samples=cfg.n_samples)
    cell_payload = []
    all_ok = True
    for cell in cells:
        report = cell["report"]
        entry = json.loads(report.to_json())
        entry["problem"] = cell["problem"]
        entry["inequality_ok"] = bool(cell["inequality_ok"])
        entry["identity_ok"] = bool(cell["identity_ok"])
        all_ok = all_ok and cell["inequality_ok"] and cell["identity_ok"]
        cell_payload.append(entry)

    unbias_payload = []
    n_unbias = min(cfg.n_samples, 20000)
    for i, (d, ell, h) in enumerate(
        sorted({(c["report"].d, c["report"].ell, c["report"].h) for c in cells})
    ):
        for kind in ("spherical", "qr_haar"):
            sub = derive_stream(cfg.master_seed, "oracle-unbias", kind, d, ell, repr(h))
            dev, se = smoothing.unbiasedness_check(
                kind, smoothing.quadratic_objective(d), np.ones(d), h, ell,
                n_unbias, sub,
            )
            ok = dev <= 4.0 * se
            all_ok = all_ok and ok
            unbias_payload.append(
                {"kind": kind, "d": d, "ell": ell, "h": h,
                 "deviation": dev, "se": se, "ok": bool(ok)}
            )

    payload = {
        "config_hash": cfg.config_hash(),
        "master_seed": cfg.master_seed,
        "n_samples": cfg.n_samples,
        "cells": cell_payload,
        "unbiasedness": unbias_payload,
        "all_ok": bool(all_ok),
    }
    out = _out_dir(cfg) / "oracle_report.json"
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, out)
    return out, all_ok
