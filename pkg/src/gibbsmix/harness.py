"""Configuration-driven experiment runner.

A single strict JSON document drives every experiment; unknown fields are
errors. Each run writes a manifest (status "running") before any results, the
artifacts, and then the final manifest (status "complete"), so interrupted
runs leave a detectable partial marker. All randomness flows through
per-replica streams derived as SeedSequence([seed, replica]); identical
config + seed reproduces identical artifact bytes.

Exit codes: 0 success, 1 configuration error, 2 invariant/assertion failure.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import (
    AssertionFailure,
    ConfigError,
    DominationViolated,
    GroupError,
    InvariantViolation,
    KernelError,
    RejectionBudgetExceeded,
)
from .coupling import connectedness_experiment, run_nonmarkovian_coupling
from .groups import (
    GeneratorSet,
    GroupTable,
    build_cyclic,
    build_dihedral,
    build_hypercube,
    load_group,
)
from .kernels import (
    base_walk_kernel,
    comparison_kernel,
    edge_walk_kernel,
    spectral_summary,
    verify_comparison,
)
from .matrices import (
    identity_residual_batch,
    mcontraction_experiment,
    msample_stationary_batch,
    mstep_batch,
)
from .seeding import replica_rng, replica_seed_words
from .simplex import (
    check_s_recursion,
    lower_bound_experiment,
    sample_stationary,
    step_batch,
)

__all__ = [
    "EXPERIMENTS",
    "THRESHOLD_KEYS",
    "ORACLE_SUITES",
    "ExperimentConfig",
    "RunManifest",
    "resolve_group",
    "default_horizons",
    "coupon_collector_experiment",
    "CouponReport",
    "irwin_hall_cdf",
    "exact_acceptance_rate",
    "exact_marginal_cdf",
    "oracle",
    "run",
]

EXPERIMENTS = (
    "gap",
    "compare",
    "s-recursion",
    "contract-simplex",
    "contract-matrix",
    "identity-matrix",
    "couple-simplex",
    "couple-matrix",
    "connect",
    "largeness",
    "lowerbound-simplex",
    "lowerbound-matrix",
    "oracle",
)

THRESHOLD_KEYS = frozenset({"epsilon", "C", "a", "b", "f", "k", "d", "c"})

ORACLE_SUITES = (
    "kernel-enumeration",
    "acceptance-rate",
    "schedule-enumeration",
    "marginal-density",
)

_GROUP_FAMILIES = {"cyclic", "hypercube", "dihedral", "file"}
_GROUP_KEYS = {"family", "n", "k", "gens", "path"}
_OUTPUT_KEYS = {"path", "format"}
_FORMATS = {"csv", "jsonl"}

_IDENTITY_TOL = 1e-10
_SEED_LIMIT = 2**64


# ---------------------------------------------------------------------------
# configuration


def _require_int(value, name: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass
class ExperimentConfig:
    experiment: str
    group: Optional[dict] = None
    n: Optional[int] = None
    T: Optional[int] = None
    T1: Optional[int] = None
    T2: Optional[int] = None
    replicas: Optional[int] = None
    seed: int = 0
    thresholds: dict = field(default_factory=dict)
    output: Optional[dict] = None
    suite: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        _require_int(self.seed, "seed", 0)
        if self.seed >= _SEED_LIMIT:
            raise ConfigError(f"seed must be < 2**64, got {self.seed}")
        if self.n is not None:
            _require_int(self.n, "n", 3)
        for name in ("T", "T1", "T2"):
            value = getattr(self, name)
            if value is not None:
                _require_int(value, name, 0)
        if self.replicas is not None:
            _require_int(self.replicas, "replicas", 1)
        if not isinstance(self.thresholds, dict):
            raise ConfigError("thresholds must be an object")
        unknown = set(self.thresholds) - THRESHOLD_KEYS
        if unknown:
            raise ConfigError(
                f"unknown threshold names {sorted(unknown)}; allowed: {sorted(THRESHOLD_KEYS)}"
            )
        for key, value in self.thresholds.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"threshold {key} must be a number, got {value!r}")
        if self.group is not None:
            if not isinstance(self.group, dict):
                raise ConfigError("group must be an object")
            unknown = set(self.group) - _GROUP_KEYS
            if unknown:
                raise ConfigError(f"unknown group fields {sorted(unknown)}")
            family = self.group.get("family")
            if family not in _GROUP_FAMILIES:
                raise ConfigError(
                    f"group.family must be one of {sorted(_GROUP_FAMILIES)}, got {family!r}"
                )
        if self.output is not None:
            if not isinstance(self.output, dict):
                raise ConfigError("output must be an object")
            unknown = set(self.output) - _OUTPUT_KEYS
            if unknown:
                raise ConfigError(f"unknown output fields {sorted(unknown)}")
            fmt = self.output.get("format")
            if fmt is not None and fmt not in _FORMATS:
                raise ConfigError(f"output.format must be csv or jsonl, got {fmt!r}")
        if self.suite is not None and self.suite not in ORACLE_SUITES:
            raise ConfigError(
                f"unknown oracle suite {self.suite!r}; choose from {', '.join(ORACLE_SUITES)}"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config requires an 'experiment' field")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_group(spec: Optional[dict]):
    """Build (GroupTable, GeneratorSet) from a config group object."""
    if spec is None:
        raise ConfigError("this experiment requires a 'group' object")
    family = spec["family"]
    if family == "cyclic":
        if "n" not in spec:
            raise ConfigError("cyclic group requires 'n'")
        n = _require_int(spec["n"], "group.n", 3)
        gens = spec.get("gens", "pm1")
        if gens == "pm1":
            gens = [1, n - 1]
        elif gens == "complete":
            gens = list(range(1, n))
        elif not (isinstance(gens, list) and all(isinstance(g, int) for g in gens)):
            raise ConfigError("group.gens must be a list of integers, 'pm1', or 'complete'")
        return build_cyclic(n, gens)
    if family == "hypercube":
        if "k" not in spec:
            raise ConfigError("hypercube group requires 'k'")
        return build_hypercube(_require_int(spec["k"], "group.k", 1))
    if family == "dihedral":
        if "k" not in spec:
            raise ConfigError("dihedral group requires 'k'")
        return build_dihedral(_require_int(spec["k"], "group.k", 3))
    if "path" not in spec:
        raise ConfigError("file group requires 'path'")
    return load_group(spec["path"])


def default_horizons(kind: str, n: int, gamma_hat: Optional[float] = None):
    """Recipe (T1, T2) used by the couple-* experiments when not overridden.

    Cayley chains: T1 = ceil((8 / gamma_hat) (log(4n) + 62)) and
    T2 = ceil(48 log n / gamma_hat) — the phase-1 horizon drives the L2 gap
    below the subset-coupling tolerance, and T2 connects the schedule with
    probability 1 - O(n^-3). Matrix chains do the same with the n log n
    scaling: T1 = ceil(1.5 n (log(8n) + 60)), T2 = ceil(4.5 n log n).
    """
    if kind == "simplex":
        if gamma_hat is None or gamma_hat <= 0:
            raise ConfigError("simplex horizons need a positive gamma_hat")
        t1 = math.ceil((8.0 / gamma_hat) * (math.log(4 * n) + 62.0))
        t2 = math.ceil(8.0 * 6.0 * math.log(n) / gamma_hat)
        return t1, t2
    if kind == "matrix":
        t1 = math.ceil(1.5 * n * (math.log(8 * n) + 60.0))
        t2 = math.ceil(4.5 * n * math.log(n))
        return t1, t2
    raise ConfigError(f"unknown chain kind {kind!r}")


# ---------------------------------------------------------------------------
# artifact writing


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _json_default(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_json_default)


@dataclass
class Table:
    """One tabular artifact; written as CSV or JSON lines per the config.

    fmt_override pins a table to one format regardless of the config
    (coupling outcome records are always JSON lines)."""

    name: str
    header: list
    rows: list
    fmt_override: Optional[str] = None

    def write(self, directory: Path, fmt: str) -> Path:
        if self.fmt_override is not None:
            fmt = self.fmt_override
        if fmt == "jsonl":
            path = directory / f"{self.name}.jsonl"
            with open(path, "w") as fh:
                for row in self.rows:
                    record = dict(zip(self.header, row))
                    fh.write(_dumps(record) + "\n")
        else:
            path = directory / f"{self.name}.csv"
            with open(path, "w") as fh:
                fh.write(",".join(self.header) + "\n")
                for row in self.rows:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
        return path


@dataclass
class RunManifest:
    experiment: str
    config: dict
    seed: int
    replicas: Optional[int]
    replica_seed_rule: str
    replica_seeds: list
    version: str
    status: str
    started_at_unix: float
    wall_clock_seconds: Optional[float] = None
    artifacts: list = field(default_factory=list)
    summary: Optional[dict] = None
    error: Optional[str] = None

    def write(self, path: Path) -> None:
        path.write_text(_dumps(asdict(self)) + "\n")


_SEED_RULE = (
    "one numpy Generator per replica from SeedSequence([seed, replica]); "
    "replica_seeds lists the first derived 64-bit word of each stream"
)
_MANIFEST_SEED_CAP = 20_000


# ---------------------------------------------------------------------------
# experiment runners (each returns (summary, tables, uses_replica_streams))


def _thr(config: ExperimentConfig, key: str, default=None):
    value = config.thresholds.get(key, default)
    return None if value is None else float(value)


def _eig_table(name: str, summary_kernel) -> Table:
    rows = [(idx, float(v)) for idx, v in enumerate(summary_kernel.eigenvalues)]
    return Table(name, ["index", "eigenvalue"], rows)


def _kernel_table(name: str, kernel) -> Table:
    rows = [
        tuple([i] + [float(v) for v in kernel.p[i]])
        for i in range(kernel.p.shape[0])
    ]
    header = ["row"] + [f"to_{j}" for j in range(kernel.p.shape[1])]
    return Table(name, header, rows)


def _run_gap(config: ExperimentConfig):
    group, gens = resolve_group(config.group)
    base = base_walk_kernel(group, gens)
    edge = edge_walk_kernel(group, gens)
    sum_base = spectral_summary(base)
    sum_edge = spectral_summary(edge)
    summary = {
        "n": group.n,
        "m": gens.m,
        "gap_base": sum_base.gap,
        "gap_edge": sum_edge.gap,
    }
    tables = [
        _kernel_table("base_kernel", base),
        _eig_table("base_eigenvalues", sum_base),
        _eig_table("edge_eigenvalues", sum_edge),
    ]
    return summary, tables, False


def _db_residual(kernel) -> float:
    flow = kernel.pi[:, None] * kernel.p
    return float(np.abs(flow - flow.T).max())


def _run_compare(config: ExperimentConfig):
    group, gens = resolve_group(config.group)
    trials = config.replicas or 1000
    comp = comparison_kernel(group, gens)
    report = verify_comparison(group, gens, trials=trials, seed=config.seed)
    summary = {
        "n": group.n,
        "m": gens.m,
        "trials": trials,
        "db_residual": _db_residual(comp),
        "min_dirichlet_ratio": report.min_dirichlet_ratio,
        "max_measure_ratio": report.max_measure_ratio,
        "gap": report.gap,
        "gap_hat": report.gap_hat,
        "ok": report.ok,
    }
    tables = [
        _kernel_table("comparison_kernel", comp),
        _eig_table("comparison_eigenvalues", spectral_summary(comp)),
    ]
    return summary, tables, False


def _run_s_recursion(config: ExperimentConfig):
    group, gens = resolve_group(config.group)
    samples = config.replicas or 10**6
    rng = replica_rng(config.seed, 0)
    x = sample_stationary(group.n, rng)
    y = sample_stationary(group.n, rng)
    report = check_s_recursion(x, y, group, gens, samples=samples, seed=config.seed)
    rows = [
        (
            h,
            float(report.targets[h]),
            float(report.estimates[h]),
            float(report.se[h]),
            float(
                abs(report.estimates[h] - report.targets[h])
                / max(report.se[h], 1e-300)
            ),
        )
        for h in range(group.n)
    ]
    summary = {
        "n": group.n,
        "samples": samples,
        "max_abs_deviation": report.max_abs_deviation,
        "max_deviation_se": report.max_deviation_se,
        "ok": report.max_deviation_se <= 4.0,
    }
    return summary, [Table("srecursion", ["element", "target", "estimate", "se", "deviation_se"], rows)], False


def _run_contract_simplex(config: ExperimentConfig):
    group, gens = resolve_group(config.group)
    n = group.n
    replicas = config.replicas or 1000
    gamma_hat = spectral_summary(base_walk_kernel(group, gens)).gap
    stride = math.ceil(8.0 / gamma_hat)
    checkpoints = 10
    total = config.T if config.T is not None else stride * checkpoints
    marks = sorted({t for t in range(stride, total + 1, stride)})
    if not marks:
        raise ConfigError("T too small: no checkpoint is a multiple of ceil(8/gamma_hat)")

    gens_arr = np.asarray(gens.elements, dtype=np.int64)
    mul = group.mul
    B, T = replicas, total
    X = np.zeros((B, n))
    X[:, group.identity] = 1.0
    Y = np.empty((B, n))
    a = np.empty((B, T), dtype=np.int64)
    b = np.empty((B, T), dtype=np.int64)
    lam = np.empty((B, T))
    # per-replica draw order: stationary start, element array, generator
    # array, lambda array
    for r in range(B):
        rng = replica_rng(config.seed, r)
        e = rng.exponential(1.0, n)
        Y[r] = e / e.sum()
        g = rng.integers(0, n, T)
        s = gens_arr[rng.integers(0, gens.m, T)]
        a[r], b[r] = g, mul[g, s]
        lam[r] = rng.random(T)

    traj_rows = []
    mean_rows = []
    ok = True
    markset = set(marks)
    for t in range(1, T + 1):
        step_batch(X, a[:, t - 1], b[:, t - 1], lam[:, t - 1])
        step_batch(Y, a[:, t - 1], b[:, t - 1], lam[:, t - 1])
        if t in markset:
            sq = ((X - Y) ** 2).sum(axis=1)
            for r in range(B):
                traj_rows.append((t, r, "sq_l2_gap", float(sq[r])))
            mean = float(sq.mean())
            se = float(sq.std(ddof=1) / math.sqrt(B))
            bound = 4.0 * n * math.exp(-math.floor(t * gamma_hat / 8.0))
            mean_rows.append((t, mean, se, bound))
            ok = ok and mean <= bound
    summary = {
        "n": n,
        "replicas": B,
        "gamma_hat": gamma_hat,
        "checkpoints": marks,
        "ok": ok,
    }
    tables = [
        Table("trajectory", ["t", "replica", "statistic_name", "value"], traj_rows),
        Table("means", ["t", "mean_sq_l2_gap", "se", "bound"], mean_rows),
    ]
    return summary, tables, True


def _run_contract_matrix(config: ExperimentConfig):
    if config.n is None:
        raise ConfigError("contract-matrix requires 'n'")
    n = config.n
    replicas = config.replicas or 1000
    T = config.T if config.T is not None else 10 * n
    report = mcontraction_experiment(n, T, replicas, config.seed)
    rows = [
        (p.t, p.mean_sq_before, p.mean_sq_after, p.ratio, p.se, p.bound)
        for p in report.points
    ]
    summary = {
        "n": n,
        "replicas": replicas,
        "T": T,
        "identical_start_replicas": report.identical_start_replicas,
        "ok": report.ok,
    }
    return summary, [Table("points", ["t", "mean_sq_before", "mean_sq_after", "ratio", "se", "bound"], rows)], True


def _run_identity_matrix(config: ExperimentConfig):
    if config.n is None:
        raise ConfigError("identity-matrix requires 'n'")
    n = config.n
    pairs = config.replicas or 10**4
    rng = replica_rng(config.seed, 0)
    cx = msample_stationary_batch(n, rng, pairs)
    cy = msample_stationary_batch(n, rng, pairs)
    residuals = identity_residual_batch(cx, cy)
    worst = float(residuals.max())
    rows = [(idx, float(residuals[idx])) for idx in range(pairs)]
    summary = {"n": n, "pairs": pairs, "max_residual": worst, "tolerance": _IDENTITY_TOL}
    tables = [Table("residuals", ["pair", "residual"], rows)]
    if worst > _IDENTITY_TOL:
        raise AssertionFailure(
            f"contraction identity residual {worst:.3e} exceeds {_IDENTITY_TOL} (n={n})"
        )
    return summary, tables, False


def _run_couple(config: ExperimentConfig, kind: str):
    replicas = config.replicas or 1000
    if kind == "simplex":
        group, gens = resolve_group(config.group)
        n = group.n
        gamma_hat = spectral_summary(base_walk_kernel(group, gens)).gap
        t1_default, t2_default = default_horizons("simplex", n, gamma_hat)
        kwargs = {"group": group, "gens": gens}
    else:
        if config.n is None:
            raise ConfigError("couple-matrix requires 'n'")
        n = config.n
        t1_default, t2_default = default_horizons("matrix", n)
        kwargs = {"n": n}
    T1 = config.T1 if config.T1 is not None else t1_default
    T2 = config.T2 if config.T2 is not None else t2_default
    result = run_nonmarkovian_coupling(
        kind, T1=T1, T2=T2, replicas=replicas, seed=config.seed, **kwargs
    )
    records = [o.to_record() for o in result.outcomes]
    coupled = [o for o in result.outcomes if o.coupled]
    failures = {}
    for o in result.outcomes:
        if o.failure_kind:
            failures[o.failure_kind] = failures.get(o.failure_kind, 0) + 1
    taus = [o.tau_connect for o in result.outcomes if o.tau_connect is not None]
    summary = {
        "n": n,
        "T1": T1,
        "T2": T2,
        "replicas": replicas,
        "coupled_frequency": len(coupled) / replicas,
        "failure_counts": failures,
        "max_coupled_gap": max((o.max_final_gap for o in coupled), default=None),
        "mean_tau_connect": (sum(taus) / len(taus)) if taus else None,
    }
    header = ["replica", "coupled", "failure_kind", "first_failure_time",
              "tau_connect", "max_final_gap"]
    rows = [tuple(rec[k] for k in header) for rec in records]
    return summary, [Table("outcomes", header, rows, fmt_override="jsonl")], True


def _run_connect(config: ExperimentConfig):
    replicas = config.replicas or 1000
    if (config.group is None) == (config.n is None):
        raise ConfigError("connect requires exactly one of 'group' or 'n'")
    if config.group is not None:
        group, gens = resolve_group(config.group)
        report = connectedness_experiment(
            "simplex", group=group, gens=gens, replicas=replicas,
            seed=config.seed, C=_thr(config, "C"),
        )
    else:
        report = connectedness_experiment(
            "matrix", n=config.n, replicas=replicas, seed=config.seed,
            epsilon=_thr(config, "epsilon"),
        )
    rows = [(idx, int(report.taus[idx])) for idx in range(replicas)]
    summary = {
        "kind": report.kind,
        "n": report.n,
        "replicas": replicas,
        "censored": report.censored,
        "threshold": report.threshold,
        "bound": report.bound,
        "tail_frequency": report.tail_frequency,
        "ok": (report.tail_frequency <= report.bound)
        if report.bound is not None
        else None,
    }
    return summary, [Table("taus", ["replica", "tau"], rows)], True


def _run_largeness(config: ExperimentConfig):
    replicas = config.replicas or 1000
    if (config.group is None) == (config.n is None):
        raise ConfigError("largeness requires exactly one of 'group' or 'n'")
    if config.n is not None:
        kind, n = "matrix", config.n
        k = _thr(config, "k", 1.0)
        threshold = float(n) ** (-5.5 - k)
        target = 1.0 - 2.0 * float(n) ** (-k)
    else:
        group, gens = resolve_group(config.group)
        kind, n = "simplex", group.n
        gens_arr = np.asarray(gens.elements, dtype=np.int64)
        threshold = _thr(config, "d")
        target = None
    window = config.T if config.T is not None else n * n

    B = replicas
    a = np.empty((B, window), dtype=np.int64)
    b = np.empty((B, window), dtype=np.int64)
    lam = np.empty((B, window))
    states = np.empty((B, n))
    # per-replica draw order: stationary start, pair arrays, lambda array
    for r in range(B):
        rng = replica_rng(config.seed, r)
        if kind == "matrix":
            states[r] = msample_stationary_batch(n, rng, 1)[0]
            i = rng.integers(0, n, window)
            raw = rng.integers(0, n - 1, window)
            a[r], b[r] = i, raw + (raw >= i)
        else:
            e = rng.exponential(1.0, n)
            states[r] = e / e.sum()
            g = rng.integers(0, n, window)
            s = gens_arr[rng.integers(0, gens.m, window)]
            a[r], b[r] = g, group.mul[g, s]
        lam[r] = rng.random(window)

    def margin(x: np.ndarray) -> np.ndarray:
        if kind == "matrix":
            return np.minimum(x, 2.0 - x).min(axis=1)
        return x.min(axis=1)

    minima = margin(states)
    batch = mstep_batch if kind == "matrix" else step_batch
    for t in range(window):
        batch(states, a[:, t], b[:, t], lam[:, t])
        minima = np.minimum(minima, margin(states))
    rows = [(r, float(minima[r])) for r in range(B)]
    frequency = float(np.mean(minima >= threshold)) if threshold is not None else None
    summary = {
        "kind": kind,
        "n": n,
        "window": window,
        "replicas": B,
        "threshold": threshold,
        "frequency_above_threshold": frequency,
        "target_frequency": target,
        "min_observed": float(minima.min()),
        "ok": (frequency >= target) if (frequency is not None and target is not None) else None,
    }
    return summary, [Table("minima", ["replica", "min_boundary_margin"], rows)], True


def _run_lowerbound_simplex(config: ExperimentConfig):
    group, gens = resolve_group(config.group)
    replicas = config.replicas or 10**4
    gamma = spectral_summary(edge_walk_kernel(group, gens)).gap
    T = config.T if config.T is not None else max(8, math.ceil(1.5 / gamma))
    report = lower_bound_experiment(
        group, gens, T, d=_thr(config, "d"), replicas=replicas, seed=config.seed
    )
    rows = [
        (p.t, p.mean_inner, p.se, p.exact, p.tail_empirical, p.tail_stationary,
         p.tv_lower_bound)
        for p in report.points
    ]
    summary = {
        "n": group.n,
        "replicas": replicas,
        "T": T,
        "gamma": report.gamma,
        "slope": report.slope,
        "slope_target": report.slope_target,
        "slope_rel_error": report.slope_rel_error,
        "stationary_second_moment": report.stationary_second_moment,
        "stationary_bound": report.stationary_bound,
        "ok": report.slope_rel_error <= 0.05
        and report.stationary_second_moment <= report.stationary_bound,
    }
    table = Table(
        "points",
        ["t", "mean_inner", "se", "exact", "tail_empirical", "tail_stationary",
         "tv_lower_bound"],
        rows,
    )
    return summary, [table], True


@dataclass
class CouponReport:
    n: int
    c: float
    T: int
    replicas: int
    miss_frequency: float
    target: float                # 1 - exp(-exp(c))
    abs_error: float


def coupon_collector_experiment(n: int, c: float, replicas: int, seed: int) -> CouponReport:
    """Fraction of runs in which some coordinate is never touched by a pair
    update within T = floor(n (log n - c) / 2) steps, against the classical
    limit 1 - exp(-exp(c)).

    Per-replica draw order: i array, then j array (ordered distinct pairs).
    """
    T = max(0, math.floor(0.5 * n * (math.log(n) - c)))
    misses = 0
    for b in range(replicas):
        rng = replica_rng(seed, b)
        if T == 0:
            misses += 1
            continue
        i = rng.integers(0, n, T)
        raw = rng.integers(0, n - 1, T)
        j = raw + (raw >= i)
        seen = np.zeros(n, dtype=bool)
        seen[i] = True
        seen[j] = True
        misses += not seen.all()
    target = 1.0 - math.exp(-math.exp(c))
    freq = misses / replicas
    return CouponReport(
        n=n, c=float(c), T=T, replicas=replicas, miss_frequency=freq,
        target=target, abs_error=abs(freq - target),
    )


def _run_lowerbound_matrix(config: ExperimentConfig):
    if config.n is None:
        raise ConfigError("lowerbound-matrix requires 'n'")
    replicas = config.replicas or 10**4
    c = _thr(config, "c", 0.0)
    report = coupon_collector_experiment(config.n, c, replicas, config.seed)
    summary = {
        "n": report.n,
        "c": report.c,
        "T": report.T,
        "replicas": report.replicas,
        "miss_frequency": report.miss_frequency,
        "target": report.target,
        "abs_error": report.abs_error,
        "ok": report.abs_error <= 0.05,
    }
    return summary, [], True


# ---------------------------------------------------------------------------
# exact oracles


def irwin_hall_cdf(k: int, x: float) -> float:
    """CDF at x of the sum of k independent U[0, 1] variables."""
    if x <= 0.0:
        return 0.0
    if x >= k:
        return 1.0
    total = 0.0
    for j in range(int(math.floor(x)) + 1):
        total += (-1.0) ** j * math.comb(k, j) * (x - j) ** k
    return total / math.factorial(k)


def exact_acceptance_rate(n: int) -> float:
    """Exact acceptance probability of the matrix stationary sampler: the
    sum of n-1 U[0, 2] draws must land in [n-2, n]."""
    k = n - 1
    return irwin_hall_cdf(k, n / 2.0) - irwin_hall_cdf(k, (n - 2) / 2.0)


def exact_marginal_cdf(n: int, x: float) -> float:
    """Exact CDF of one matrix column entry under the uniform polytope law.

    P[c_0 <= x] conditions the free-coordinate product measure on acceptance:
    the remaining n-1 entries must sum to n - c_0, so the conditional CDF is
    a ratio of Irwin-Hall CDF differences.
    """
    if x <= 0.0:
        return 0.0
    if x >= 2.0:
        return 1.0
    k = n - 1
    top = irwin_hall_cdf(k, n / 2.0) - irwin_hall_cdf(k, (n - x) / 2.0)
    bottom = irwin_hall_cdf(k, n / 2.0) - irwin_hall_cdf(k, (n - 2) / 2.0)
    return top / bottom


def _oracle_kernel_enumeration() -> dict:
    """Rebuild small base/edge kernels from first principles (exact rational
    row masses via direct enumeration of (element, generator) draws) and
    compare against the kernel builders."""
    out = {}
    cases = {
        "cyclic-4-pm1": (4, [1, 3]),
        "cyclic-5-complete": (5, [1, 2, 3, 4]),
    }
    for name, (n, gens) in cases.items():
        group, gset = resolve_group({"family": "cyclic", "n": n, "gens": gens})
        m = len(gens)
        base_row = [Fraction(0)] * n
        base_row[0] = 1 - Fraction(2, n)
        edge_row = [Fraction(0)] * n
        edge_row[0] = 1 - Fraction(1, n)
        for s in gens:
            base_row[s % n] += Fraction(2, n * m)
            edge_row[s % n] += Fraction(1, n * m)
        built_base = base_walk_kernel(group, gset).p[0]
        built_edge = edge_walk_kernel(group, gset).p[0]
        for w in range(n):
            if abs(float(base_row[w]) - built_base[w]) > 1e-15:
                raise AssertionFailure(
                    f"{name}: base row entry {w} is {built_base[w]!r}, oracle {float(base_row[w])!r}"
                )
            if abs(float(edge_row[w]) - built_edge[w]) > 1e-15:
                raise AssertionFailure(
                    f"{name}: edge row entry {w} is {built_edge[w]!r}, oracle {float(edge_row[w])!r}"
                )
        out[name] = {
            "base_row": [float(v) for v in base_row],
            "edge_row": [float(v) for v in edge_row],
        }
    # cycle eigenvalues in closed form vs. the eigensolver
    group, gset = resolve_group({"family": "cyclic", "n": 4, "gens": [1, 3]})
    closed = sorted(
        (1.0 - (1.0 / 4.0) * (1.0 - math.cos(2.0 * math.pi * k / 4.0)) for k in range(4)),
        reverse=True,
    )
    solved = spectral_summary(edge_walk_kernel(group, gset)).eigenvalues
    worst = max(abs(a - b) for a, b in zip(closed, solved))
    if worst > 1e-10:
        raise AssertionFailure(f"cyclic-4 edge eigenvalues deviate by {worst:.3e}")
    out["cyclic-4-edge-eigenvalues"] = {"closed_form": closed, "max_deviation": worst}
    return out


def _oracle_acceptance_rate() -> dict:
    return {f"n={n}": exact_acceptance_rate(n) for n in (3, 4, 5)}


def _oracle_schedule_enumeration() -> dict:
    """Exact law of the connection time for n = 3 by enumerating every
    ordered pair sequence of length <= 6."""
    n = 3
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = {}
    for length in range(1, 7):
        connected = 0
        total = len(pairs) ** length
        for seq in itertools.product(pairs, repeat=length):
            uf_parent = list(range(n))

            def find(a):
                while uf_parent[a] != a:
                    uf_parent[a] = uf_parent[uf_parent[a]]
                    a = uf_parent[a]
                return a

            comps = n
            for i, j in seq:
                ri, rj = find(i), find(j)
                if ri != rj:
                    uf_parent[ri] = rj
                    comps -= 1
            connected += comps == 1
        exact = Fraction(connected, total)
        out[f"P[tau<={length}]"] = float(exact)
    return out


def _oracle_marginal_density() -> dict:
    out = {}
    grid = [0.25 * k for k in range(9)]
    for n in (3, 4):
        out[f"cdf-n={n}"] = {f"x={x}": exact_marginal_cdf(n, x) for x in grid}
    # the n=3 marginal density is the trapezoid (1 + min(x, 2-x)) / 3;
    # cross-check the CDF against its integral at the grid
    for x in grid:
        if x <= 1.0:
            integral = (x + x * x / 2.0) / 3.0
        else:
            integral = (3.0 * x - x * x / 2.0 - 1.0) / 3.0
        if abs(integral - exact_marginal_cdf(3, x)) > 1e-12:
            raise AssertionFailure(
                f"n=3 marginal CDF at {x} is {exact_marginal_cdf(3, x)!r}, "
                f"trapezoid integral {integral!r}"
            )
    out["n=3-density-form"] = "(1 + min(x, 2 - x)) / 3 on [0, 2]"
    return out


_ORACLE_RUNNERS = {
    "kernel-enumeration": _oracle_kernel_enumeration,
    "acceptance-rate": _oracle_acceptance_rate,
    "schedule-enumeration": _oracle_schedule_enumeration,
    "marginal-density": _oracle_marginal_density,
}


def oracle(suite: str, seed: int = 0) -> dict:
    """Run one exact-oracle suite and print its values (12 significant
    digits) for embedding into test fixtures."""
    if suite not in _ORACLE_RUNNERS:
        raise ConfigError(f"unknown oracle suite {suite!r}")
    values = _ORACLE_RUNNERS[suite]()
    print(f"oracle suite {suite}")

    def emit(label: str, val) -> None:
        if isinstance(val, dict):
            for key, sub in val.items():
                emit(f"{label}{key}.", sub)
        elif isinstance(val, float):
            print(f"  {label.rstrip('.')} = {val:.12g}")
        elif isinstance(val, list):
            body = ", ".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in val)
            print(f"  {label.rstrip('.')} = [{body}]")
        else:
            print(f"  {label.rstrip('.')} = {val}")

    emit("", values)
    return values


def _run_oracle(config: ExperimentConfig):
    if config.suite is None:
        raise ConfigError("oracle requires a 'suite' field")
    values = oracle(config.suite, config.seed)
    return {"suite": config.suite, "values": values}, [], False


# ---------------------------------------------------------------------------
# dispatch


_RUNNERS = {
    "gap": _run_gap,
    "compare": _run_compare,
    "s-recursion": _run_s_recursion,
    "contract-simplex": _run_contract_simplex,
    "contract-matrix": _run_contract_matrix,
    "identity-matrix": _run_identity_matrix,
    "couple-simplex": lambda cfg: _run_couple(cfg, "simplex"),
    "couple-matrix": lambda cfg: _run_couple(cfg, "matrix"),
    "connect": _run_connect,
    "largeness": _run_largeness,
    "lowerbound-simplex": _run_lowerbound_simplex,
    "lowerbound-matrix": _run_lowerbound_matrix,
    "oracle": _run_oracle,
}


def run(config: ExperimentConfig, out_dir=None, fmt: Optional[str] = None) -> int:
    """Execute one experiment; returns the process exit code.

    Writes <out>/manifest.json with status "running" before any result file,
    then the artifacts, then the final manifest with status "complete" (or
    "failed" with the error and exit code 1 for configuration problems, 2
    for violated invariants)."""
    try:
        output = config.output or {}
        directory = Path(out_dir or output.get("path") or f"gibbsmix-results/{config.experiment}")
        fmt = fmt or output.get("format") or "csv"
        if fmt not in _FORMATS:
            raise ConfigError(f"unknown output format {fmt!r}")
        directory.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}")
        return 1
    started = time.time()
    replicas = config.replicas
    manifest = RunManifest(
        experiment=config.experiment,
        config=config.to_dict(),
        seed=config.seed,
        replicas=replicas,
        replica_seed_rule=_SEED_RULE,
        replica_seeds=[],
        version=__version__,
        status="running",
        started_at_unix=started,
    )
    manifest_path = directory / "manifest.json"
    manifest.write(manifest_path)
    try:
        summary, tables, per_replica = _RUNNERS[config.experiment](config)
        paths = [table.write(directory, fmt) for table in tables]
        if per_replica:
            count = summary.get("replicas", replicas) or 0
            if count and count <= _MANIFEST_SEED_CAP:
                manifest.replica_seeds = replica_seed_words(config.seed, count)
        manifest.summary = summary
        manifest.artifacts = [p.name for p in paths]
        manifest.status = "complete"
        manifest.wall_clock_seconds = time.time() - started
        manifest.write(manifest_path)
    except (ConfigError, GroupError) as exc:
        manifest.status = "failed"
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.wall_clock_seconds = time.time() - started
        manifest.write(manifest_path)
        print(f"config error: {exc}")
        return 1
    except (AssertionFailure, InvariantViolation, KernelError,
            DominationViolated, RejectionBudgetExceeded) as exc:
        manifest.status = "failed"
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.wall_clock_seconds = time.time() - started
        manifest.write(manifest_path)
        print(f"invariant failure: {exc}")
        return 2
    for key, value in summary.items():
        print(f"{config.experiment}: {key} = {value}")
    return 0
