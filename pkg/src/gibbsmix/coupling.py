"""Coupling machinery for the two Gibbs samplers.

Three layers:

* proportional coupling: both chains share every (pair, lam) draw; the L2
  difference contracts in expectation.
* subset coupling: at one update of the pair (i, j) with i inside a block S
  and j outside it, the two lambdas are drawn jointly so that the block
  weights w(X', S) and w(Y', S) coincide with high probability, while each
  lambda stays exactly uniform (a remainder density absorbs the failure
  branch).
* the two-phase non-Markovian coupling: phase 1 runs proportional steps;
  the phase-2 update coordinates are drawn up front, their suffix graph
  defines a backward partition process whose merge times are "marked", and
  the replay applies subset couplings exactly at marked times. If every
  subset coupling succeeds and the schedule connects, the chains meet.

The partition process over a schedule on times [T1, T): P_t is the set of
connected components of the edges {(i(s), j(s)) : s >= t}; it refines as t
grows, P_T is all singletons, and each marked time merges exactly two blocks
(S1 the smaller, ties broken toward the block containing the smallest
coordinate). tau is the backward distance T - t* to the first time t* at
which a single block forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegeneratePairMass, InvariantViolation
from .groups import GeneratorSet, GroupTable
from .kernels import base_walk_kernel, spectral_summary
from .matrices import MatrixState, msample_stationary, mstep_batch, pair_alpha_beta
from .pairops import split_pair
from .seeding import replica_rng
from .simplex import SimplexState, step_batch

__all__ = [
    "SUBSET_FAILED",
    "NOT_CONNECTED",
    "LARGENESS_VIOLATED",
    "UpdateSchedule",
    "MergeRecord",
    "PartitionProcess",
    "CouplingOutcome",
    "CouplingTrace",
    "CouplingRunResult",
    "ConnectReport",
    "ClosenessReport",
    "build_partition_process",
    "proportional_step",
    "subset_couple_arrays",
    "subset_step_simplex",
    "subset_step_matrix",
    "run_nonmarkovian_coupling",
    "connectedness_experiment",
    "closeness_check",
    "default_start",
]

SUBSET_FAILED = "SubsetFailed"
NOT_CONNECTED = "NotConnected"
LARGENESS_VIOLATED = "LargenessViolated"

_W_TOL = 1e-12
_FINAL_GAP_TOL = 1e-8
_PAIR_MASS_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# schedules and partition processes


@dataclass(eq=False)
class UpdateSchedule:
    """Pre-drawn update coordinates for times t0, t0+1, ..., t0+len-1."""

    entries: np.ndarray          # (T, 2) coordinate pairs
    t0: int = 0

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.int64)
        if self.entries.ndim != 2 or self.entries.shape[1] != 2:
            raise InvariantViolation("schedule-shape", f"shape {self.entries.shape}")
        if np.any(self.entries[:, 0] == self.entries[:, 1]):
            raise InvariantViolation("schedule-pair-distinct", "an entry has i == j")

    def __len__(self) -> int:
        return self.entries.shape[0]

    @property
    def end(self) -> int:
        return self.t0 + len(self)


@dataclass
class MergeRecord:
    """At time t the blocks s1 and s2 of P_{t+1} merge into one block of P_t;
    |s1| <= |s2|, ties broken so s1 contains the smallest coordinate."""

    t: int
    s1: tuple
    s2: tuple


class _UnionFind:
    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        p = self.parent
        root = a
        while p[root] != root:
            root = p[root]
        while p[a] != root:
            p[a], a = root, p[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(eq=False)
class PartitionProcess:
    n: int
    schedule: UpdateSchedule
    merges: list                  # MergeRecord, descending t
    tau: float                    # T - (first single-block time), or inf
    connected: bool

    @property
    def marked_times(self) -> list:
        return [rec.t for rec in self.merges]

    def partition_at(self, t: int) -> list:
        """Blocks of P_t (components of the suffix edges {s >= t}), each a
        sorted tuple, sorted by smallest member."""
        uf = _UnionFind(self.n)
        lo = max(0, t - self.schedule.t0)
        for i, j in self.schedule.entries[lo:]:
            uf.union(int(i), int(j))
        groups = {}
        for k in range(self.n):
            groups.setdefault(uf.find(k), []).append(k)
        return sorted(tuple(v) for v in groups.values())


def build_partition_process(sched: UpdateSchedule, n: int) -> PartitionProcess:
    """Backward union-find over the schedule, recording every merge."""
    if len(sched) == 0:
        raise InvariantViolation("schedule-empty", "schedule must be nonempty")
    uf = _UnionFind(n)
    members = {k: [k] for k in range(n)}
    merges = []
    components = n
    for idx in range(len(sched) - 1, -1, -1):
        i = int(sched.entries[idx, 0])
        j = int(sched.entries[idx, 1])
        ri, rj = uf.find(i), uf.find(j)
        if ri == rj:
            continue
        block_a, block_b = members[ri], members[rj]
        if len(block_a) != len(block_b):
            s1, s2 = (block_a, block_b) if len(block_a) < len(block_b) else (block_b, block_a)
        elif min(block_a) < min(block_b):
            s1, s2 = block_a, block_b
        else:
            s1, s2 = block_b, block_a
        merges.append(
            MergeRecord(t=sched.t0 + idx, s1=tuple(sorted(s1)), s2=tuple(sorted(s2)))
        )
        uf.union(i, j)
        root = uf.find(i)
        other = rj if root == ri else ri
        members[root] = block_a + block_b if root == ri else block_b + block_a
        del members[other]
        components -= 1
    connected = components == 1
    tau = float(sched.end - merges[-1].t) if connected else math.inf
    return PartitionProcess(
        n=n, schedule=sched, merges=merges, tau=tau, connected=connected
    )


# ---------------------------------------------------------------------------
# single coupled moves


def _chain_coeffs(kind: str, vi: float, vj: float):
    """(total, alpha, beta) of the affine pair move for one chain."""
    if kind == "simplex":
        total = vi + vj
        return total, total, 0.0
    total, alpha, beta = pair_alpha_beta(vi, vj)
    return float(total), float(alpha), float(beta)


def proportional_step(x, y, i: int, j: int, lam: float):
    """Advance both states with the identical (i, j, lam) draw."""
    if isinstance(x, SimplexState) and isinstance(y, SimplexState):
        kind = "simplex"
        xv, yv = x.x.copy(), y.x.copy()
    elif isinstance(x, MatrixState) and isinstance(y, MatrixState):
        kind = "matrix"
        xv, yv = x.c.copy(), y.c.copy()
    else:
        raise InvariantViolation("state-kind", "states must both be simplex or both matrix")
    for v in (xv, yv):
        total, alpha, beta = _chain_coeffs(kind, v[i], v[j])
        a, b = split_pair(total, alpha, beta, lam)
        v[i] = float(a)
        v[j] = float(b)
    if kind == "simplex":
        return SimplexState(xv), SimplexState(yv)
    return MatrixState(xv), MatrixState(yv)


def _remainder_sample(lo: float, hi: float, q: float, rng: np.random.Generator) -> float:
    """Inversion sample from the density proportional to 1 - q*1[lo, hi] on
    [0, 1] (the two-piece remainder left after the success branch)."""
    z_total = 1.0 - q * (hi - lo)
    if z_total <= 0.0:
        raise InvariantViolation("remainder-mass", f"nonpositive remainder {z_total:.3e}")
    u = rng.random() * z_total
    if u < lo:
        return u
    u -= lo
    mid = (hi - lo) * (1.0 - q)
    if u < mid:
        return hi if q >= 1.0 else lo + u / (1.0 - q)
    return hi + (u - mid)


def subset_couple_arrays(
    kind: str,
    x: np.ndarray,
    y: np.ndarray,
    subset: np.ndarray,
    i: int,
    j: int,
    rng: np.random.Generator,
    lam_first: Optional[float] = None,
):
    """One subset-coupled update of the pair (i, j), in place; i lies in the
    block ``subset``, j outside it.

    The chain whose pair move has the larger lambda coefficient draws its
    lambda uniformly first (``lam_first`` if supplied); the other lambda is
    computed from the weight-matching relation. If the computed value leaves
    [0, 1] the step fails and that lambda is drawn from the remainder
    density instead, keeping both marginals exactly uniform.

    Returns (succeeded, lam_x, lam_y). On success the block weights agree
    within 1e-12 (asserted).
    """
    xi, xj = float(x[i]), float(x[j])
    yi, yj = float(y[i]), float(y[j])
    sx, ax, bx = _chain_coeffs(kind, xi, xj)
    sy, ay, by = _chain_coeffs(kind, yi, yj)
    if ax <= _PAIR_MASS_FLOOR or ay <= _PAIR_MASS_FLOOR:
        raise DegeneratePairMass(f"pair mass {min(ax, ay):.3e} at pair ({i}, {j})")

    others = subset[subset != i]
    c = (by - bx) + float(y[others].sum() - x[others].sum())

    if ay > ax:
        first = "y"
    elif ax > ay:
        first = "x"
    elif kind == "matrix" and sx > 2.0 and sy < 2.0:
        # pair-gap tie with delta_x < 0 < delta_y (delta = 2 - pair total):
        # the x side draws first
        first = "x"
    else:
        first = "y"

    u = float(rng.random()) if lam_first is None else float(lam_first)
    if first == "y":
        lam_y = u
        z = (ay * lam_y + c) / ax
        lo_img, hi_img = c / ax, (ay + c) / ax
        q = ax / ay
    else:
        lam_x = u
        z = (ax * lam_x - c) / ay
        lo_img, hi_img = -c / ay, (ax - c) / ay
        q = ay / ax

    succeeded = 0.0 <= z <= 1.0
    if succeeded:
        other_lam = z
    else:
        lo = min(max(lo_img, 0.0), 1.0)
        hi = min(max(hi_img, 0.0), 1.0)
        other_lam = _remainder_sample(lo, hi, q, rng)
    if first == "y":
        lam_x = other_lam
    else:
        lam_y = other_lam

    nxi, nxj = split_pair(sx, ax, bx, lam_x)
    nyi, nyj = split_pair(sy, ay, by, lam_y)
    x[i], x[j] = float(nxi), float(nxj)
    y[i], y[j] = float(nyi), float(nyj)

    if succeeded:
        wx = float(x[subset].sum())
        wy = float(y[subset].sum())
        if abs(wx - wy) > _W_TOL:
            raise InvariantViolation(
                "subset-w-equality", f"|w(X,S) - w(Y,S)| = {abs(wx - wy):.3e}"
            )
    return succeeded, float(lam_x), float(lam_y)


def _subset_step_state(kind, x, y, subset, i, j, rng, lam_first):
    subset = np.asarray(sorted(set(int(s) for s in subset)), dtype=np.int64)
    i, j = int(i), int(j)
    if i not in subset:
        raise InvariantViolation("subset-roles", "i must belong to the subset")
    if j in subset:
        raise InvariantViolation("subset-roles", "j must lie outside the subset")
    xv = (x.x if kind == "simplex" else x.c).copy()
    yv = (y.x if kind == "simplex" else y.c).copy()
    succeeded, _, _ = subset_couple_arrays(kind, xv, yv, subset, i, j, rng, lam_first)
    if kind == "simplex":
        return SimplexState(xv), SimplexState(yv), succeeded
    return MatrixState(xv), MatrixState(yv), succeeded


def subset_step_simplex(x: SimplexState, y: SimplexState, subset, i: int, j: int,
                        rng: np.random.Generator, lam_first: Optional[float] = None):
    """Subset-coupled simplex move; see subset_couple_arrays."""
    return _subset_step_state("simplex", x, y, subset, i, j, rng, lam_first)


def subset_step_matrix(x: MatrixState, y: MatrixState, subset, i: int, j: int,
                       rng: np.random.Generator, lam_first: Optional[float] = None):
    """Subset-coupled matrix move; see subset_couple_arrays."""
    return _subset_step_state("matrix", x, y, subset, i, j, rng, lam_first)


# ---------------------------------------------------------------------------
# the two-phase non-Markovian coupling


@dataclass
class CouplingOutcome:
    replica: int
    coupled: bool
    failure_kind: Optional[str]
    first_failure_time: Optional[int]
    tau_connect: Optional[int]
    max_final_gap: float

    def to_record(self) -> dict:
        return {
            "replica": self.replica,
            "coupled": self.coupled,
            "failure_kind": self.failure_kind,
            "first_failure_time": self.first_failure_time,
            "tau_connect": self.tau_connect,
            "max_final_gap": self.max_final_gap,
        }


@dataclass(eq=False)
class CouplingTrace:
    kind: str
    t0: int                      # start of phase 2
    xs: np.ndarray               # (T2 + 1, n) states entering each replay time
    ys: np.ndarray
    partition: PartitionProcess
    subset_times: list
    subset_success: list
    first_failure_time: Optional[int]
    initial_l1: float


@dataclass
class CouplingRunResult:
    outcomes: list
    traces: Optional[list] = None


def default_start(kind: str, n: int, identity: int = 0) -> np.ndarray:
    """Worst-case deterministic start: simplex mass concentrated at the
    identity; matrix first column pushed to the boundary corner."""
    if kind == "simplex":
        x = np.zeros(n)
        x[identity] = 1.0
        return x
    c = np.zeros(n)
    c[: n // 2] = 2.0
    if n % 2:
        c[n // 2] = 1.0
    return c


def run_nonmarkovian_coupling(
    kind: str,
    *,
    group: Optional[GroupTable] = None,
    gens: Optional[GeneratorSet] = None,
    n: Optional[int] = None,
    T1: int,
    T2: int,
    replicas: int,
    seed: int,
    x0: Optional[np.ndarray] = None,
    keep_trace: bool = False,
) -> CouplingRunResult:
    """Two-phase coupling for every replica; failures are recorded in the
    outcomes, never raised.

    Per replica: Y starts stationary, X at ``x0`` (default: default_start).
    Phase 1 applies T1 proportional steps. The phase-2 coordinates are then
    drawn up front (never the lambdas), the partition process of their suffix
    graph is built, and the T2 phase-2 steps are replayed with a subset
    coupling at each marked time — the updated coordinate lying in the
    smaller merged block S1 takes the role i — and proportional coupling
    elsewhere.

    Per-replica draw order: stationary start; phase-1 element/pair array,
    generator/partner array, lambda array; phase-2 coordinate arrays; phase-2
    lambda array; any subset-coupling remainder draws on demand. At a marked
    time the phase-2 lambda of that step is consumed as the first-drawn
    lambda of the subset coupling.

    failure_kind priority when several apply: LargenessViolated (the replay
    was aborted by a degenerate pair mass), then NotConnected, then
    SubsetFailed.
    """
    if kind == "simplex":
        if group is None or gens is None:
            raise InvariantViolation("arguments", "simplex coupling needs group and gens")
        n = group.n
        m = gens.m
        gens_arr = np.asarray(gens.elements, dtype=np.int64)
    elif kind == "matrix":
        if n is None:
            raise InvariantViolation("arguments", "matrix coupling needs n")
    else:
        raise InvariantViolation("arguments", f"unknown chain kind {kind!r}")
    if T2 < 1:
        raise InvariantViolation("arguments", "T2 must be >= 1")

    B = replicas
    start = default_start(kind, n, 0 if group is None else group.identity) if x0 is None else np.asarray(x0, dtype=float)
    X = np.broadcast_to(start, (B, n)).copy()
    Y = np.empty((B, n))
    a1 = np.empty((B, T1), dtype=np.int64)
    b1 = np.empty((B, T1), dtype=np.int64)
    lam1 = np.empty((B, T1))
    a2 = np.empty((B, T2), dtype=np.int64)
    b2 = np.empty((B, T2), dtype=np.int64)
    lam2 = np.empty((B, T2))
    rngs = []
    for b in range(B):
        rng = replica_rng(seed, b)
        rngs.append(rng)
        if kind == "simplex":
            e = rng.exponential(1.0, n)
            Y[b] = e / e.sum()
            g = rng.integers(0, n, T1)
            r = gens_arr[rng.integers(0, m, T1)]
            a1[b], b1[b] = g, group.mul[g, r]
            lam1[b] = rng.random(T1)
            g = rng.integers(0, n, T2)
            r = gens_arr[rng.integers(0, m, T2)]
            a2[b], b2[b] = g, group.mul[g, r]
            lam2[b] = rng.random(T2)
        else:
            Y[b] = msample_stationary(n, rng).c
            i1 = rng.integers(0, n, T1)
            raw = rng.integers(0, n - 1, T1)
            a1[b], b1[b] = i1, raw + (raw >= i1)
            lam1[b] = rng.random(T1)
            i2 = rng.integers(0, n, T2)
            raw = rng.integers(0, n - 1, T2)
            a2[b], b2[b] = i2, raw + (raw >= i2)
            lam2[b] = rng.random(T2)

    batch = step_batch if kind == "simplex" else mstep_batch
    rows_all = np.arange(B)
    for t in range(T1):
        batch(X, a1[:, t], b1[:, t], lam1[:, t], rows_all)
        batch(Y, a1[:, t], b1[:, t], lam1[:, t], rows_all)

    processes = []
    marks = {}
    for b in range(B):
        proc = build_partition_process(
            UpdateSchedule(entries=np.stack([a2[b], b2[b]], axis=1), t0=T1), n
        )
        processes.append(proc)
        for rec in proc.merges:
            marks.setdefault(rec.t - T1, []).append((b, rec))

    if keep_trace:
        tr_x = np.empty((B, T2 + 1, n))
        tr_y = np.empty((B, T2 + 1, n))
        tr_x[:, 0] = X
        tr_y[:, 0] = Y
        initial_l1 = np.abs(X - Y).sum(axis=1)
    subset_times = [[] for _ in range(B)]
    subset_success = [[] for _ in range(B)]

    subset_fail = np.full(B, -1, dtype=np.int64)
    largeness_fail = np.full(B, -1, dtype=np.int64)
    active = np.ones(B, dtype=bool)
    for t in range(T2):
        handled = np.zeros(B, dtype=bool)
        for b, rec in marks.get(t, ()):
            handled[b] = True
            if not active[b]:
                continue
            pa, pb = int(a2[b, t]), int(b2[b, t])
            s1set = set(rec.s1)
            s2set = set(rec.s2)
            if pa in s1set and pb in s2set:
                i, j = pa, pb
            elif pb in s1set and pa in s2set:
                i, j = pb, pa
            else:
                raise InvariantViolation(
                    "marked-edge-crossing",
                    f"edge ({pa}, {pb}) does not cross the merging blocks at t = {T1 + t}",
                )
            subset = np.asarray(rec.s1, dtype=np.int64)
            try:
                ok, _, _ = subset_couple_arrays(
                    kind, X[b], Y[b], subset, i, j, rngs[b], lam_first=lam2[b, t]
                )
            except DegeneratePairMass:
                largeness_fail[b] = T1 + t
                active[b] = False
                continue
            subset_times[b].append(T1 + t)
            subset_success[b].append(ok)
            if not ok and subset_fail[b] < 0:
                subset_fail[b] = T1 + t
        rest = active & ~handled
        if rest.any():
            rows = np.nonzero(rest)[0]
            batch(X, a2[rows, t], b2[rows, t], lam2[rows, t], rows)
            batch(Y, a2[rows, t], b2[rows, t], lam2[rows, t], rows)
        if keep_trace:
            tr_x[:, t + 1] = X
            tr_y[:, t + 1] = Y

    gaps = np.abs(X - Y).max(axis=1)
    outcomes = []
    for b in range(B):
        connected = processes[b].connected
        has_largeness = largeness_fail[b] >= 0
        has_subset = subset_fail[b] >= 0
        coupled = connected and not has_largeness and not has_subset
        if coupled:
            failure_kind = None
            first_failure = None
        elif has_largeness:
            failure_kind = LARGENESS_VIOLATED
            first_failure = int(largeness_fail[b])
        elif not connected:
            failure_kind = NOT_CONNECTED
            first_failure = int(subset_fail[b]) if has_subset else None
        else:
            failure_kind = SUBSET_FAILED
            first_failure = int(subset_fail[b])
        gap = float(gaps[b])
        if coupled and gap > _FINAL_GAP_TOL:
            raise InvariantViolation(
                "final-coupling", f"replica {b} coupled but max gap = {gap:.3e}"
            )
        outcomes.append(
            CouplingOutcome(
                replica=b,
                coupled=coupled,
                failure_kind=failure_kind,
                first_failure_time=first_failure,
                tau_connect=int(processes[b].tau) if connected else None,
                max_final_gap=gap,
            )
        )

    traces = None
    if keep_trace:
        traces = [
            CouplingTrace(
                kind=kind,
                t0=T1,
                xs=tr_x[b],
                ys=tr_y[b],
                partition=processes[b],
                subset_times=subset_times[b],
                subset_success=subset_success[b],
                first_failure_time=(
                    int(subset_fail[b]) if subset_fail[b] >= 0 else None
                ),
                initial_l1=float(initial_l1[b]),
            )
            for b in range(B)
        ]
    return CouplingRunResult(outcomes=outcomes, traces=traces)


# ---------------------------------------------------------------------------
# connectivity and closeness


@dataclass
class ConnectReport:
    kind: str
    n: int
    taus: np.ndarray             # per replica; censored entries equal max_draws + 1
    censored: int
    threshold: Optional[float]
    bound: Optional[float]
    tail_frequency: Optional[float]


def connectedness_experiment(
    kind: str,
    *,
    group: Optional[GroupTable] = None,
    gens: Optional[GeneratorSet] = None,
    n: Optional[int] = None,
    replicas: int = 1000,
    seed: int = 0,
    epsilon: Optional[float] = None,
    C: Optional[float] = None,
    max_draws: Optional[int] = None,
) -> ConnectReport:
    """Distribution of the connection time tau of a random update schedule.

    Schedule entries are i.i.d., so the backward suffix graph of length L has
    the law of a forward prefix; tau is measured by drawing edges until the
    union-find connects. The report compares the empirical tail against the
    relevant threshold: matrices use (1/2 + 2 eps) n log n with bound
    2 n^-eps; Cayley schedules use 8 (C + 3) log n / gamma_hat with bound
    2 n^-C.
    """
    if kind == "simplex":
        if group is None or gens is None:
            raise InvariantViolation("arguments", "cayley schedule needs group and gens")
        n = group.n
        m = gens.m
        gens_arr = np.asarray(gens.elements, dtype=np.int64)
    elif kind != "matrix":
        raise InvariantViolation("arguments", f"unknown chain kind {kind!r}")
    elif n is None:
        raise InvariantViolation("arguments", "matrix schedule needs n")
    if max_draws is None:
        max_draws = int(math.ceil(8.0 * n * max(math.log(n), 1.0))) + 32

    taus = np.empty(replicas, dtype=np.int64)
    censored = 0
    for b in range(replicas):
        rng = replica_rng(seed, b)
        if kind == "simplex":
            g = rng.integers(0, n, max_draws)
            r = gens_arr[rng.integers(0, m, max_draws)]
            left, right = g, np.asarray(group.mul[g, r])
        else:
            i = rng.integers(0, n, max_draws)
            raw = rng.integers(0, n - 1, max_draws)
            left, right = i, raw + (raw >= i)
        uf = _UnionFind(n)
        components = n
        tau = max_draws + 1
        for k in range(max_draws):
            if uf.union(int(left[k]), int(right[k])):
                components -= 1
                if components == 1:
                    tau = k + 1
                    break
        if tau > max_draws:
            censored += 1
        taus[b] = tau

    threshold = bound = tail = None
    if kind == "matrix" and epsilon is not None:
        threshold = (0.5 + 2.0 * epsilon) * n * math.log(n)
        bound = 2.0 * n ** (-epsilon)
    elif kind == "simplex" and C is not None:
        gamma_hat = spectral_summary(base_walk_kernel(group, gens)).gap
        threshold = 8.0 * (C + 3.0) * math.log(n) / gamma_hat
        bound = 2.0 * n ** (-C)
    if threshold is not None:
        tail = float(np.mean(taus > threshold))
    return ConnectReport(
        kind=kind,
        n=n,
        taus=taus,
        censored=censored,
        threshold=threshold,
        bound=bound,
        tail_frequency=tail,
    )


@dataclass
class ClosenessReport:
    initial_l1: float
    max_blockwise_l1: float      # max over checked steps of sum_S |w(X,S) - w(Y,S)|
    steps_checked: int
    ok: bool


def closeness_check(trace: CouplingTrace) -> ClosenessReport:
    """While the subset couplings have all succeeded, the blockwise L1
    distance over the current partition never exceeds the L1 distance at the
    start of phase 2 (within 1e-10)."""
    limit = trace.xs.shape[0] - 1
    if trace.first_failure_time is not None:
        limit = trace.first_failure_time - trace.t0
    worst = 0.0
    for t_rel in range(limit + 1):
        blocks = trace.partition.partition_at(trace.t0 + t_rel)
        diff = trace.xs[t_rel] - trace.ys[t_rel]
        total = sum(abs(float(diff[list(block)].sum())) for block in blocks)
        worst = max(worst, total)
    return ClosenessReport(
        initial_l1=trace.initial_l1,
        max_blockwise_l1=worst,
        steps_checked=limit + 1,
        ok=worst <= trace.initial_l1 + 1e-10,
    )
