import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gibbsmix.coupling import (
    CouplingOutcome,
    UpdateSchedule,
    build_partition_process,
    closeness_check,
    connectedness_experiment,
    proportional_step,
    run_nonmarkovian_coupling,
    subset_couple_arrays,
    subset_step_matrix,
    subset_step_simplex,
)
from gibbsmix.errors import DegeneratePairMass, InvariantViolation
from gibbsmix.groups import build_cyclic
from gibbsmix.matrices import MatrixState, msample_stationary
from gibbsmix.simplex import SimplexState, sample_stationary


def test_schedule_validation():
    with pytest.raises(InvariantViolation):
        UpdateSchedule(entries=np.array([[0, 0]]), t0=0)
    with pytest.raises(InvariantViolation):
        UpdateSchedule(entries=np.array([0, 1]), t0=0)


def test_partition_process_forced_example():
    sched = UpdateSchedule(entries=np.array([[0, 1], [1, 2]]), t0=0)
    proc = build_partition_process(sched, 3)
    assert proc.connected and proc.tau == 2
    assert [rec.t for rec in proc.merges] == [1, 0]
    assert proc.merges[0].s1 == (1,) and proc.merges[0].s2 == (2,)
    assert proc.merges[1].s1 == (0,) and proc.merges[1].s2 == (1, 2)
    assert proc.partition_at(0) == [(0, 1, 2)]
    assert proc.partition_at(1) == [(0,), (1, 2)]
    assert proc.partition_at(2) == [(0,), (1,), (2,)]


def test_partition_untouched_coordinate_never_connects():
    sched = UpdateSchedule(entries=np.array([[0, 1], [1, 3], [0, 3]]), t0=10)
    proc = build_partition_process(sched, 5)
    assert not proc.connected
    assert proc.tau == math.inf
    for t in range(10, 14):
        assert (2,) in proc.partition_at(t)
        assert (4,) in proc.partition_at(t)


def test_partition_single_pair():
    sched = UpdateSchedule(entries=np.array([[1, 0]]), t0=0)
    proc = build_partition_process(sched, 2)
    assert proc.connected and proc.tau == 1
    assert len(proc.merges) == 1
    assert proc.merges[0].s1 == (0,) and proc.merges[0].s2 == (1,)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_partition_invariants_random_schedules(data):
    n = data.draw(st.integers(2, 32))
    length = data.draw(st.integers(1, 80))
    seed = data.draw(st.integers(0, 2**16))
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, length)
    raw = rng.integers(0, n - 1, length)
    entries = np.stack([i, raw + (raw >= i)], axis=1)
    proc = build_partition_process(UpdateSchedule(entries=entries, t0=5), n)

    previous = None
    for t in range(5, 5 + length + 1):
        part = proc.partition_at(t)
        flat = sorted(x for block in part for x in block)
        assert flat == list(range(n))
        if previous is not None:
            # refinement going forward in time: every later block sits
            # inside an earlier one
            for block in part:
                assert any(set(block) <= set(b) for b in previous)
        previous = part

    merge_times = [rec.t for rec in proc.merges]
    assert merge_times == sorted(merge_times, reverse=True)
    assert len(set(merge_times)) == len(merge_times)
    for rec in proc.merges:
        assert len(rec.s1) <= len(rec.s2)
        if len(rec.s1) == len(rec.s2):
            assert min(rec.s1) < min(rec.s2)
        assert not (set(rec.s1) & set(rec.s2))
        merged = tuple(sorted(set(rec.s1) | set(rec.s2)))
        assert merged in proc.partition_at(rec.t)
        assert rec.s1 in proc.partition_at(rec.t + 1)
        assert rec.s2 in proc.partition_at(rec.t + 1)
    if proc.connected:
        t_star = proc.merges[-1].t
        assert proc.tau == proc.schedule.end - t_star
        assert len(proc.partition_at(t_star)) == 1
        if t_star + 1 <= proc.schedule.end:
            assert len(proc.partition_at(t_star + 1)) > 1


def test_subset_worked_example():
    x = SimplexState(np.array([0.2, 0.3, 0.5]))
    y = SimplexState(np.array([0.25, 0.35, 0.4]))
    x2, y2, ok = subset_step_simplex(x, y, [0], 0, 1, np.random.default_rng(0),
                                     lam_first=0.5)
    assert ok
    # lam_y = 0.5 gives lam_x = (0.6 * 0.5) / 0.5 = 0.6; both block weights 0.3
    assert x2.x[0] == pytest.approx(0.3, abs=1e-15)
    assert y2.x[0] == pytest.approx(0.3, abs=1e-15)
    assert x2.x[2] == 0.5 and y2.x[2] == 0.4


def test_subset_roles_validated():
    x = SimplexState(np.array([0.2, 0.3, 0.5]))
    rng = np.random.default_rng(0)
    with pytest.raises(InvariantViolation):
        subset_step_simplex(x, x, [0], 1, 2, rng)
    with pytest.raises(InvariantViolation):
        subset_step_simplex(x, x, [0, 1], 0, 1, rng)


def test_subset_failure_branch():
    # the y side has pair mass 0.9 vs 0.1, so lam_first = 0.5 maps to 4.5,
    # far outside [0, 1]: the step fails and the x lambda comes from the
    # remainder density
    x = SimplexState(np.array([0.05, 0.05, 0.9]))
    y = SimplexState(np.array([0.45, 0.45, 0.1]))
    x2, y2, ok = subset_step_simplex(x, y, [0], 0, 1, np.random.default_rng(3),
                                     lam_first=0.5)
    assert not ok
    assert x2.x.sum() == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= x2.x[0] <= 0.1


def test_subset_identical_states_always_succeed(rng):
    for _ in range(50):
        x = sample_stationary(5, rng)
        x2, y2, ok = subset_step_simplex(x, x, [0, 2], 0, 1, rng)
        assert ok
        assert np.array_equal(x2.x, y2.x)


def test_subset_degenerate_pair_mass():
    x = SimplexState(np.array([0.0, 0.0, 1.0]))
    y = SimplexState(np.array([0.3, 0.3, 0.4]))
    with pytest.raises(DegeneratePairMass):
        subset_step_simplex(x, y, [0], 0, 1, np.random.default_rng(0))


def test_subset_matrix_mixed_signs_draw_side():
    # pair totals straddle 2 with equal margins (an exact coefficient tie):
    # the side whose gap 2 - c[i] - c[j] is negative draws first and
    # consumes lam_first, the other lambda is solved for
    xv = np.ones(6)
    xv[0] += 0.01
    xv[2] -= 0.01
    yv = np.ones(6)
    yv[0] -= 0.01
    yv[2] += 0.01
    ok, lam_x, lam_y = subset_couple_arrays(
        "matrix", xv, yv, np.array([0]), 0, 1, np.random.default_rng(0),
        lam_first=0.625,
    )
    assert ok
    assert lam_x == 0.625
    assert lam_y != 0.625
    assert np.isclose(xv.sum(), 6.0) and np.isclose(yv.sum(), 6.0)
    # mirrored margins: the y side now has the negative gap and draws first
    xv2 = np.ones(6)
    xv2[0] -= 0.01
    xv2[2] += 0.01
    yv2 = np.ones(6)
    yv2[0] += 0.01
    yv2[2] -= 0.01
    ok2, lam_x2, lam_y2 = subset_couple_arrays(
        "matrix", xv2, yv2, np.array([0]), 0, 1, np.random.default_rng(0),
        lam_first=0.625,
    )
    assert ok2
    assert lam_y2 == 0.625
    assert lam_x2 != 0.625


def test_subset_marginal_uniformity_quick(rng):
    lam_xs, lam_ys = [], []
    for _ in range(4000):
        x = sample_stationary(5, rng)
        y = sample_stationary(5, rng)
        xv, yv = x.x.copy(), y.x.copy()
        _, lam_x, lam_y = subset_couple_arrays(
            "simplex", xv, yv, np.array([0, 2]), 0, 1, rng
        )
        lam_xs.append(lam_x)
        lam_ys.append(lam_y)
    assert stats.kstest(lam_xs, "uniform").pvalue > 1e-3
    assert stats.kstest(lam_ys, "uniform").pvalue > 1e-3


def test_proportional_step_dispatch(rng):
    x = sample_stationary(4, rng)
    x2, y2 = proportional_step(x, x, 0, 1, 0.3)
    assert np.array_equal(x2.x, y2.x)
    cx = msample_stationary(4, rng)
    cx2, cy2 = proportional_step(cx, cx, 2, 3, 0.8)
    assert np.array_equal(cx2.c, cy2.c)
    with pytest.raises(InvariantViolation):
        proportional_step(x, cx, 0, 1, 0.5)


def test_proportional_matrix_pair_second_moment(rng):
    # matched-sign pair gaps: the expected squared two-column difference of
    # the updated pair is (4/3) (delta - epsilon)^2
    x = MatrixState(np.array([1.8, 1.2, 0.6, 0.4]))
    y = MatrixState(np.array([1.5, 1.1, 0.7, 0.7]))
    delta = x.c[0] + x.c[1] - 2.0
    eps = y.c[0] + y.c[1] - 2.0
    assert delta > 0 and eps > 0
    trials = 200_000
    lams = rng.random(trials)
    acc = 0.0
    for lam in lams:
        x2, y2 = proportional_step(x, y, 0, 1, float(lam))
        diff0 = x2.c[0] - y2.c[0]
        diff1 = x2.c[1] - y2.c[1]
        acc += 2.0 * (diff0 * diff0 + diff1 * diff1)
    mean = acc / trials
    target = (4.0 / 3.0) * (delta - eps) ** 2
    assert mean == pytest.approx(target, rel=0.02)


def _outcome_counts(outcomes):
    counts = {}
    for o in outcomes:
        key = o.failure_kind or "coupled"
        counts[key] = counts.get(key, 0) + 1
    return counts


def test_nonmarkovian_identical_starts_always_couple():
    group, gens = build_cyclic(5, [1, 4])
    x0 = np.full(5, 0.2)
    result = run_nonmarkovian_coupling(
        "simplex", group=group, gens=gens, T1=5, T2=120, replicas=40, seed=9,
        x0=x0, keep_trace=True,
    )
    for outcome, trace in zip(result.outcomes, result.traces):
        assert isinstance(outcome, CouplingOutcome)
        if outcome.coupled:
            assert outcome.max_final_gap <= 1e-8
        if outcome.failure_kind != "NotConnected":
            assert all(trace.subset_success)
    connected = [o for o in result.outcomes if o.failure_kind != "NotConnected"]
    assert all(o.coupled for o in connected)


def test_nonmarkovian_short_schedule_not_connected():
    result = run_nonmarkovian_coupling("matrix", n=8, T1=10, T2=4, replicas=25, seed=2)
    counts = _outcome_counts(result.outcomes)
    assert counts == {"NotConnected": 25}
    for o in result.outcomes:
        assert o.tau_connect is None and not o.coupled


def test_nonmarkovian_records_subset_failures():
    result = run_nonmarkovian_coupling("matrix", n=8, T1=2, T2=75, replicas=150, seed=21)
    counts = _outcome_counts(result.outcomes)
    assert counts.get("SubsetFailed", 0) > 0
    for o in result.outcomes:
        if o.failure_kind == "SubsetFailed":
            assert o.first_failure_time is not None
            assert 2 <= o.first_failure_time < 2 + 75


def test_nonmarkovian_deterministic():
    group, gens = build_cyclic(6, [1, 5])
    runs = [
        run_nonmarkovian_coupling(
            "simplex", group=group, gens=gens, T1=50, T2=90, replicas=30, seed=13
        )
        for _ in range(2)
    ]
    records = [[o.to_record() for o in r.outcomes] for r in runs]
    assert records[0] == records[1]


def test_closeness_bound_holds_with_large_initial_gap():
    result = run_nonmarkovian_coupling(
        "matrix", n=8, T1=2, T2=75, replicas=40, seed=21, keep_trace=True
    )
    checked = 0
    for trace in result.traces:
        report = closeness_check(trace)
        assert report.ok
        assert report.max_blockwise_l1 <= report.initial_l1 + 1e-10
        checked += 1
    assert checked == 40


def test_connectedness_small_case_exact_law():
    report = connectedness_experiment("matrix", n=3, replicas=4000, seed=5)
    assert report.censored == 0
    for length in (2, 3, 4, 6):
        emp = float(np.mean(report.taus <= length))
        exact = 1.0 - (1.0 / 3.0) ** (length - 1)
        se = math.sqrt(exact * (1.0 - exact) / 4000)
        assert abs(emp - exact) <= 4.0 * se + 1e-9


def test_connectedness_thresholds():
    report = connectedness_experiment("matrix", n=32, replicas=300, seed=9, epsilon=0.5)
    assert report.threshold == pytest.approx((0.5 + 1.0) * 32 * math.log(32))
    assert report.bound == pytest.approx(2.0 * 32 ** -0.5)
    assert report.tail_frequency <= report.bound
    group, gens = build_cyclic(6, [1, 5])
    cayley = connectedness_experiment(
        "simplex", group=group, gens=gens, replicas=200, seed=3, C=1.0
    )
    assert cayley.bound == pytest.approx(2.0 / 6.0)
    assert cayley.tail_frequency <= cayley.bound
