import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gibbsmix.errors import InvariantViolation
from gibbsmix.groups import build_cyclic
from gibbsmix.kernels import edge_walk_kernel
from gibbsmix.simplex import (
    MoveDraw,
    SimplexState,
    SVector,
    check_s_recursion,
    lower_bound_experiment,
    lower_bound_init,
    s_recursion_targets,
    s_vector,
    sample_stationary,
    sample_stationary_batch,
    step,
    step_batch,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_step_moves_pair_mass(z4):
    group, _ = z4
    state = SimplexState(np.array([0.2, 0.3, 0.4, 0.1]))
    out = step(state, MoveDraw(g=0, r=1, lam=0.5), group)
    assert out.x[0] == pytest.approx(0.25, abs=0)
    assert out.x[1] == pytest.approx(0.25, abs=0)
    assert out.x[2] == 0.4 and out.x[3] == 0.1


def test_step_rejects_identity_generator(z4):
    group, _ = z4
    state = SimplexState(np.array([0.25, 0.25, 0.25, 0.25]))
    with pytest.raises(InvariantViolation):
        step(state, MoveDraw(g=1, r=0, lam=0.5), group)


def test_state_validation():
    with pytest.raises(InvariantViolation):
        SimplexState(np.array([0.5, 0.6]))
    with pytest.raises(InvariantViolation):
        SimplexState(np.array([1.1, -0.1]))


def test_stationary_marginal_law(rng):
    # one coordinate of a uniform 3-simplex point has CDF 1 - (1 - x)^2
    samples = sample_stationary_batch(3, rng, 20000)[:, 0]
    result = stats.kstest(samples, lambda x: 1.0 - (1.0 - x) ** 2)
    assert result.pvalue > 0.01


_Z4_GROUP, _Z4_GENS = build_cyclic(4, [1, 3])


@settings(max_examples=200, deadline=None)
@given(lam=unit, a=st.floats(1e-6, 1.0), b=st.floats(1e-6, 1.0))
def test_step_conserves_pair_total_exactly(lam, a, b):
    group = _Z4_GROUP
    rest = 1.0
    x = np.array([a, b, 0.0, 0.0])
    x = x / x.sum() * rest
    state = SimplexState(x)
    out = step(state, MoveDraw(g=0, r=1, lam=lam), group)
    assert out.x[0] + out.x[1] == x[0] + x[1]
    assert out.x.min() >= 0.0


def test_batch_step_matches_scalar(z6, rng):
    group, gens = z6
    n = group.n
    x = sample_stationary_batch(n, rng, 64)
    a = rng.integers(0, n, 64)
    r = np.asarray(gens.elements)[rng.integers(0, gens.m, 64)]
    b = np.asarray(group.mul[a, r])
    lam = rng.random(64)
    expected = x.copy()
    for k in range(64):
        out = step(SimplexState(x[k]), MoveDraw(int(a[k]), int(r[k]), float(lam[k])), group)
        expected[k] = out.x
    step_batch(x, a, b, lam)
    assert np.array_equal(x, expected)


def test_s_vector_hand_example():
    group, _ = build_cyclic(3, [1, 2])
    x = SimplexState(np.array([0.5, 0.3, 0.2]))
    y = SimplexState(np.array([0.2, 0.3, 0.5]))
    d = x.x - y.x
    vec = s_vector(x, y, group)
    for h in range(3):
        expected = sum(d[g] * d[(g + h) % 3] for g in range(3))
        assert vec.s[h] == pytest.approx(expected, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_s_vector_invariants(data):
    n = data.draw(st.integers(3, 12))
    group, _ = build_cyclic(n, [1, n - 1])
    seed = data.draw(st.integers(0, 2**16))
    rng = np.random.default_rng(seed)
    x = sample_stationary(n, rng)
    y = sample_stationary(n, rng)
    vec = s_vector(x, y, group)
    ident = vec.s[group.identity]
    assert ident >= -1e-12
    assert np.abs(vec.s).max() <= ident + 1e-10
    assert abs(vec.s.sum()) <= 1e-10
    inv = group.inv
    assert np.allclose(vec.s, vec.s[inv], atol=1e-12)


def test_s_vector_rejects_dominated_identity_entry():
    # the identity entry is a squared norm and must dominate every entry
    with pytest.raises(InvariantViolation):
        SVector(s=np.array([1.0, 2.0, 3.0]), identity=0)


def test_s_recursion_targets_against_direct_average(z4, rng):
    # brute-force the one-step expectation by averaging the exact
    # lambda-integrated update over every (g, r) pair
    group, gens = z4
    n, m = group.n, gens.m
    x = sample_stationary(n, rng)
    y = sample_stationary(n, rng)
    d = x.x - y.x
    s = np.array([sum(d[g] * d[group.mul[g, h]] for g in range(n)) for h in range(n)])
    # after updating pair (g, gr): D'[g] = lam * P, D'[gr] = (1 - lam) * P
    # with P = D[g] + D[gr]; exact lambda moments 1/2, 1/3, and 1/6 close
    # the expectation of each product D'[z] D'[z.h]
    total = np.zeros(n)
    for g in range(n):
        for r in gens.elements:
            gr = int(group.mul[g, r])
            pair_sum = d[g] + d[gr]
            for h in range(n):
                acc = 0.0
                for z in range(n):
                    w = int(group.mul[z, h])
                    z_in = z == g or z == gr
                    w_in = w == g or w == gr
                    if z_in and w_in:
                        acc += pair_sum * pair_sum * (1.0 / 3.0 if z == w else 1.0 / 6.0)
                    elif z_in:
                        acc += 0.5 * pair_sum * d[w]
                    elif w_in:
                        acc += d[z] * 0.5 * pair_sum
                    else:
                        acc += d[z] * d[w]
                total[h] += acc / (n * m)
    targets = s_recursion_targets(s, group, gens)
    assert np.allclose(total, targets, atol=1e-12)


def test_s_recursion_monte_carlo(z6, rng):
    group, gens = z6
    x = sample_stationary(group.n, rng)
    y = sample_stationary(group.n, rng)
    report = check_s_recursion(x, y, group, gens, samples=200_000, seed=3)
    assert report.max_deviation_se <= 4.0
    assert abs(report.mean_lambda - 0.5) <= 4.0 * 0.3 / np.sqrt(report.samples)


def test_lower_bound_init_sign_rule(z6):
    group, gens = z6
    v, mu = lower_bound_init(edge_walk_kernel(group, gens))
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert (v[v >= 0.0] ** 2).sum() >= 0.5 - 1e-12
    assert mu.x.min() >= 0.0
    assert mu.x.sum() == pytest.approx(1.0, abs=1e-12)


def test_lower_bound_experiment_quick():
    group, gens = build_cyclic(8, [1, 7])
    report = lower_bound_experiment(group, gens, T=40, replicas=2000, seed=5)
    assert report.slope_rel_error <= 0.10
    assert report.stationary_second_moment <= report.stationary_bound
    for point in report.points:
        assert point.tv_lower_bound >= 0.0
