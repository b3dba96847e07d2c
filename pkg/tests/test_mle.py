import numpy as np
import pytest

from kpartite import matrices as mx
from kpartite.mle import EXACT, equivalence_for, mle, recovery_check
from kpartite.model import (
    PARTITION,
    PHASE,
    Assignment,
    CapExceededError,
    ModelError,
    Palette,
    SampleSpace,
    enumerate_array,
)
from kpartite.statistics import score, score_kind

REAL3 = Palette.real((0.0, 1.0, 3.0))
REAL2 = Palette.real((0.0, 1.0))


def test_noiseless_fixed_vector():
    y = Assignment((1, 0, 2, 0, 1), REAL3)
    res = mle(mx.observe(y, mx.VECTOR_T, 0, mx.stream(0)), SampleSpace.fixed((2, 2, 1)), REAL3)
    assert res.argbest == y
    assert res.tie_count == 1
    assert res.states_visited == 30
    assert res.orientation == "maximize"


def test_noiseless_free_partition_returns_class_member():
    y = Assignment((1, 1, 0, 2, 0), REAL3)
    res = mle(mx.observe(y, mx.PARTITION_R, 0, mx.stream(0)), SampleSpace.omega(5, 3), REAL3)
    assert recovery_check(res.argbest, y, PARTITION)
    assert res.tie_count == 1
    # deterministic pick: first-appearance canonical form
    assert res.argbest.colors == (0, 0, 1, 2, 1)


def test_noiseless_theta_phase():
    pal = Palette.roots(3)
    y = Assignment((2, 0, 1, 1, 0, 2), pal)
    res = mle(mx.observe(y, mx.GUE_U, 0, mx.stream(0)), SampleSpace.theta(6, 3), pal)
    assert recovery_check(res.argbest, y, PHASE)
    assert res.argbest.colors[0] == 0
    assert res.best_score == pytest.approx(36.0)


@pytest.mark.parametrize("n,k", [(8, 2), (5, 3)])
def test_noiseless_every_truth_free_partition(n, k):
    pal = Palette.real(tuple(float(c) for c in range(k)))
    space = SampleSpace.omega(n, k)
    for row in enumerate_array(space):
        y = Assignment(tuple(row), pal)
        res = mle(mx.observe(y, mx.PARTITION_R, 0, mx.stream(0)), space, pal)
        assert recovery_check(res.argbest, y, PARTITION)


@pytest.mark.parametrize("n,k", [(8, 2), (5, 3)])
def test_noiseless_every_truth_free_vector(n, k):
    pal = Palette.real(tuple(float(c) for c in range(k)))
    space = SampleSpace.omega(n, k)
    for row in enumerate_array(space):
        y = Assignment(tuple(row), pal)
        res = mle(mx.observe(y, mx.VECTOR_T, 0, mx.stream(0)), space, pal)
        if min(y.group_sizes) > 0:
            assert res.argbest == y
        else:
            # a truth missing a color is only pinned down up to a shift of all values
            assert np.array_equal(mx.build_G(res.argbest), mx.build_G(y))


@pytest.mark.parametrize("counts", [(4, 4), (3, 3, 2)])
@pytest.mark.parametrize("model", [mx.VECTOR_T, mx.PARTITION_R])
def test_noiseless_every_truth_in_fixed_space(model, counts):
    k = len(counts)
    pal = Palette.real(tuple(float(c) for c in range(k)))
    space = SampleSpace.fixed(counts)
    mode = equivalence_for(score_kind(model, space.kind))
    for row in enumerate_array(space):
        y = Assignment(tuple(row), pal)
        assert recovery_check(mle(mx.observe(y, model, 0, mx.stream(0)), space, pal).argbest, y, mode)


@pytest.mark.parametrize("n,k", [(8, 2), (6, 3)])
def test_noiseless_every_truth_in_theta(n, k):
    pal = Palette.roots(k)
    space = SampleSpace.theta(n, k)
    for row in enumerate_array(space):
        y = Assignment(tuple(row), pal)
        assert recovery_check(mle(mx.observe(y, mx.GUE_U, 0, mx.stream(0)), space, pal).argbest, y, PHASE)


def test_fixed_and_free_scores_related():
    rng = np.random.default_rng(3)
    for trial in range(20):
        y = Assignment(tuple(rng.permutation([0, 0, 0, 1, 1, 2, 2])), REAL3)
        obs = mx.observe(y, mx.VECTOR_T, 2.0, mx.stream(trial))
        f, _ = score(y, obs, SampleSpace.fixed((3, 2, 2)))
        d, _ = score(y, obs, SampleSpace.omega(7, 3))
        G = mx.build_G(y)
        assert d == pytest.approx(-2 * f + (G * G).sum(), rel=1e-12, abs=1e-9)


def test_no_ties_under_noise():
    rng = np.random.default_rng(4)
    space = SampleSpace.omega(8, 2)
    for trial in range(1000):
        y = Assignment(tuple(rng.integers(0, 2, 8)), REAL2)
        res = mle(mx.observe(y, mx.PARTITION_R, 0.5, mx.stream(trial)), space, REAL2)
        assert res.tie_count == 1


def test_margin_sign_matches_recovery():
    rng = np.random.default_rng(9)
    space = SampleSpace.fixed((4, 4))
    for trial in range(50):
        y = Assignment(tuple(rng.permutation([0] * 4 + [1] * 4)), REAL2)
        res = mle(mx.observe(y, mx.VECTOR_T, 1.5, mx.stream(trial)), space, REAL2, truth=y)
        assert (res.margin > 0) == (res.argbest == y)


def test_cap_and_pairing_errors():
    y = Assignment((0, 1) * 6, REAL2)
    obs = mx.observe(y, mx.VECTOR_T, 0, mx.stream(0))
    with pytest.raises(CapExceededError):
        mle(obs, SampleSpace.omega(12, 2), REAL2, cap=100)
    with pytest.raises(ModelError):
        mle(obs, SampleSpace.theta(12, 2), REAL2)


def test_recovery_check_modes():
    pal = Palette.roots(3)
    y = Assignment((0, 1, 2, 2), pal)
    swapped = Assignment((1, 0, 2, 2), pal)
    rotated = Assignment((1, 2, 0, 0), pal)
    for mode in (EXACT, PARTITION, PHASE):
        assert recovery_check(y, y, mode)
    assert recovery_check(swapped, y, PARTITION)
    assert not recovery_check(swapped, y, EXACT)
    assert recovery_check(rotated, y, PHASE)
    assert not recovery_check(swapped, y, PHASE)
    with pytest.raises(ModelError):
        recovery_check(Assignment((0, 1), pal), y)
