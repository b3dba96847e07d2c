import itertools

import numpy as np
import pytest

from kpartite import matrices as mx
from kpartite.mle import recovery_check
from kpartite.model import PHASE, Assignment, ModelError, Palette
from kpartite.sdp import (
    SdpParams,
    certify_condition_c1,
    dual_certificate,
    extract_embedded,
    real_embed,
    round_solution,
    solve_sdp,
    spectral_norm,
)


def random_hermitian(n, seed):
    return mx.sample_gue(n, mx.stream(seed, 0, "test"))


def roots_assignment(n, k, seed):
    rng = np.random.default_rng(seed)
    return Assignment(tuple(rng.integers(0, k, n)), Palette.roots(k))


def test_embed_real_symmetric_is_block_diagonal():
    V = mx.sample_goe(5, mx.stream(1))
    E = real_embed(V)
    assert np.array_equal(E[:5, :5], V) and np.array_equal(E[5:, 5:], V)
    assert not E[:5, 5:].any() and not E[5:, :5].any()


def test_embed_symmetric_and_round_trip():
    V = random_hermitian(8, 2)
    E = real_embed(V)
    assert np.array_equal(E, E.T)
    assert np.array_equal(extract_embedded(E), V)


def test_embed_doubles_eigenvalues():
    V = random_hermitian(8, 3)
    w = np.linalg.eigvalsh(V)
    assert np.allclose(np.linalg.eigvalsh(real_embed(V)), np.sort(np.repeat(w, 2)), atol=1e-10)


def test_embed_inner_product_identity():
    V, X = random_hermitian(6, 4), random_hermitian(6, 5)
    assert (real_embed(V) * real_embed(X)).sum() == pytest.approx(2 * np.vdot(X, V).real)


def test_embed_rejects_non_hermitian():
    with pytest.raises(ModelError):
        real_embed(np.array([[0, 1j], [1j, 0]]))


@pytest.mark.parametrize("embedding", ["complex", "real"])
def test_solve_noiseless(embedding):
    y = roots_assignment(10, 3, 0)
    P = mx.build_P(y)
    sol = solve_sdp(P, SdpParams(embedding=embedding))
    assert sol.converged
    assert np.abs(sol.X - P).max() < 1e-6
    assert sol.objective(P) == pytest.approx(100.0)


def test_solve_two_vertices():
    y = Assignment((0, 1), Palette.roots(2))
    sol = solve_sdp(mx.build_P(y), SdpParams(warm_start="identity"))
    assert sol.converged
    assert np.allclose(sol.X, [[1, -1], [-1, 1]], atol=1e-6)


def test_relaxation_dominates_rank_one_points():
    n, k = 6, 4
    V = random_hermitian(n, 6)
    sol = solve_sdp(V, SdpParams(warm_start="identity", max_iters=20000))
    assert sol.converged
    X = sol.X
    assert np.abs(X.diagonal() - 1).max() < 1e-6
    assert np.linalg.eigvalsh(X)[0] > -1e-6
    z = np.exp(2j * np.pi * np.array(list(itertools.product(range(k), repeat=n))) / k)
    best = np.einsum("si,ij,sj->s", z.conj(), V, z).real.max()
    assert sol.objective(V) >= best - 1e-6


def test_real_and_complex_backends_agree():
    V = random_hermitian(7, 7)
    a = solve_sdp(V, SdpParams(warm_start="identity", max_iters=20000))
    b = solve_sdp(V, SdpParams(warm_start="identity", max_iters=20000, embedding="real"))
    assert a.converged and b.converged
    assert a.objective(V) == pytest.approx(b.objective(V), abs=1e-5)


def test_nonconvergence_is_reported():
    sol = solve_sdp(random_hermitian(12, 8), SdpParams(warm_start="identity", max_iters=2))
    assert not sol.converged
    assert sol.iterations == 2
    assert sol.primal_residual > 0


def test_round_rank_one():
    y = roots_assignment(12, 5, 1)
    assert recovery_check(round_solution(mx.build_P(y), 5), y, PHASE)


def test_round_perturbed():
    y = roots_assignment(16, 4, 2)
    P = mx.build_P(y)
    for seed in range(20):
        E = random_hermitian(16, 100 + seed)
        X = P + 0.01 * E / spectral_norm(E)
        assert recovery_check(round_solution(X, 4), y, PHASE)


def test_round_identity_and_bad_k():
    x = round_solution(np.eye(5), 3)
    assert x.n == 5 and x.k == 3
    with pytest.raises(ModelError):
        round_solution(np.eye(3), 1)


def test_certificate_noiseless():
    n = 12
    y = roots_assignment(n, 4, 3)
    yv = y.values()
    rep = dual_certificate(mx.build_P(y), y)
    expect = 2 * (yv[:, None] * (n * np.eye(n) - np.ones((n, n))) * yv.conj()[None, :])
    assert np.allclose(rep.S, expect, atol=1e-12)
    assert rep.lambda_min == pytest.approx(0.0, abs=1e-10)
    assert rep.lambda_second == pytest.approx(2 * n)
    assert rep.null_vector_residual < 1e-12
    assert rep.certified


def test_certificate_kernel_for_any_V():
    for seed in range(5):
        y = roots_assignment(20, 3, seed)
        rep = dual_certificate(random_hermitian(20, seed), y)
        assert rep.null_vector_residual <= 1e-10 * np.linalg.norm(rep.S) * np.sqrt(20)


def test_certificate_under_condition_c1():
    n = 64
    sigma = 0.3 * np.sqrt(n) / np.sqrt(2 * np.log(n))
    y = roots_assignment(n, 4, 4)
    rng = mx.stream(4, 0, "noise")
    obs = mx.observe(y, mx.GOE_V, sigma, rng)
    Ws = mx.sample_goe(n, mx.stream(4, 0, "noise"))
    c1 = certify_condition_c1(Ws, sigma, n)
    assert c1.holds
    rep = dual_certificate(obs.matrix, y)
    assert rep.certified
    sol = solve_sdp(obs.matrix)
    assert np.linalg.norm(sol.X - mx.build_P(y)) / n <= 1e-4


def test_certified_trials_are_solved():
    n = 32
    for trial in range(10):
        y = roots_assignment(n, 3, 50 + trial)
        sigma = (0.5 + 0.3 * trial) * np.sqrt(n) / np.sqrt(2 * np.log(n))
        V = mx.observe(y, mx.GOE_V, sigma, mx.stream(trial)).matrix
        if dual_certificate(V, y).certified:
            sol = solve_sdp(V)
            assert np.linalg.norm(sol.X - mx.build_P(y)) / n <= 1e-4


def test_certificate_errors():
    with pytest.raises(ModelError):
        dual_certificate(np.eye(2), Assignment((0, 1), Palette.real((0.0, 1.0))))
    with pytest.raises(ModelError):
        dual_certificate(np.eye(3), Assignment((0, 1), Palette.roots(2)))


def test_spectral_norm_examples():
    J = np.ones((5, 5))
    assert spectral_norm(J) == pytest.approx(5.0)
    assert spectral_norm(5 * np.eye(5) - J) == pytest.approx(5.0)
    with pytest.raises(ModelError):
        spectral_norm(np.ones((2, 3)))


def test_condition_c1_trivial_cases():
    Ws = mx.sample_goe(30, mx.stream(3))
    c = certify_condition_c1(Ws, 0.0)
    assert c.lhs == 0 and c.holds
    assert certify_condition_c1(np.zeros((30, 30)), 1e6).holds
    assert c.majorant == 0.0
    big = certify_condition_c1(Ws, 1.0)
    assert big.lhs <= big.majorant + 1e-9
    with pytest.raises(ModelError):
        certify_condition_c1(np.triu(Ws), 1.0)


def test_condition_c1_monte_carlo():
    n = 256
    sigma = 0.5 * np.sqrt(n) / np.sqrt(2 * np.log(n))
    held = sum(certify_condition_c1(mx.sample_goe(n, mx.stream(31, t)), sigma, n).holds for t in range(40))
    assert held >= 0.95 * 40


def test_condition_c1_boundary_fails():
    Ws = mx.sample_goe(10, mx.stream(5))
    norm = spectral_norm(mx.laplacian(Ws))
    assert not certify_condition_c1(Ws, 1.0, norm).holds
    assert certify_condition_c1(Ws, 1.0, norm * (1 + 1e-9)).holds


def test_non_hermitian_certificate_never_certifies():
    y = roots_assignment(8, 3, 0)
    U = mx.build_P(y) + 0.05 * random_hermitian(8, 1)
    rep = dual_certificate(U, y)
    assert rep.hermitian_residual > rep.tol_psd
    assert not rep.certified
