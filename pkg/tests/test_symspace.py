import numpy as np
import pytest

from equivarlab.liealg import MatrixGroup, ad_action, norm_at, adjoint_at
from equivarlab.symspace import (MC_EDGE_NORM_RATIO, act, check_point, dist,
                                 exp_point, geodesic, mc_edge, random_point,
                                 translation_length)

SL2C = MatrixGroup("sl", 2, "C")
SL2R = MatrixGroup("sl", 2, "R")


def golden_section_translation_length(g, lo=-12.0, hi=12.0, tol=1e-12):
    """Independent oracle: displacement minimized over the diagonal axis."""
    g = np.asarray(g, dtype=complex)

    def phi(u):
        P = np.diag([np.exp(u), np.exp(-u)]).astype(complex)
        return dist(P, act(g, P))

    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = phi(d)
    return phi(0.5 * (a + b))


def test_act_examples():
    P = random_point(SL2C, np.random.default_rng(0))
    assert np.abs(act(np.eye(2), P) - P).max() < 1e-14
    g = np.diag([2.0, 0.5]).astype(complex)
    assert np.abs(act(g, np.eye(2, dtype=complex)) - np.diag([4.0, 0.25])).max() < 1e-14
    Q = act(g, act(np.linalg.inv(g), P))
    assert dist(P, Q) < 1e-10


def test_dist_examples():
    P = random_point(SL2C, np.random.default_rng(1))
    assert dist(P, P) < 1e-12
    assert abs(dist(np.eye(2, dtype=complex), np.diag([4.0, 0.25]).astype(complex))
               - 2.0 * np.sqrt(2.0) * np.log(2.0)) < 1e-12


def test_dist_triangle_inequality_sampled():
    rng = np.random.default_rng(2)
    for _ in range(20):
        P, Q, R = (random_point(SL2C, rng) for _ in range(3))
        slack = dist(P, Q) + dist(Q, R) - dist(P, R)
        assert slack >= -1e-10


def test_dist_g_invariance():
    rng = np.random.default_rng(3)
    for _ in range(5):
        P, Q = random_point(SL2C, rng), random_point(SL2C, rng)
        g = SL2C.exp(SL2C.random_alg(rng, 0.5))
        assert abs(dist(act(g, P), act(g, Q)) - dist(P, Q)) < 1e-9


def test_geodesic_endpoints_and_midpoint():
    rng = np.random.default_rng(4)
    P, Q = random_point(SL2C, rng), random_point(SL2C, rng)
    assert dist(geodesic(P, Q, 0.0), P) < 1e-10
    assert dist(geodesic(P, Q, 1.0), Q) < 1e-10
    M = geodesic(P, Q, 0.5)
    assert abs(dist(P, M) - dist(M, Q)) < 1e-9


def test_exp_point_examples():
    P = random_point(SL2C, np.random.default_rng(5))
    assert dist(exp_point(P, np.zeros((2, 2))), P) < 1e-12
    s = 0.37
    Q = exp_point(np.eye(2, dtype=complex), np.diag([s, -s]).astype(complex))
    assert np.abs(Q - np.diag([np.exp(2 * s), np.exp(-2 * s)])).max() < 1e-12


def test_mc_edge_examples():
    rng = np.random.default_rng(6)
    P = random_point(SL2C, rng)
    assert np.abs(mc_edge(P, P)).max() < 1e-12
    L = mc_edge(np.eye(2, dtype=complex), np.diag([4.0, 0.25]).astype(complex))
    assert np.abs(L - np.diag([np.log(2.0), -np.log(2.0)])).max() < 1e-12


def test_mc_edge_transport_identity_and_selfadjoint():
    rng = np.random.default_rng(7)
    for _ in range(5):
        P, Q = random_point(SL2C, rng), random_point(SL2C, rng)
        b = mc_edge(P, Q)
        assert dist(exp_point(P, b), Q) < 1e-9
        assert np.abs(adjoint_at(P, b) - b).max() < 1e-10


def test_mc_edge_norm_ratio_frozen():
    # ||mc_edge(P,Q)||_P = dist(P,Q) / 2 with the half-log convention
    rng = np.random.default_rng(8)
    for _ in range(5):
        P, Q = random_point(SL2R, rng), random_point(SL2R, rng)
        ratio = norm_at(P, mc_edge(P, Q)) / dist(P, Q)
        assert abs(ratio - MC_EDGE_NORM_RATIO) < 1e-10


def test_mc_edge_antisymmetry_after_transport():
    rng = np.random.default_rng(9)
    from scipy.linalg import expm
    for _ in range(5):
        P, Q = random_point(SL2C, rng), random_point(SL2C, rng)
        b = mc_edge(P, Q)
        back = mc_edge(Q, P)
        assert np.abs(ad_action(expm(b), back) + b).max() < 1e-8


def test_translation_length_identity():
    L, attained = translation_length(np.eye(2, dtype=complex))
    assert L < 1e-10 and attained


def test_translation_length_hyperbolic_vs_golden_section():
    g = np.diag([2.0, 0.5]).astype(complex)
    L, attained = translation_length(g)
    assert attained
    oracle = golden_section_translation_length(g)
    assert abs(L - oracle) < 1e-6
    assert abs(L - 2.0 * np.sqrt(2.0) * np.log(2.0)) < 1e-6


def test_translation_length_parabolic_not_attained():
    L, attained = translation_length(np.array([[1.0, 1.0], [0.0, 1.0]],
                                              dtype=complex))
    assert not attained
    assert L < 1e-3


def test_translation_length_conjugation_invariance():
    rng = np.random.default_rng(10)
    g = np.diag([1.7, 1 / 1.7]).astype(complex)
    h = np.eye(2) + 0.5 * rng.standard_normal((2, 2))
    h = h / np.sqrt(abs(np.linalg.det(h)))
    L1, _ = translation_length(g)
    L2, _ = translation_length((h @ g @ np.linalg.inv(h)).astype(complex))
    assert abs(L1 - L2) < 1e-6


def test_check_point_rejects_bad_input():
    with pytest.raises(ValueError):
        check_point(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        check_point(np.diag([2.0, 1.0]))
    check_point(np.diag([2.0, 0.5]))
