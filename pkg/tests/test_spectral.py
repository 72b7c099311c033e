import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decowalk.fourier import unitary_dual
from decowalk.graphwalk import complete_graph_with_loops, deviation, iter_walk_distributions
from decowalk.groups import CyclicGroup, DihedralGroup, SpecialLinearGroup, SymmetricGroup
from decowalk.linalg import frobenius_norm, gelfand_samples, operator_norm, spectral_radius
from decowalk.spectral import (RegularTransfer, brute_force_walk_sum, build_twisted, collapse_gap,
                               regular_transfer_rate, walk_hypotheses, walk_sum_block)

from conftest import graph, random_unitary

PHI = (1 + 5 ** 0.5) / 2
W = np.exp(2j * np.pi / 3)


def test_norm_examples():
    assert np.isclose(frobenius_norm(np.eye(5)), 5 ** 0.5) and np.isclose(operator_norm(np.eye(5)), 1)
    D = np.diag([3.0, -4.0])
    assert np.isclose(frobenius_norm(D), 5) and np.isclose(operator_norm(D), 4)


def test_spectral_radius_examples():
    assert spectral_radius(np.array([[0.0, 1], [0, 0]])).radius < 1e-12
    assert spectral_radius(np.array([[1.0, 1], [-1, -1]])).radius < 1e-12
    assert np.isclose(spectral_radius(np.array([[1.0, 1], [1, 0]])).radius, PHI)
    rep = spectral_radius(np.array([[1.0, 1], [1, 0]]), method="power")
    assert rep.converged and np.isclose(rep.radius, PHI)
    assert gelfand_samples(np.array([[0.0, 1], [0, 0]]), ks=(2,))[2] == 0


def test_power_matches_exact_random():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(2, 30))
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        ex = spectral_radius(M, method="exact").radius
        pw = spectral_radius(M, method="power")
        assert abs(pw.radius - ex) <= 1e-8 * ex
        assert pw.upper_bound >= ex * (1 - 1e-9)


def test_twisted_examples(k2_z2, k2_z3):
    op = build_twisted(k2_z2, unitary_dual(CyclicGroup(2))[1])
    assert np.allclose(op.U, np.diag([1, -1])) and np.allclose(op.M, [[1, 1], [-1, -1]])
    triv = build_twisted(k2_z3, unitary_dual(CyclicGroup(3))[0])
    assert np.allclose(triv.M, k2_z3.adjacency)
    op = build_twisted(k2_z3, unitary_dual(CyclicGroup(3))[1])
    assert np.allclose(op.M, [[1, 1], [W, W]])
    assert np.allclose(sorted(np.abs(np.linalg.eigvals(op.M))), [0, abs(1 + W)])


def test_walk_sum_block_small_cases():
    D3 = DihedralGroup(3)
    g = graph([[1, 1, 0], [1, 0, 1], [1, 1, 1]], [D3.element([1, 0]), D3.element([0, 1]), D3.element([2, 1])],
              directed=True)
    for rho in unitary_dual(D3):
        for i in range(3):
            assert np.allclose(walk_sum_block(g, rho, i, i, 0), rho(g.decorations[i]))
            for j in range(3):
                one = rho(g.decorations[i]) * g.adjacency[i, j] @ rho(g.decorations[j])
                assert np.allclose(walk_sum_block(g, rho, i, j, 1), one)
                for N in range(5):
                    assert frobenius_norm(walk_sum_block(g, rho, i, j, N)
                                          - brute_force_walk_sum(g, rho, i, j, N)) < 1e-9


def test_trivial_block_is_matrix_power():
    Z4 = CyclicGroup(4)
    g = graph([[1, 2, 0], [1, 0, 1], [1, 1, 1]], [Z4.element(1), Z4.element(2), Z4.element(3)], True)
    triv = unitary_dual(Z4)[0]
    Ap = np.eye(3, dtype=np.int64)
    for N in range(10):
        assert np.allclose(walk_sum_block(g, triv, 0, 2, N), Ap[0, 2])
        Ap = Ap @ g.adjacency


def test_collapse_examples(k2_z2, k2_z3):
    sign = unitary_dual(CyclicGroup(2))[1]
    assert collapse_gap(k2_z2, sign).ratio < 1e-12
    for chi in unitary_dual(CyclicGroup(3)).nontrivial:
        cg = collapse_gap(k2_z3, chi)
        assert abs(cg.ratio - 0.5) < 1e-9 and cg.certified_strict
    Z2 = CyclicGroup(2)
    bad = complete_graph_with_loops([Z2.element(1), Z2.element(1)])
    cg = collapse_gap(bad, sign)
    assert abs(cg.ratio - 1) < 1e-9 and not cg.hypotheses_hold


def test_regular_rate_examples(k2_z2, k2_z3):
    assert regular_transfer_rate(k2_z2).ratio < 1e-8
    assert abs(regular_transfer_rate(k2_z3).ratio - 0.5) < 1e-8
    G = SpecialLinearGroup(2, 3)
    g = complete_graph_with_loops([G.element([[1, 1], [0, 1]]), G.element([[1, 0], [1, 1]])])
    r = regular_transfer_rate(g)
    assert r.report.converged and r.ratio < 1


def test_regular_rate_matches_dual_max():
    D4 = DihedralGroup(4)
    g = graph([[1, 1, 0], [1, 1, 1], [0, 1, 1]], [D4.element([1, 0]), D4.element([0, 1]), D4.element([1, 1])])
    per_rep = max(collapse_gap(g, rho).ratio for rho in unitary_dual(D4).nontrivial)
    assert abs(regular_transfer_rate(g).ratio - per_rep) < 1e-8


def test_regular_complement_invariant():
    S3 = SymmetricGroup(3)
    g = graph([[1, 1, 1], [1, 0, 1], [1, 1, 0]], [S3.from_cycles((1, 2)), S3.from_cycles((1, 2, 3)), S3.identity])
    T = RegularTransfer(g)
    rng = np.random.default_rng(0)
    x = T.project(rng.standard_normal(T.shape[0]))
    y = T.matvec(x)
    assert np.linalg.norm(y - T.project(y)) <= 1e-12 * np.linalg.norm(y)
    z = rng.standard_normal(T.shape[0])
    assert np.isclose(np.vdot(z, T.matvec(x)), np.vdot(T.rmatvec(z), x))


def test_hypotheses():
    S3 = SymmetricGroup(3)
    t = S3.from_cycles((1, 2))
    h = walk_hypotheses(complete_graph_with_loops([t, S3.from_cycles((1, 2, 3))]))
    assert h.generates and h.no_constant_character and h.collapse_expected
    # two transpositions: the sign character is -1 on both
    h = walk_hypotheses(complete_graph_with_loops([t, S3.from_cycles((1, 3))]))
    assert h.generates and not h.no_constant_character
    Z3 = CyclicGroup(3)
    h = walk_hypotheses(complete_graph_with_loops([Z3.element(1), Z3.element(1)]))
    assert h.generates and not h.collapse_expected


@pytest.mark.parametrize("m", [3, 4, 5])
def test_deviation_gap_consistency(m):
    G = CyclicGroup(m)
    g = graph([[1, 1, 0], [1, 1, 1], [0, 1, 1]], [G.identity, G.element(1), G.element(1)])
    ratio = regular_transfer_rate(g).ratio
    logs = [(d.N, deviation(d).log_max_deviation) for d in iter_walk_distributions(g, 0, 0, 80)]
    N1, l1 = logs[60]
    N2, l2 = logs[80]
    assert abs((l2 - l1) / (N2 - N1) - np.log(ratio)) < 0.02


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_twist_never_increases_radius(n, seed):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = (H + H.conj().T) / 2
    U = random_unitary(rng, n)
    rA = np.abs(np.linalg.eigvalsh(A)).max()
    assert np.abs(np.linalg.eigvals(U @ A)).max() <= rA + 1e-9
