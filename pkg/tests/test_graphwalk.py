import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from decowalk.errors import DomainError, ResourceLimitError
from decowalk.graphwalk import (DecoratedGraph, WalkSampler, complete_graph_with_loops, deviation,
                                distance_to_uniform, enumerate_walks, measured_rate, perron_data,
                                pushforward, sample_walk_uniform, validate_primitive, walk_distribution,
                                WalkDistribution)
from decowalk.groups import CyclicGroup, DihedralGroup, SymmetricGroup

from conftest import graph

PHI = (1 + 5 ** 0.5) / 2


def trivial_graph(A):
    Z1 = CyclicGroup(1)
    return graph(A, [Z1.identity] * len(A), directed=True)


def test_primitivity_examples():
    assert not validate_primitive(trivial_graph([[0, 1], [1, 0]]))
    cert = validate_primitive(trivial_graph([[1, 1], [1, 0]]))
    assert cert and cert.exponent == 2
    assert validate_primitive(trivial_graph([[1, 1], [1, 1]])).exponent == 1


def test_wielandt_bound_attained():
    # the Wielandt matrix on 4 vertices has exponent (n-1)^2 + 1 = 10
    A = np.zeros((4, 4), dtype=int)
    for i in range(3):
        A[i, i + 1] = 1
    A[3, 0] = A[3, 1] = 1
    cert = validate_primitive(trivial_graph(A))
    assert cert and cert.exponent == 10 == cert.bound


def test_perron_examples():
    pd = perron_data(trivial_graph([[1, 1], [1, 1]]))
    assert np.isclose(pd.lambda_max, 2) and np.allclose(pd.vector, 2 ** -0.5) and pd.lambda_2 < 1e-6
    pd = perron_data(trivial_graph([[1, 1], [1, 0]]))
    assert np.isclose(pd.lambda_max, PHI) and np.isclose(pd.ratio, (PHI - 1) / PHI)
    pd = perron_data(trivial_graph([[2]]))
    assert pd.lambda_max == 2 and pd.ratio == 0
    with pytest.raises(DomainError):
        perron_data(trivial_graph([[0, 1], [1, 0]]))


def test_single_vertex_point_mass():
    Z2 = CyclicGroup(2)
    g = graph([[1]], [Z2.element(1)], directed=True)
    d = walk_distribution(g, 0, 0, 3)
    assert list(d.values) == [1, 0]


def test_k2_z2_distribution(k2_z2):
    assert list(walk_distribution(k2_z2, 0, 0, 1).values) == [1, 0]
    for N in range(2, 12):
        d = walk_distribution(k2_z2, 0, 0, N)
        assert list(d.values) == [2 ** (N - 2), 2 ** (N - 2)] and d.total == 2 ** (N - 1)


def test_distance_examples():
    Z6, Z2 = CyclicGroup(6), CyclicGroup(2)
    assert distance_to_uniform(WalkDistribution(Z6, np.array([1] * 6, dtype=object), True, 0, 0, 0)) == (0, 0)
    assert distance_to_uniform(WalkDistribution(Z2, np.array([1, 0], dtype=object), True, 0, 0, 0)) == (0.5, 0.5)
    assert distance_to_uniform(WalkDistribution(Z2, np.array([3, 1], dtype=object), True, 0, 0, 0)) == (0.25, 0.25)


def test_exact_cap():
    G = CyclicGroup(600_000)
    g = complete_graph_with_loops([G.identity, G.element(1)])
    with pytest.raises(ResourceLimitError):
        walk_distribution(g, 0, 0, 2)


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    A = rng.integers(0, 3, (n, n))
    A[0, 0] = max(A[0, 0], 1)
    G = [CyclicGroup(4), DihedralGroup(3), SymmetricGroup(3)][seed % 3]
    decos = [G.elements[int(k)] for k in rng.integers(0, G.order, n)]
    return DecoratedGraph(A, tuple(decos), True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_marginal_matches_matrix_power(seed):
    g = _random_case(seed)
    Ap = np.eye(g.n, dtype=object)
    A = g.adjacency.astype(object)
    for N in range(13):
        for j in range(g.n):
            assert walk_distribution(g, 0, j, N).total == Ap[0, j]
        Ap = Ap.dot(A)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_float_matches_exact(seed):
    g = _random_case(seed)
    for N in (0, 3, 9):
        ex = walk_distribution(g, 0, g.n - 1, N)
        if ex.total == 0:
            continue
        fl = walk_distribution(g, 0, g.n - 1, N, mode="float")
        assert np.abs(ex.probabilities() - fl.probabilities()).max() < 1e-9
        assert abs(fl.log_total - np.log(float(ex.total))) < 1e-9


def test_dp_matches_enumeration():
    for seed in range(10):
        g = _random_case(seed)
        G = g.group
        for N in range(5):
            counts = Counter(G.product(g.decorations[v] for v in w).value
                             for w in enumerate_walks(g, 0, g.n - 1, N))
            d = walk_distribution(g, 0, g.n - 1, N)
            assert all(d.values[G.index_of(v)] == c for v, c in counts.items())
            assert sum(d.values) == sum(counts.values())


def test_pushforward_consistency():
    Z6, Z3 = CyclicGroup(6), CyclicGroup(3)
    g6 = graph([[1, 1, 0], [1, 0, 1], [1, 1, 1]], [Z6.element(1), Z6.element(4), Z6.element(5)], True)
    psi = lambda x: Z3.element(x.value % 3)
    g3 = g6.map_decorations(psi)
    for N in range(8):
        a = pushforward(walk_distribution(g6, 0, 2, N), psi, Z3)
        assert list(a.values) == list(walk_distribution(g3, 0, 2, N).values)


def test_measured_rate_examples(k2_z2, k2_z3):
    assert measured_rate(k2_z2, 0, 0, range(1, 15)).collapse_at == 2
    fit = measured_rate(k2_z3, 0, 0, range(5, 40))
    assert abs(np.log(fit.ratio) - np.log(0.5)) < 0.01
    Z2 = CyclicGroup(2)
    const = complete_graph_with_loops([Z2.identity, Z2.identity])
    devs = [deviation(walk_distribution(const, 0, 0, N)).max_deviation for N in range(6)]
    assert devs == [0.5] * 6
    assert measured_rate(const, 0, 0, range(1, 10)).note == "no decay"


def test_sampler_examples(k2_z2):
    rng = random.Random(0)
    s = WalkSampler(k2_z2, 2, 0, 0)
    counts = Counter(tuple(s.sample(rng)) for _ in range(10_000))
    assert set(counts) == {(0, 0, 0), (0, 1, 0)}
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3
    path = trivial_graph([[0, 1], [0, 0]])
    assert all(sample_walk_uniform(path, 0, 1, 1, k) == [0, 1] for k in range(20))
    fib = trivial_graph([[1, 1], [1, 0]])
    s = WalkSampler(fib, 3, 0, 0)
    counts = Counter(tuple(s.sample(rng)) for _ in range(9000))
    assert len(counts) == 3
    sigma = np.sqrt(9000 * (1 / 3) * (2 / 3))
    assert all(abs(c - 3000) < 3 * sigma for c in counts.values())


@pytest.mark.parametrize("seed", range(4))
def test_sampler_chi_square(seed):
    g = _random_case(seed + 100)
    N = 4
    # A[0, 0] >= 1, so closed walks at vertex 0 always exist
    walks = Counter(enumerate_walks(g, 0, 0, N))
    s = WalkSampler(g, N, 0, 0)
    rng = random.Random(seed)
    total = sum(walks.values())
    obs = Counter(tuple(s.sample(rng)) for _ in range(100_000))
    keys = sorted(walks)
    assert set(obs) <= set(keys)
    if len(keys) > 1:
        expected = [100_000 * walks[k] / total for k in keys]
        assert stats.chisquare([obs[k] for k in keys], expected).pvalue > 1e-3


def test_graph_dict_round_trip():
    D4 = DihedralGroup(4)
    g = graph([[1, 1], [0, 1]], [D4.element([1, 0]), D4.element([0, 1])], directed=False)
    assert g.is_symmetric
    back = DecoratedGraph.from_dict(g.to_dict())
    assert np.array_equal(back.adjacency, g.adjacency) and back.decorations == g.decorations
