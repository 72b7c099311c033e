import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decowalk.errors import DomainError, ResourceLimitError
from decowalk.groups import (CyclicGroup, DihedralGroup, DirectProduct, MatrixGroup, QuotientMap,
                             SpecialLinearGroup, SymmetricGroup, bfs_closure, enumerate_by_bfs,
                             generates, group_from_descriptor, integer_det, normal_closure, reduce_mod,
                             sl_order)

FAMILIES = [
    CyclicGroup(6), DihedralGroup(4), DihedralGroup(5), SymmetricGroup(3), SymmetricGroup(4),
    DirectProduct([CyclicGroup(2), DihedralGroup(3)]), SpecialLinearGroup(2, 3), MatrixGroup(2, 2),
]


def test_cyclic_mul():
    Z6 = CyclicGroup(6)
    assert (Z6.element(4) * Z6.element(5)).value == 3


def test_permutation_convention_pinned():
    S3 = SymmetricGroup(3)
    assert S3.from_cycles((1, 2)) * S3.from_cycles((2, 3)) == S3.from_cycles((1, 2, 3))


def test_mixed_groups_rejected():
    with pytest.raises(DomainError):
        CyclicGroup(3).element(1) * CyclicGroup(4).element(1)


@pytest.mark.parametrize("G", FAMILIES, ids=lambda G: G.name)
def test_group_axioms(G):
    e = G.identity
    for g in G.elements:
        assert g * e == g and e * g == g
        assert g * g.inverse() == e
    sample = G.elements[:12]
    for a, b, c in itertools.product(sample, repeat=3):
        assert (a * b) * c == a * (b * c)


@pytest.mark.parametrize("G", FAMILIES, ids=lambda G: G.name)
def test_translations_are_permutations(G):
    g = G.elements[-1]
    for perm in (G.right_translation(g), G.left_translation(g)):
        assert sorted(perm.tolist()) == list(range(G.order))


def test_sl2_examples():
    M = MatrixGroup(2, 3)
    gens = [M.element([[1, 1], [0, 1]]), M.element([[1, 0], [1, 1]])]
    assert enumerate_by_bfs(gens).order == 24
    M5 = MatrixGroup(2, 5)
    assert enumerate_by_bfs([M5.element([[1, 1], [0, 1]]), M5.element([[1, 0], [1, 1]])]).order == 120
    Z7 = CyclicGroup(7)
    assert enumerate_by_bfs([Z7.element(1)]).order == 7


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_sl2_order_formula(p):
    assert SpecialLinearGroup(2, p).order == p * (p * p - 1) == sl_order(2, p)


@pytest.mark.parametrize("n,m", [(2, 4), (2, 6), (2, 9), (3, 2), (3, 3)])
def test_sl_order_composite(n, m):
    assert SpecialLinearGroup(n, m).order == sl_order(n, m)


def test_bfs_order_deterministic():
    G = SpecialLinearGroup(2, 5)
    gens = [v for v in G.generators]
    assert bfs_closure(G.ambient, gens) == bfs_closure(G.ambient, gens)
    assert G.values == SpecialLinearGroup(2, 5).values


def test_enumeration_cap():
    with pytest.raises(ResourceLimitError):
        bfs_closure(CyclicGroup(1000), [1], cap=100)
    with pytest.raises(ResourceLimitError):
        SpecialLinearGroup(2, 1009).order


def test_reduce_mod_examples():
    assert reduce_mod([[1, 5], [0, 1]], 5).literal() == [[1, 0], [0, 1]]
    assert reduce_mod([[2, 3], [1, 2]], 2).literal() == [[0, 1], [1, 0]]


@pytest.mark.parametrize("m", [2, 5, 12])
def test_quotient_map_homomorphism(m):
    rng = random.Random(m)
    q = QuotientMap(2, m)
    gens = [np.array(g, dtype=object) for g in
            ([[1, 1], [0, 1]], [[1, -1], [0, 1]], [[1, 0], [1, 1]], [[1, 0], [-1, 1]])]

    def word():
        M = np.eye(2, dtype=object)
        for _ in range(rng.randrange(1, 15)):
            M = M.dot(rng.choice(gens))
        return M

    for _ in range(1000):
        A, B = word(), word()
        assert q(A.dot(B).tolist()) == q(A.tolist()) * q(B.tolist())


def test_integer_det():
    assert integer_det([[2, 3], [1, 2]]) == 1
    assert integer_det([[1, 2, 3], [4, 5, 6], [7, 8, 10]]) == -3


def test_generation_and_normal_closure():
    Z4 = CyclicGroup(4)
    assert not generates(Z4, [Z4.element(2)])
    S3 = SymmetricGroup(3)
    assert len(normal_closure(S3, [S3.from_cycles((1, 2))])) == 6
    assert len(normal_closure(S3, [S3.from_cycles((1, 2, 3))])) == 3


def test_descriptors_round_trip():
    for desc in ({"family": "cyclic", "m": 6}, {"family": "dihedral", "m": 4},
                 {"family": "sl", "n": 2, "modulus": 5}):
        G = group_from_descriptor(desc)
        assert G.descriptor() == desc
    with pytest.raises(DomainError):
        group_from_descriptor({"family": "nope"})


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 7), st.integers(0, 7), st.integers(0, 7))
def test_dihedral_associative(a, b, c):
    D = DihedralGroup(4)
    x, y, z = (D.elements[i] for i in (a, b, c))
    assert (x * y) * z == x * (y * z)
