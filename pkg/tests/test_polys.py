import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decowalk.polys import (PolyModP, berkowitz, berkowitz_batch, charpoly_interpolation, charpoly_mod_p,
                            integer_cubic_reducible, is_irreducible_mod_p, is_irreducible_trial, monic_polys,
                            poly_divmod, poly_gcd, poly_mul)


def test_charpoly_examples():
    assert charpoly_mod_p([[1, 0], [0, 1]], 5).coeffs == (1, 3, 1)
    for p in (5, 7, 101):
        assert charpoly_mod_p([[0, 1], [p - 1, 0]], p).coeffs == (1, 0, 1)
    comp = [[0, 0, 6], [1, 0, 5], [0, 1, 0]]
    assert charpoly_mod_p(comp, 7) == PolyModP((1, 2, 0, 1), 7)


def test_charpoly_small_prime():
    # p <= n: interpolation is unavailable but Berkowitz still works
    M = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]
    exact = berkowitz(M)
    assert PolyModP.from_high(exact, 2) == charpoly_mod_p(M, 2)


def test_irreducible_examples():
    assert is_irreducible_mod_p(PolyModP((1, 1, 1), 2))
    assert not is_irreducible_mod_p(PolyModP((1, 0, 1), 2))
    assert is_irreducible_mod_p(PolyModP((1, 0, 1), 3))
    quads = [f for f in monic_polys(2, 2)]
    assert [is_irreducible_trial(f) for f in quads] == [False, False, False, True]


@pytest.mark.parametrize("p", [2, 3, 5])
def test_rabin_matches_trial_division(p):
    for d in range(1, 5):
        for f in monic_polys(d, p):
            assert is_irreducible_mod_p(f) == is_irreducible_trial(f), str(f)


@pytest.mark.parametrize("p", [7, 101])
def test_berkowitz_matches_interpolation(p):
    rng = random.Random(p)
    for n in range(1, 6):
        for _ in range(100):
            M = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
            assert charpoly_mod_p(M, p) == charpoly_interpolation(M, p)


def test_batch_matches_scalar():
    rng = np.random.default_rng(0)
    M = rng.integers(0, 11, (200, 4, 4))
    B = berkowitz_batch(M, 11)
    assert all(list(B[s]) == berkowitz(M[s].tolist(), 11) for s in range(200))
    big = (2**31) - 1
    M = rng.integers(0, big, (5, 3, 3))
    B = berkowitz_batch(M, big)
    assert all([int(x) for x in B[s]] == berkowitz(M[s].tolist(), big) for s in range(5))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=5), st.lists(st.integers(0, 6), min_size=1, max_size=5))
def test_division_identity(a, b):
    p = 7
    b = b[:-1] + [b[-1] or 1]
    q, r = poly_divmod(a, b, p)
    back = poly_mul(q, b, p)
    back = [(x + (r[i] if i < len(r) else 0)) % p for i, x in enumerate(back + [0] * (len(r) - len(back)))]
    while len(back) > 1 and back[-1] == 0:
        back.pop()
    a_t = [x % p for x in a]
    while len(a_t) > 1 and a_t[-1] == 0:
        a_t.pop()
    assert back == a_t
    g = poly_gcd(a, b, p)
    assert poly_divmod(b, g, p)[1] == [0]


def test_integer_reducibility_oracle():
    assert integer_cubic_reducible([1, -2, 1])
    assert not integer_cubic_reducible([1, -3, 1])
    assert integer_cubic_reducible([1, -1, -1, 1])
    assert integer_cubic_reducible([1, 0, -2, 1])
    assert not integer_cubic_reducible([1, -1, 0, -1])


def test_mod_p_irreducible_implies_rational_irreducible():
    from decowalk.matapp import builtin_generators
    rng = random.Random(5)
    gens = builtin_generators("SL", 3).matrices
    for _ in range(300):
        M = np.eye(3, dtype=object)
        for _ in range(rng.randrange(1, 13)):
            M = M.dot(rng.choice(gens))
        exact = berkowitz(M.tolist())
        for p in (2, 3, 5, 7):
            if is_irreducible_mod_p(PolyModP.from_high(exact, p)):
                assert not integer_cubic_reducible(exact)
