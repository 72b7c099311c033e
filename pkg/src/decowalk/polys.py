"""Polynomials over F_p: characteristic polynomials and irreducibility.

Coefficient lists are stored low degree first.  ``charpoly`` returns
``det(xI - M)``, monic of degree ``n``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PolyModP:
    coeffs: tuple[int, ...]
    p: int

    def __post_init__(self):
        if self.p < 2:
            raise DomainError("modulus must be a prime >= 2")
        c = [int(x) % self.p for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c) if c else (0,))

    @classmethod
    def from_high(cls, coeffs_high_first: Sequence[int], p: int) -> "PolyModP":
        return cls(tuple(reversed(list(coeffs_high_first))), p)

    @property
    def degree(self) -> int:
        return -1 if self.coeffs == (0,) else len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def __str__(self):
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0 and self.degree > 0:
                continue
            mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            coef = str(c) if (c != 1 or k == 0) else ""
            terms.append(f"{coef}{mono}")
        return " + ".join(terms) + f" (mod {self.p})"


# ---------------------------------------------------------------------------
# list arithmetic, low degree first


def _trim(a):
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def poly_sub(a, b, p):
    n = max(len(a), len(b))
    return _trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)])


def poly_mul(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim([c % p for c in out])


def poly_divmod(a, b, p):
    b = _trim(list(b))
    if b == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    a = [c % p for c in a]
    inv = pow(b[-1], -1, p)
    db = len(b) - 1
    q = [0] * max(len(a) - db, 1)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k] * inv % p
        if c:
            q[k - db] = c
            for i in range(db + 1):
                a[k - db + i] = (a[k - db + i] - c * b[i]) % p
    r = _trim(a[:db] if db else [0])
    return _trim(q), (r if r else [0])


def poly_mod(a, f, p):
    return poly_divmod(a, f, p)[1]


def poly_gcd(a, b, p):
    a, b = _trim([c % p for c in a]), _trim([c % p for c in b])
    while b != [0]:
        a, b = b, poly_mod(a, b, p)
    if a != [0]:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def poly_powmod(base, e, f, p):
    result = [1]
    base = poly_mod(base, f, p)
    while e:
        if e & 1:
            result = poly_mod(poly_mul(result, base, p), f, p)
        base = poly_mod(poly_mul(base, base, p), f, p)
        e >>= 1
    return result


def prime_factors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# characteristic polynomials


def berkowitz(M, p: int | None = None) -> list[int]:
    """Coefficients of ``det(xI - M)``, high degree first, without division.

    Works over Z when ``p`` is None.  Each step multiplies by the Toeplitz
    matrix built from ``1, -a, -R C, -R A C, ...`` of the next bordered minor.
    """
    A = [[int(x) for x in row] for row in M]
    n = len(A)
    red = (lambda x: x % p) if p else (lambda x: x)
    poly = [1]
    for r in range(n):
        R = A[r][:r]
        v = [A[i][r] for i in range(r)]
        t = [1, red(-A[r][r])]
        for _ in range(r):
            t.append(red(-sum(x * y for x, y in zip(R, v))))
            v = [red(sum(A[i][k] * v[k] for k in range(r))) for i in range(r)]
        poly = [red(sum(t[i - j] * poly[j] for j in range(len(poly)) if 0 <= i - j < len(t)))
                for i in range(r + 2)]
    return poly


def berkowitz_batch(M: np.ndarray, p: int) -> np.ndarray:
    """Vectorized ``berkowitz`` over a stack ``(S, n, n)``; returns ``(S, n + 1)`` high first."""
    M = np.asarray(M)
    S, n, _ = M.shape
    dtype = np.int64 if n * (p - 1) ** 2 < 2**62 else object
    M = M.astype(dtype) % p
    poly = [np.ones(S, dtype=dtype)]
    for r in range(n):
        R = M[:, r, :r]
        v = M[:, :r, r]
        Ar = M[:, :r, :r]
        t = [np.ones(S, dtype=dtype), (-M[:, r, r]) % p]
        for _ in range(r):
            t.append((-(R * v).sum(axis=1)) % p)
            v = np.einsum("sik,sk->si", Ar, v) % p
        new = []
        for i in range(r + 2):
            acc = np.zeros(S, dtype=dtype)
            for j in range(len(poly)):
                if 0 <= i - j < len(t):
                    acc = (acc + t[i - j] * poly[j]) % p
            new.append(acc)
        poly = new
    return np.stack(poly, axis=1)


def charpoly_mod_p(M, p: int) -> PolyModP:
    rows = [list(r) for r in M]
    if any(len(r) != len(rows) for r in rows):
        raise DomainError("characteristic polynomial needs a square matrix")
    return PolyModP.from_high(berkowitz(rows, p), p)


def det_mod_p(M, p: int) -> int:
    """Determinant over F_p by Gaussian elimination (p prime)."""
    a = [[int(x) % p for x in row] for row in M]
    n = len(a)
    det = 1
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c] % p
        inv = pow(a[c][c], -1, p)
        for r in range(c + 1, n):
            f = a[r][c] * inv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[c])]
    return det % p


def charpoly_interpolation(M, p: int) -> PolyModP:
    """Oracle: evaluate ``det(xI - M)`` at ``x = 0..n`` and interpolate (needs ``p > n``)."""
    n = len(M)
    if p <= n:
        raise DomainError("interpolation needs p > n distinct nodes")
    xs = list(range(n + 1))
    ys = [det_mod_p([[(x if i == j else 0) - M[i][j] for j in range(n)] for i in range(n)], p) for x in xs]
    out = [0]
    for k, xk in enumerate(xs):
        basis, denom = [1], 1
        for m, xm in enumerate(xs):
            if m != k:
                basis = poly_mul(basis, [-xm % p, 1], p)
                denom = denom * (xk - xm) % p
        scale = ys[k] * pow(denom, -1, p) % p
        out = poly_sub(out, [(-scale * c) % p for c in basis], p)
    return PolyModP(tuple(out), p)


# ---------------------------------------------------------------------------
# irreducibility


def is_irreducible_mod_p(f: PolyModP) -> bool:
    """Rabin's test: ``x^(p^d) = x mod f`` and ``gcd(x^(p^(d/q)) - x, f) = 1`` for primes ``q | d``."""
    if not f.is_monic or f.degree < 1:
        raise DomainError("Rabin test needs a monic polynomial of degree >= 1")
    p, d = f.p, f.degree
    fc = list(f.coeffs)
    x = [0, 1]
    # frob[k] = x^(p^k) mod f
    frob = [poly_mod(x, fc, p)]
    for _ in range(d):
        frob.append(poly_powmod(frob[-1], p, fc, p))
    if frob[d] != frob[0]:
        return False
    for q in prime_factors(d):
        g = poly_gcd(poly_sub(frob[d // q], x, p), fc, p)
        if len(g) > 1:
            return False
    return True


def monic_polys(degree: int, p: int):
    for tail in itertools.product(range(p), repeat=degree):
        yield PolyModP(tuple(tail) + (1,), p)


def is_irreducible_trial(f: PolyModP) -> bool:
    """Oracle: search for a monic factor of degree ``1 .. deg/2``."""
    if f.degree < 1:
        raise DomainError("need degree >= 1")
    fc = list(f.coeffs)
    inv = pow(fc[-1], -1, f.p)
    fc = [c * inv % f.p for c in fc]
    for k in range(1, f.degree // 2 + 1):
        for g in monic_polys(k, f.p):
            if poly_mod(fc, list(g.coeffs), f.p) == [0]:
                return False
    return True


def integer_cubic_reducible(coeffs_high_first: Sequence[int]) -> bool:
    """Reducibility over Q of a monic integer polynomial of degree <= 3 (rational roots only)."""
    c = [int(x) for x in coeffs_high_first]
    d = len(c) - 1
    if c[0] != 1 or d > 3:
        raise DomainError("oracle covers monic polynomials of degree <= 3")
    if d <= 1:
        return False
    const = c[-1]
    if const == 0:
        return True
    cands = set()
    for k in range(1, abs(const) + 1):
        if const % k == 0:
            cands |= {k, -k}
    return any(sum(ci * r ** (d - i) for i, ci in enumerate(c)) == 0 for r in cands)
