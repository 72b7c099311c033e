"""Integer matrix groups reduced mod p: how often do random products have a
reducible characteristic polynomial?

A product counts as reducible at level ``P`` (a set of primes) when its
characteristic polynomial is reducible mod every prime in ``P``.  Irreducibility
mod a single prime already certifies irreducibility over Q, so the level-``P``
fraction is an upper bound for the fraction of Q-reducible products.

Words have ``N`` generator factors.  They are drawn as uniform walks with
``N - 1`` edges (``N`` vertices) on a graph whose vertex ``v`` carries generator
``v``.  The default graph is complete with loops, which gives uniform words.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DomainError
from .graphwalk import DecoratedGraph, WalkSampler
from .groups import CyclicGroup, integer_det
from .polys import berkowitz_batch, is_irreducible_mod_p, PolyModP, prime_factors

CHUNK = 1000


# ---------------------------------------------------------------------------
# generator sets


def symplectic_form(dim: int) -> np.ndarray:
    h = dim // 2
    J = np.zeros((dim, dim), dtype=np.int64)
    J[:h, h:] = np.eye(h, dtype=np.int64)
    J[h:, :h] = -np.eye(h, dtype=np.int64)
    return J


@dataclass
class IntegerMatrixGenSet:
    n: int
    matrices: list[np.ndarray]
    kind: str = "SL"
    symmetric: bool = True

    def __post_init__(self):
        self.matrices = [np.array(m, dtype=object) for m in self.matrices]
        self.validate()

    @property
    def form(self) -> np.ndarray | None:
        return symplectic_form(self.n) if self.kind == "Sp" else None

    def validate(self) -> None:
        if self.kind not in ("SL", "Sp"):
            raise DomainError(f"unknown kind {self.kind!r}")
        if not self.matrices:
            raise DomainError("empty generator set")
        for M in self.matrices:
            if M.shape != (self.n, self.n):
                raise DomainError(f"generator of shape {M.shape}, expected {(self.n, self.n)}")
            if self.kind == "SL" and integer_det(M.tolist()) != 1:
                raise DomainError(f"generator {M.tolist()} has determinant != 1")
            if self.kind == "Sp":
                J = self.form.astype(object)
                if not np.array_equal(M.T.dot(J).dot(M), J):
                    raise DomainError(f"generator {M.tolist()} does not preserve the symplectic form")
        if self.symmetric:
            keys = {self._key(M) for M in self.matrices}
            for M in self.matrices:
                if self._key(_integer_inverse(M, self.kind, self.n)) not in keys:
                    raise DomainError("generator set flagged symmetric is not closed under inverse")

    @staticmethod
    def _key(M):
        return tuple(int(x) for x in np.asarray(M).ravel())

    def reduced(self, p: int) -> np.ndarray:
        """Stack of generators mod ``p`` as ``(g, n, n)`` int64."""
        return np.array([[[int(x) % p for x in row] for row in M] for M in self.matrices], dtype=np.int64)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "n": self.n,
                           "matrices": [[[int(x) for x in row] for row in M] for M in self.matrices]})

    @classmethod
    def from_json(cls, text: str) -> "IntegerMatrixGenSet":
        data = json.loads(text)
        if isinstance(data, list):
            data = {"matrices": data}
        mats = data["matrices"]
        if not mats:
            raise DomainError("empty generator set")
        n = data.get("n", len(mats[0]))
        kind = data.get("kind", "SL")
        sym = data.get("symmetric")
        if sym is None:
            keys = {cls._key(np.array(m, dtype=object)) for m in mats}
            try:
                sym = all(cls._key(_integer_inverse(np.array(m, dtype=object), kind, n)) in keys for m in mats)
            except DomainError:
                sym = False
        return cls(n, mats, kind, bool(sym))


def _integer_inverse(M: np.ndarray, kind: str, n: int) -> np.ndarray:
    if kind == "Sp":
        J = symplectic_form(n).astype(object)
        return -J.dot(M.T).dot(J)
    # adjugate, exact since det = 1
    rows = M.tolist()
    adj = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            minor = [r[:i] + r[i + 1:] for k, r in enumerate(rows) if k != j]
            adj[i, j] = (-1) ** (i + j) * (integer_det(minor) if minor else 1)
    det = integer_det(rows)
    if det not in (1, -1):
        raise DomainError("matrix is not invertible over Z")
    return adj * det


def builtin_generators(kind: str, n: int) -> IntegerMatrixGenSet:
    """Symmetric generating sets.

    ``SL``: elementary matrices ``E_ij(+-1)``.  ``Sp`` (``n`` = matrix size, even,
    at least 4): ``[[I, S], [0, I]]`` and ``[[I, 0], [S, I]]`` with ``S`` ranging
    over ``+-E_ii`` and ``+-(E_ij + E_ji)``.
    """
    mats = []
    if kind == "SL":
        if n < 2:
            raise DomainError("SL generators need n >= 2")
        for i in range(n):
            for j in range(n):
                if i != j:
                    for s in (1, -1):
                        E = np.eye(n, dtype=np.int64)
                        E[i, j] = s
                        mats.append(E)
    elif kind == "Sp":
        if n < 4 or n % 2:
            raise DomainError("Sp generators need an even matrix size >= 4")
        h = n // 2
        syms = []
        for i in range(h):
            for j in range(i, h):
                S = np.zeros((h, h), dtype=np.int64)
                S[i, j] = S[j, i] = 1
                syms += [S, -S]
        I = np.eye(h, dtype=np.int64)
        Z = np.zeros((h, h), dtype=np.int64)
        for S in syms:
            mats.append(np.block([[I, S], [Z, I]]))
            mats.append(np.block([[I, Z], [S, I]]))
    else:
        raise DomainError(f"unsupported generator kind {kind!r}")
    return IntegerMatrixGenSet(n, mats, kind, True)


# ---------------------------------------------------------------------------
# experiment


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n <= 0:
        raise DomainError("need at least one sample")
    f = k / n
    denom = 1 + z * z / n
    centre = (f + z * z / (2 * n)) / denom
    half = z * math.sqrt(f * (1 - f) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class DecayReport:
    Ns: list[int]
    samples: list[int]
    reducible: list[int]
    fractions: list[float]
    ci_lo: list[float]
    ci_hi: list[float]
    primes: list[int]
    seed: int
    kind: str
    n: int
    slope: float | None = None
    intercept: float | None = None
    slope_se: float | None = None
    slope_ci: tuple[float, float] | None = None
    fit_Ns: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.fractions, self.fractions[1:]))

    @property
    def decay_significant(self) -> bool:
        """Upper end of the 95% slope interval below zero."""
        return self.slope_ci is not None and self.slope_ci[1] < 0

    def csv_rows(self) -> list[tuple]:
        return [(N, s, k, f"{f:.10g}", f"{lo:.10g}", f"{hi:.10g}")
                for N, s, k, f, lo, hi in zip(self.Ns, self.samples, self.reducible,
                                             self.fractions, self.ci_lo, self.ci_hi)]

    CSV_HEADER = ("N", "samples", "reducible_count", "fraction", "ci_lo", "ci_hi")

    def summary(self) -> dict:
        d = asdict(self)
        d["strictly_decreasing"] = self.strictly_decreasing
        d["decay_significant"] = self.decay_significant
        return d

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def fit_decay(Ns, counts, samples) -> tuple[float, float, float, list[int]] | None:
    """Weighted least squares of ``log(fraction)`` on ``N``.

    Weights are inverse delta-method variances ``n f / (1 - f)``.  The slope
    standard error is inflated by the reduced chi-square when that exceeds 1.
    Points with fraction 0 or 1 are left out.
    """
    x, y, w = [], [], []
    for N, k, s in zip(Ns, counts, samples):
        if 0 < k < s:
            f = k / s
            x.append(N)
            y.append(math.log(f))
            w.append(s * f / (1 - f))
    if len(x) < 2:
        return None
    x, y, w = map(np.asarray, (x, y, w))
    xm = np.sum(w * x) / w.sum()
    ym = np.sum(w * y) / w.sum()
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    dof = len(x) - 2
    scale = max(1.0, float(np.sum(w * resid**2)) / dof) if dof > 0 else 1.0
    se = math.sqrt(scale / sxx)
    return slope, intercept, se, [int(v) for v in x]


def _chunk_seed(seed: int, N: int, chunk: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(N, chunk))
    return int(ss.generate_state(2, dtype=np.uint64).astype(object).dot([1, 2**64]))


class _IrreducibleCache:
    def __init__(self, p: int):
        self.p = p
        self.table: dict[tuple, bool] = {}

    def __call__(self, poly_high: tuple) -> bool:
        hit = self.table.get(poly_high)
        if hit is None:
            hit = is_irreducible_mod_p(PolyModP.from_high(poly_high, self.p))
            self.table[poly_high] = hit
        return hit


def _walk_graph(gens: IntegerMatrixGenSet, adjacency) -> DecoratedGraph:
    k = len(gens.matrices)
    A = np.ones((k, k), dtype=np.int64) if adjacency is None else np.asarray(adjacency, dtype=np.int64)
    if A.shape != (k, k):
        raise DomainError("walk graph needs one vertex per generator")
    Z = CyclicGroup(1)
    return DecoratedGraph(A, tuple(Z.identity for _ in range(k)))


def _run_chunk(sampler, reduced, caches, N, seed, size):
    import random

    rng = random.Random(seed)
    walks = np.array([sampler.sample(rng) for _ in range(size)], dtype=np.int64)
    reducible = np.ones(size, dtype=bool)
    for (p, G), cache in zip(reduced, caches):
        prod = G[walks[:, 0]]
        big = G.shape[1] * (p - 1) ** 2 >= 2**62
        for k in range(1, N):
            step = G[walks[:, k]]
            if big:
                prod = np.einsum("sij,sjk->sik", prod.astype(object), step.astype(object)) % p
            else:
                prod = np.matmul(prod, step) % p
        polys = berkowitz_batch(prod, p)
        irr = np.array([cache(tuple(int(c) for c in row)) for row in polys], dtype=bool)
        reducible &= ~irr
    return int(reducible.sum())


def reducibility_experiment(gens: IntegerMatrixGenSet, N_values: Sequence[int], primes: Sequence[int],
                            samples: int, seed: int, adjacency=None, threads: int = 1) -> DecayReport:
    """Fraction of length-``N`` words whose charpoly is reducible mod every prime.

    Samples are split into chunks of 1000 seeded by ``(seed, N, chunk)``, so the
    result does not depend on ``threads``.
    """
    primes = [int(p) for p in primes]
    if len(set(primes)) != len(primes):
        raise DomainError("primes must be pairwise distinct")
    for p in primes:
        if p < 2 or prime_factors(p) != [p]:
            raise DomainError(f"{p} is not prime")
    if samples < 1:
        raise DomainError("need at least one sample per N")
    Ns = [int(N) for N in N_values]
    if not Ns or min(Ns) < 1:
        raise DomainError("word lengths must be >= 1")
    graph = _walk_graph(gens, adjacency)
    reduced = [(p, gens.reduced(p)) for p in primes]
    caches = [_IrreducibleCache(p) for p in primes]
    notes = []
    if not primes:
        notes.append("empty prime set: every element is vacuously reducible")
    counts = []
    for N in Ns:
        sampler = WalkSampler(graph, N - 1, None, None)
        sizes = [min(CHUNK, samples - s) for s in range(0, samples, CHUNK)]
        tasks = [(sampler, reduced, caches, N, _chunk_seed(seed, N, c), size)
                 for c, size in enumerate(sizes)]
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(lambda a: _run_chunk(*a), tasks))
        else:
            parts = [_run_chunk(*a) for a in tasks]
        counts.append(sum(parts))
    for N, k in zip(Ns, counts):
        if k == 0:
            notes.append(f"N={N}: no reducible samples; one-sided interval, excluded from fit")
    return build_report(Ns, counts, [samples] * len(Ns), primes, seed, gens.kind, gens.n, notes)


def build_report(Ns, counts, samples, primes, seed, kind, n, notes=()) -> DecayReport:
    fractions = [k / s for k, s in zip(counts, samples)]
    cis = [wilson_interval(k, s) for k, s in zip(counts, samples)]
    report = DecayReport(list(Ns), list(samples), list(counts), fractions, [c[0] for c in cis],
                         [c[1] for c in cis], list(primes), int(seed), kind, n, notes=list(notes))
    fit = fit_decay(Ns, counts, samples)
    if fit is not None:
        slope, intercept, se, used = fit
        z = stats.norm.ppf(0.975)
        report.slope, report.intercept, report.slope_se = slope, intercept, se
        report.slope_ci = (float(slope - z * se), float(slope + z * se))
        report.fit_Ns = used
    else:
        report.notes.append("fewer than two N with fraction strictly between 0 and 1; no slope fitted")
    return report


def combine_reports(reports: Sequence[DecayReport]) -> DecayReport:
    """Merge single-N reports (e.g. one selected prime per N) and refit."""
    if not reports:
        raise DomainError("nothing to combine")
    Ns, counts, samples, primes, notes = [], [], [], [], []
    for r in reports:
        Ns += r.Ns
        counts += r.reducible
        samples += r.samples
        primes += [p for p in r.primes if p not in primes]
        notes += [x for x in r.notes if not x.startswith("fewer than two")]
    first = reports[0]
    return build_report(Ns, counts, samples, primes, first.seed, first.kind, first.n, notes)


# ---------------------------------------------------------------------------
# primes and bound calculators


class PrimeWindowError(DomainError):
    pass


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(n**0.5) + 1):
        if sieve[q]:
            sieve[q * q::q] = False
    return [int(x) for x in np.flatnonzero(sieve)]


def prime_in_window(lo: float, hi: float) -> int:
    a, b = math.ceil(lo), math.floor(hi)
    for q in primes_up_to(b):
        if q >= a:
            return q
    raise PrimeWindowError(f"no prime in [{lo:.6g}, {hi:.6g}]; widen the window (larger epsilon)")


def select_prime(c: float, N: int, n: int, eps: float) -> int:
    """Smallest prime in ``[(1-eps) T, (1+eps) T]`` with ``T = c^(N/(n^2-1))``."""
    if not (c > 1 and 0 < eps < 1 and n >= 2):
        raise DomainError("need c > 1, 0 < eps < 1, n >= 2")
    T = c ** (N / (n * n - 1))
    return prime_in_window((1 - eps) * T, (1 + eps) * T)


def sl_bound(c2: float, p: int, eps: float) -> float:
    """``(c2/p)(1 + (1+eps) c2)``."""
    if not (c2 > 0 and p >= 2 and 0 < eps < 1):
        raise DomainError("need c2 > 0, p >= 2, 0 < eps < 1")
    return (c2 / p) * (1 + (1 + eps) * c2)


def primorial(k: int) -> int:
    if k < 0:
        raise DomainError("k must be >= 0")
    out, found, q = 1, 0, 2
    while found < k:
        if prime_factors(q) == [q]:
            out *= q
            found += 1
        q += 1
    return out


def select_k(N: int, n: int, c: float) -> int:
    """``round((N/m) log c / log(N/m))`` with ``m = 2n^2 + n``."""
    m = 2 * n * n + n
    if not (c > 1 and N > m):
        raise DomainError("need c > 1 and N > 2n^2 + n")
    r = N / m
    return max(1, round(r * math.log(c) / math.log(r)))


def sp_bound(c3: float, c: float, N: int, k: int, n: int) -> float:
    """``c3^k (1 + 2 c^(-N) k^(k m))`` with ``m = 2n^2 + n``, evaluated in logs."""
    if not (0 < c3 < 1 and c > 1 and k >= 1):
        raise DomainError("need 0 < c3 < 1, c > 1, k >= 1")
    m = 2 * n * n + n
    log_tail = math.log(2) - N * math.log(c) + k * m * math.log(k)
    log_val = k * math.log(c3) + (log_tail if log_tail > 30 else math.log1p(math.exp(log_tail)))
    return math.exp(log_val) if log_val < 700 else math.inf


def predicted_bounds(kind: str, n: int, Ns: Sequence[int], c: float, eps: float = 0.1,
                     c2: float | None = None, c3: float | None = None) -> list[dict]:
    """Bound values per ``N``; analysis aids with user-supplied constants, not certified."""
    rows = []
    for N in Ns:
        row: dict = {"N": int(N)}
        if kind == "SL":
            row["rate_bound"] = c ** (-N / (n * n - 1))
            if c2 is not None:
                try:
                    p = select_prime(c, N, n, eps)
                    row["p_N"] = p
                    row["sl_bound"] = sl_bound(c2, p, eps)
                except PrimeWindowError:
                    row["p_N"] = None
        elif kind == "Sp":
            half = n // 2
            if c3 is not None:
                try:
                    k = select_k(N, half, c)
                    row.update(k=k, q_k=primorial(k), sp_bound=sp_bound(c3, c, N, k, half))
                except DomainError:
                    row["k"] = None
        rows.append(row)
    return rows
