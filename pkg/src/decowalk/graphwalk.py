"""Decorated graphs and the distribution of walk products.

A walk of length ``N`` visits ``N + 1`` vertices ``k_0 = i, ..., k_N = j`` along
edges ``k_s -> k_{s+1}`` (``A[u, v]`` counts parallel edges ``u -> v``) and
carries the product ``t_{k_0} t_{k_1} ... t_{k_N}`` taken left to right.
Vertex indices are 0-based throughout.
"""
from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, ResourceLimitError
from .groups import FiniteGroup, GroupElement, group_from_descriptor
from .linalg import spectral_radius

EXACT_STATE_CAP = 10**6


@dataclass(frozen=True, eq=False)
class DecoratedGraph:
    adjacency: np.ndarray
    decorations: tuple[GroupElement, ...]
    directed: bool = True

    def __post_init__(self):
        A = np.asarray(self.adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DomainError("adjacency must be a non-empty square matrix")
        if not np.issubdtype(A.dtype, np.integer):
            if not np.all(A == np.round(A)):
                raise DomainError("adjacency entries must be integers")
        A = A.astype(np.int64)
        if np.any(A < 0):
            raise DomainError("adjacency entries must be nonnegative")
        if not self.directed:
            A = np.maximum(A, A.T)
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        decos = tuple(self.decorations)
        if len(decos) != A.shape[0]:
            raise DomainError(f"need {A.shape[0]} decorations, got {len(decos)}")
        if any(d.group != decos[0].group for d in decos):
            raise DomainError("all decorations must lie in one group")
        object.__setattr__(self, "decorations", decos)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def group(self) -> FiniteGroup:
        return self.decorations[0].group

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    def redecorate(self, decorations: Sequence[GroupElement]) -> "DecoratedGraph":
        return DecoratedGraph(self.adjacency, tuple(decorations), self.directed)

    def map_decorations(self, phi: Callable[[GroupElement], GroupElement]) -> "DecoratedGraph":
        return self.redecorate([phi(t) for t in self.decorations])

    def over(self, group: FiniteGroup) -> "DecoratedGraph":
        """Same graph with decorations re-homed into ``group`` (e.g. a generated subgroup)."""
        return self.redecorate([group.coerce(t) for t in self.decorations])

    @classmethod
    def from_dict(cls, data: dict, group: FiniteGroup | None = None) -> "DecoratedGraph":
        """Parse ``{"n", "adjacency", "decorations", "group", "directed"}``."""
        if group is None:
            group = group_from_descriptor(data["group"])
        A = np.array(data["adjacency"], dtype=np.int64)
        if "n" in data and A.shape != (data["n"], data["n"]):
            raise DomainError("adjacency shape does not match n")
        decos = tuple(group.element(lit) for lit in data["decorations"])
        return cls(A, decos, bool(data.get("directed", True)))

    def to_dict(self) -> dict:
        return {"n": self.n, "adjacency": self.adjacency.tolist(),
                "decorations": [t.literal() for t in self.decorations],
                "group": self.group.descriptor(), "directed": self.directed}


def complete_graph_with_loops(decorations: Sequence[GroupElement]) -> DecoratedGraph:
    n = len(decorations)
    return DecoratedGraph(np.ones((n, n), dtype=np.int64), tuple(decorations), directed=False)


# ---------------------------------------------------------------------------
# Perron-Frobenius data


@dataclass
class PrimitivityCertificate:
    primitive: bool
    exponent: int | None
    bound: int
    witness: tuple[int, int] | None = None

    def __bool__(self):
        return self.primitive


def validate_primitive(graph: DecoratedGraph) -> PrimitivityCertificate:
    """Least ``m`` with ``A^m > 0``, searched up to Wielandt's bound ``n^2 - 2n + 2``."""
    n = graph.n
    bound = n * n - 2 * n + 2
    B = graph.adjacency > 0
    P = B.copy()
    for m in range(1, bound + 1):
        if P.all():
            return PrimitivityCertificate(True, m, bound)
        if m < bound:
            P = (P.astype(np.int64) @ B.astype(np.int64)) > 0
    zeros = np.argwhere(~P)
    return PrimitivityCertificate(False, None, bound, tuple(int(x) for x in zeros[0]))


@dataclass
class PerronData:
    lambda_max: float
    vector: np.ndarray
    lambda_2: float
    residual: float

    @property
    def ratio(self) -> float:
        return self.lambda_2 / self.lambda_max


def _perron_vector(M, tol, max_iter):
    x = np.ones(M.shape[0]) / math.sqrt(M.shape[0])
    for it in range(max_iter):
        y = M @ x
        lam = float(np.dot(x, y))
        res = float(np.linalg.norm(y - lam * x))
        if res <= tol * lam:
            return lam, x, res
        x = y / np.linalg.norm(y)
    raise ConvergenceError(f"Perron iteration did not converge in {max_iter} steps",
                           residual=res, iterations=max_iter)


def perron_data(graph: DecoratedGraph, tol: float = 1e-12, max_iter: int = 100_000) -> PerronData:
    """Perron eigenvalue, unit positive eigenvector, and ``|lambda_2|`` by deflation."""
    cert = validate_primitive(graph)
    if not cert:
        raise DomainError(f"adjacency is not primitive (entry {cert.witness} stays zero)")
    A = graph.adjacency.astype(float)
    lam, v, _ = _perron_vector(A, tol, max_iter)
    if graph.is_symmetric:
        u = v
    else:
        _, u, _ = _perron_vector(A.T, tol, max_iter)
    lam = float(v @ A @ v) if graph.is_symmetric else lam
    residual = float(np.linalg.norm(A @ v - lam * v))
    deflated = A - lam * np.outer(v, u) / float(u @ v)
    lam2 = spectral_radius(deflated, gelfand_ks=()).radius if graph.n > 1 else 0.0
    return PerronData(lam, v, lam2, residual)


# ---------------------------------------------------------------------------
# exact / floating dynamic programming


@dataclass
class WalkDistribution:
    group: FiniteGroup
    values: np.ndarray
    exact: bool
    N: int
    start: int
    end: int
    log_total: float = 0.0

    @property
    def total(self):
        if self.exact:
            return sum(self.values)
        return math.exp(self.log_total)

    def probabilities(self) -> np.ndarray:
        if self.exact:
            tot = self.total
            if tot == 0:
                raise DomainError("no walks: empty distribution")
            return np.array([Fraction(int(c), tot) for c in self.values], dtype=float)
        return np.asarray(self.values, dtype=float)

    def csv_rows(self) -> list[tuple]:
        vals = self.values if self.exact else self.probabilities()
        return [(k, self.group.label(e), v if self.exact else repr(float(v)))
                for k, (e, v) in enumerate(zip(self.group.elements, vals))]


def _transition_perms(graph: DecoratedGraph, group: FiniteGroup) -> list[np.ndarray]:
    return [group.right_translation(group.coerce(t).inverse()) for t in graph.decorations]


def iter_walk_counts(graph: DecoratedGraph, i: int, N_max: int, group: FiniteGroup | None = None,
                     mode: str = "exact") -> Iterator[tuple[int, np.ndarray, float]]:
    """Yield ``(N, c_N, log_scale)`` for ``N = 0..N_max``.

    ``c_N[v, g]`` counts walks of length ``N`` from ``i`` to ``v`` with product
    ``g``; in float mode the array is renormalized to total 1 and ``log_scale``
    carries the log of the discarded factor.
    """
    group = group or graph.group
    n, order = graph.n, group.order
    if not 0 <= i < n:
        raise DomainError(f"start vertex {i} out of range")
    if mode not in ("exact", "float"):
        raise DomainError(f"mode must be exact or float, got {mode!r}")
    if mode == "exact" and n * order > EXACT_STATE_CAP:
        raise ResourceLimitError(
            f"exact state space {n}*{order} exceeds {EXACT_STATE_CAP}; use float mode "
            "or a smaller quotient")
    perms = _transition_perms(graph, group)
    if mode == "exact":
        c = np.zeros((n, order), dtype=object)
        c[:, :] = 0
        AT = graph.adjacency.T.astype(object)
    else:
        c = np.zeros((n, order))
        AT = graph.adjacency.T.astype(float)
    c[i, group.index_of(group.coerce(graph.decorations[i]).value)] = 1
    log_scale = 0.0
    yield 0, c, log_scale
    for N in range(1, N_max + 1):
        s = AT.dot(c)
        c = np.empty_like(s)
        for v in range(n):
            c[v] = s[v][perms[v]]
        if mode == "float":
            tot = c.sum()
            if tot == 0:
                raise DomainError("walk counts vanished")
            c /= tot
            log_scale += math.log(tot)
        yield N, c, log_scale


def _slice(c, log_scale, group, N, i, j, mode):
    if mode == "exact":
        return WalkDistribution(group, c[j].copy(), True, N, i, j)
    row = c[j]
    tot = row.sum()
    if tot == 0:
        return WalkDistribution(group, row.copy(), False, N, i, j, -math.inf)
    return WalkDistribution(group, row / tot, False, N, i, j, log_scale + math.log(tot))


def walk_distribution(graph: DecoratedGraph, i: int, j: int, N: int,
                      group: FiniteGroup | None = None, mode: str = "exact") -> WalkDistribution:
    group = group or graph.group
    if not 0 <= j < graph.n:
        raise DomainError(f"end vertex {j} out of range")
    for k, c, ls in iter_walk_counts(graph, i, N, group, mode):
        if k == N:
            return _slice(c, ls, group, N, i, j, mode)
    raise DomainError("N must be >= 0")


def iter_walk_distributions(graph, i, j, N_max, group=None, mode="exact"):
    group = group or graph.group
    for N, c, ls in iter_walk_counts(graph, i, N_max, group, mode):
        yield _slice(c, ls, group, N, i, j, mode)


def pushforward(dist: WalkDistribution, phi: Callable[[GroupElement], GroupElement],
                target: FiniteGroup) -> WalkDistribution:
    out = np.zeros(target.order, dtype=object if dist.exact else float)
    if dist.exact:
        out[:] = 0
    for e, v in zip(dist.group.elements, dist.values):
        out[target.index_of(target.coerce(phi(e)).value)] += v
    return WalkDistribution(target, out, dist.exact, dist.N, dist.start, dist.end, dist.log_total)


@dataclass
class Deviation:
    max_deviation: float
    total_variation: float
    log_max_deviation: float


def deviation(dist: WalkDistribution) -> Deviation:
    """Sup and total-variation distance from uniform; exact arithmetic in exact mode."""
    order = dist.group.order
    if dist.exact:
        tot = int(dist.total)
        if tot == 0:
            raise DomainError("empty distribution")
        nums = [abs(int(c) * order - tot) for c in dist.values]
        den = tot * order
        mx = max(nums)
        log_mx = math.log(mx) - math.log(den) if mx else -math.inf
        return Deviation(float(Fraction(mx, den)), float(Fraction(sum(nums), 2 * den)), log_mx)
    p = dist.probabilities()
    if p.size == 0 or not np.isfinite(p).all():
        raise DomainError("empty distribution")
    d = np.abs(p - 1.0 / order)
    mx = float(d.max())
    return Deviation(mx, float(d.sum() / 2), math.log(mx) if mx > 0 else -math.inf)


def distance_to_uniform(dist: WalkDistribution) -> tuple[float, float]:
    d = deviation(dist)
    return d.max_deviation, d.total_variation


@dataclass
class RateFit:
    slope: float | None
    ratio: float | None
    residual: float | None
    collapse_at: int | None
    Ns: list[int] = field(default_factory=list)
    log_deviations: list[float] = field(default_factory=list)

    @property
    def note(self) -> str:
        if self.collapse_at is not None:
            return f"collapses at N = {self.collapse_at}"
        if self.slope is not None and abs(self.slope) < 1e-12:
            return "no decay"
        return f"rate {self.ratio:.6g} per step"


def fit_log_rate(Ns: Sequence[int], logs: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(Ns, dtype=float)
    y = np.asarray(logs, dtype=float)
    if len(x) < 2:
        raise DomainError("need at least two points to fit a rate")
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), resid


def measured_rate(graph: DecoratedGraph, i: int, j: int, N_range: Iterable[int],
                  group: FiniteGroup | None = None) -> RateFit:
    """Least-squares slope of ``log D_inf(N)`` over ``N_range`` from exact DP."""
    Ns = sorted(set(N_range))
    if not Ns:
        raise DomainError("empty N range")
    wanted = set(Ns)
    logs = {}
    collapse = None
    for dist in iter_walk_distributions(graph, i, j, Ns[-1], group, "exact"):
        if dist.total == 0:
            continue
        dev = deviation(dist)
        if dev.max_deviation == 0 and collapse is None:
            collapse = dist.N
        if dist.N in wanted:
            logs[dist.N] = dev.log_max_deviation
    pts = [(N, logs[N]) for N in Ns if N in logs and logs[N] > -math.inf]
    if collapse is not None and all(logs.get(N, -math.inf) == -math.inf for N in Ns if N >= collapse):
        return RateFit(None, 0.0, None, collapse, [p[0] for p in pts], [p[1] for p in pts])
    slope, resid = fit_log_rate([p[0] for p in pts], [p[1] for p in pts])
    return RateFit(slope, math.exp(slope), resid, None, [p[0] for p in pts], [p[1] for p in pts])


# ---------------------------------------------------------------------------
# uniform sampling of walks


class WalkSampler:
    """Exact uniform sampler over walks of length ``N`` (optionally with fixed ends).

    ``start`` or ``end`` may be ``None`` to leave that endpoint free, in which
    case walks are uniform over all walks of length ``N`` with the other
    constraint.  Backward counts are exact integers, so each walk has
    probability exactly ``1/|W|``.
    """

    def __init__(self, graph: DecoratedGraph, N: int, start: int | None, end: int | None):
        if N < 0:
            raise DomainError("N must be >= 0")
        self.graph, self.N, self.start, self.end = graph, N, start, end
        n = graph.n
        A = [[int(x) for x in row] for row in graph.adjacency]
        b = [[1 if (end is None or v == end) else 0 for v in range(n)]]
        for _ in range(N):
            prev = b[-1]
            b.append([sum(A[v][u] * prev[u] for u in range(n)) for v in range(n)])
        self.counts = b
        # cum[k][v]: cumulative weights A[v,u] * b[k-1][u] over u
        self.cum = [None] + [
            [list(_accumulate(A[v][u] * b[k - 1][u] for u in range(n))) for v in range(n)]
            for k in range(1, N + 1)]
        if start is None:
            self.start_cum = list(_accumulate(b[N]))
        else:
            self.start_cum = None
        if self.total == 0:
            raise DomainError("no walk of the requested length connects the endpoints")

    @property
    def total(self) -> int:
        if self.start is None:
            return self.start_cum[-1]
        return self.counts[self.N][self.start]

    def sample(self, rng: random.Random) -> list[int]:
        if self.start is None:
            v = bisect.bisect_right(self.start_cum, rng.randrange(self.start_cum[-1]))
        else:
            v = self.start
        walk = [v]
        for k in range(self.N, 0, -1):
            row = self.cum[k][v]
            v = bisect.bisect_right(row, rng.randrange(row[-1]))
            walk.append(v)
        return walk


def _accumulate(it):
    s = 0
    for x in it:
        s += x
        yield s


def sample_walk_uniform(graph: DecoratedGraph, i: int | None, j: int | None, N: int,
                        seed: int | random.Random) -> list[int]:
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return WalkSampler(graph, N, i, j).sample(rng)


def enumerate_walks(graph: DecoratedGraph, i: int, j: int, N: int) -> list[tuple[int, ...]]:
    """All walks of length ``N`` from ``i`` to ``j``, each repeated by edge multiplicity."""
    A = graph.adjacency
    out = []

    def rec(path, mult):
        if len(path) == N + 1:
            if path[-1] == j:
                out.extend([tuple(path)] * mult)
            return
        u = path[-1]
        for v in range(graph.n):
            if A[u, v]:
                rec(path + [v], mult * int(A[u, v]))

    rec([i], 1)
    return out
