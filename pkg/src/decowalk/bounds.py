"""Effective contraction bounds: Kazhdan-type constants on finite groups, the
shrinkage function ``g(lambda, d)``, and certified decay of walk distributions.

Normalize the adjacency matrix to spectral radius 1.  ``lambda`` is the
second-largest eigenvalue modulus and ``d`` bounds how much ``U`` can keep a
vector inside the top eigenspace.  Then ``||(UA)^2 v|| <= g ||v||``, hence
``||(UA)^k||_op <= g^{floor(k/2)}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import DomainError
from .fourier import Representation
from .graphwalk import DecoratedGraph, deviation, iter_walk_distributions, perron_data
from .groups import FiniteGroup, GroupElement, bfs_closure
from .linalg import operator_norm

DENSE_GROUP_LIMIT = 3000
CAYLEY_GROUP_CAP = 10**5


# ---------------------------------------------------------------------------
# Kazhdan-type constants


@dataclass
class KazhdanEstimate:
    generators: list
    lambda1: float
    epsilon: float
    pair_products: bool
    group_order: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


class SubgroupGenerationError(DomainError):
    def __init__(self, message, subgroup_order, group_order):
        super().__init__(message)
        self.subgroup_order = subgroup_order
        self.index = group_order // subgroup_order


def _translation_matrix(G: FiniteGroup, values: Sequence) -> sp.csr_matrix:
    """Sum over s of the right-translation operators f -> f(. s)."""
    order = G.order
    rows, cols = [], []
    for s in values:
        perm = G.right_translation(GroupElement(G, s))
        rows.append(np.arange(order))
        cols.append(perm)
    data = np.ones(order * len(values))
    return sp.csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(order, order))


def _check_generates(G, values, what):
    sub = bfs_closure(G, list(values))
    if len(sub) != G.order:
        listing = ""
        if len(sub) <= 24:
            listing = ": {" + ", ".join(G.label(GroupElement(G, v)) for v in sub) + "}"
        raise SubgroupGenerationError(
            f"{what} generates a proper subgroup of order {len(sub)} "
            f"(index {G.order // len(sub)}) in {G.name}{listing}", len(sub), G.order)


def cayley_gap(G: FiniteGroup, S: Sequence[GroupElement], _pair_products: bool = False) -> KazhdanEstimate:
    """Laplacian gap of the Cayley graph and the displacement bound it certifies.

    ``lambda1`` is the smallest eigenvalue of ``|S| I - sum_s R(s)`` on functions
    orthogonal to constants.  Since ``sum_s ||rho(s)v - v||^2 = 2 <Delta v, v>``
    for every unitary rep, any rep without invariant vectors moves each unit
    vector by at least ``sqrt(2 lambda1 / |S|)`` under some ``s``.
    """
    values = [G.coerce(s).value for s in S]
    if not values:
        raise DomainError("generating set is empty")
    if G.order > CAYLEY_GROUP_CAP:
        raise DomainError(f"|G| = {G.order} exceeds the Cayley-gap cap {CAYLEY_GROUP_CAP}")
    vset = set(values)
    if any(G._inv(v) not in vset for v in values):
        raise DomainError("generating set must be closed under inverses")
    _check_generates(G, values, "S")
    size = len(values)
    K = _translation_matrix(G, values)
    order = G.order
    if order == 1:
        lam1 = 0.0
    elif order <= DENSE_GROUP_LIMIT:
        ev = np.linalg.eigvalsh(size * np.eye(order) - K.toarray())
        lam1 = float(ev[1])
    else:
        # push the constant eigenvector below the rest, then take the top of K
        shift = 2 * size + 1

        def mv(x):
            return K @ x - shift * x.mean()

        op = LinearOperator((order, order), matvec=mv, dtype=float)
        mu = eigsh(op, k=1, which="LA", tol=1e-12, return_eigenvectors=False)[0]
        lam1 = float(size - mu)
    lam1 = max(lam1, 0.0)
    eps = min(math.sqrt(2 * lam1 / size), 2.0)
    gens = [G.literal(GroupElement(G, v)) for v in values]
    return KazhdanEstimate(gens, lam1, eps, _pair_products, order)


@dataclass
class TPrimeEstimate:
    epsilon1: float
    separation: float
    kazhdan: KazhdanEstimate


def pair_products(G: FiniteGroup, S: Sequence[GroupElement]) -> list[GroupElement]:
    """Distinct elements ``s^-1 s'`` for ``s, s'`` in ``S``, in first-seen order."""
    seen, out = set(), []
    for a in S:
        for b in S:
            p = G.coerce(a).inverse() * G.coerce(b)
            if p.value not in seen:
                seen.add(p.value)
                out.append(p)
    return out


def tprime_epsilon(G: FiniteGroup, S: Sequence[GroupElement]) -> TPrimeEstimate:
    """Constant ``eps1`` from the Cayley graph of ``S^-1 S``.

    For every rep without ``S^-1 S``-invariant vectors and unit ``v, w`` some
    ``s`` has ``||rho(s) v - w|| >= eps1 / 2``.  Refuses when ``S^-1 S`` does not
    generate: irreps trivial on that subgroup would break the guarantee.
    """
    T = pair_products(G, S)
    try:
        _check_generates(G, [t.value for t in T], "S^-1 S")
    except SubgroupGenerationError as exc:
        raise SubgroupGenerationError(
            f"{exc}; representations trivial on this subgroup (which has index at most "
            "two when S is symmetric) are not separated", exc.subgroup_order, G.order) from None
    est = cayley_gap(G, T, _pair_products=True)
    return TPrimeEstimate(est.epsilon, est.epsilon / 2, est)


# ---------------------------------------------------------------------------
# compression of the top eigenspace


LAMBDA_ZERO_TOL = 1e-12


@dataclass
class SymmetricSpectrum:
    lambda_max: float
    ratio: float
    vector: np.ndarray


def _perron_weights(graph: DecoratedGraph) -> tuple[np.ndarray, SymmetricSpectrum]:
    """Perron weights ``x_i^2`` and ``lambda`` from a dense symmetric eigensolve.

    ``g`` jumps at ``lambda = 0`` (the small-lambda branch tends to
    ``sqrt((1 + d^2)/2)``, not ``d``), so ratios at roundoff level are snapped to 0.
    """
    if not graph.is_symmetric:
        raise DomainError("contraction bounds need a symmetric (undirected) adjacency matrix")
    perron_data(graph)  # primitivity and Perron checks
    ev, vecs = np.linalg.eigh(graph.adjacency.astype(float))
    lam_max = float(ev[-1])
    x = np.abs(vecs[:, -1])
    rest = np.abs(ev[:-1])
    ratio = float(rest.max()) / lam_max if rest.size else 0.0
    if ratio < LAMBDA_ZERO_TOL:
        ratio = 0.0
    return x ** 2, SymmetricSpectrum(lam_max, ratio, x)


class RegularCompression:
    """``f -> sum_i w_i f(. t_i)`` restricted to mean-zero functions on the group."""

    def __init__(self, G: FiniteGroup, weights, decorations):
        self.order = G.order
        self.shape = (G.order, G.order)
        self.dtype = complex
        self.terms = [(w, G.right_translation(G.coerce(t)), G.right_translation(G.coerce(t).inverse()))
                      for w, t in zip(weights, decorations)]

    def _p(self, x):
        return x - x.mean()

    def matvec(self, x):
        x = self._p(np.asarray(x))
        return self._p(sum(w * x[f] for w, f, _ in self.terms))

    def rmatvec(self, x):
        x = self._p(np.asarray(x))
        return self._p(sum(w * x[b] for w, _, b in self.terms))

    def dense(self) -> np.ndarray:
        return np.column_stack([self.matvec(e) for e in np.eye(self.order)])


def compression_d(graph: DecoratedGraph, rho: Representation | None = None,
                  group: FiniteGroup | None = None) -> float:
    """``d = ||sum_i x_i^2 rho(t_i)||_op`` with ``x`` the unit Perron vector.

    Without ``rho``, the maximum over all nontrivial irreps, computed on the
    regular representation restricted to mean-zero functions.
    """
    w, _ = _perron_weights(graph)
    if rho is not None:
        B = sum(wi * rho(t) for wi, t in zip(w, graph.decorations))
        return operator_norm(np.asarray(B))
    G = group or graph.group
    if G.order == 1:
        return 0.0
    op = RegularCompression(G, w, graph.decorations)
    return operator_norm(op.dense() if G.order <= DENSE_GROUP_LIMIT else op)


def d_from_kazhdan(graph: DecoratedGraph, epsilon1: float) -> float:
    """``1 - x_min^2 eps1^2 / 8``, valid for all unit pairs (uses the smallest Perron weight)."""
    if not 0 < epsilon1 <= 2:
        raise DomainError("epsilon1 must lie in (0, 2]")
    w, _ = _perron_weights(graph)
    return 1 - float(w.min()) * epsilon1 ** 2 / 8


# ---------------------------------------------------------------------------
# shrinkage


def h_value(lam: float, d: float, alpha: float) -> float:
    return 1 - (1 - lam**2) * (1 - d**2) + lam**2 * alpha**2 + 2 * (1 - lam**2) * d * lam * alpha


@dataclass
class ShrinkBound:
    lam: float
    d: float
    g: float
    alpha0: float | None = None
    branch_small: float | None = None
    branch_large: float | None = None
    h_residual: float | None = None
    uncorrected_alpha0: float | None = None
    uncorrected_branch_large: float | None = None

    def schedule(self, k: int) -> float:
        return self.g ** (k // 2)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def shrink_bound(lam: float, d: float) -> ShrinkBound:
    """``g(lambda, d) < 1`` with ``||(UA)^2|| <= g`` for normalized Hermitian ``A``.

    Split ``v = x + y`` (top eigenspace and complement) and put
    ``alpha = ||y|| / ||x||``.  For ``alpha <= alpha0`` the ratio
    ``||AUAv||^2 / ||v||^2`` is at most ``1 - (1-lambda^2)(1-d^2)/2``; beyond
    ``alpha0``, ``||Av||^2 / ||v||^2 <= (1 + lambda^2 alpha0^2) / (1 + alpha0^2)``.
    ``alpha0`` is the positive root of
    ``lambda^2 a^2 + 2(1-lambda^2) d lambda a - (1-lambda^2)(1-d^2)/2 = 0``.
    ``g`` is the larger branch, since it must hold for every ``alpha``.
    """
    if not (0 <= lam < 1 and 0 <= d < 1):
        raise DomainError(f"need 0 <= lambda < 1 and 0 <= d < 1, got ({lam}, {d})")
    if lam == 0:
        return ShrinkBound(lam, d, d)
    one_l = 1 - lam**2
    root = math.sqrt(d**2 + (1 - d**2) / (2 * one_l))
    alpha0 = (one_l / lam) * (root - d)
    target = 1 - one_l * (1 - d**2) / 2
    small = math.sqrt(target)
    large = math.sqrt((1 + lam**2 * alpha0**2) / (1 + alpha0**2))
    uncorrected_alpha0 = (one_l / lam) * root
    uncorrected_large = math.sqrt((1 + uncorrected_alpha0 * lam) / (1 + uncorrected_alpha0))
    return ShrinkBound(lam, d, max(small, large), alpha0, small, large,
                       h_value(lam, d, alpha0) - target, uncorrected_alpha0, uncorrected_large)


# ---------------------------------------------------------------------------
# certified decay


@dataclass
class EffectiveRate:
    lam: float
    d: float
    d_source: str
    lambda_max: float
    shrink: ShrinkBound | None
    note: str = ""

    @property
    def g(self) -> float | None:
        return self.shrink.g if self.shrink else None

    @property
    def certified(self) -> bool:
        return self.shrink is not None

    def schedule(self, k: int) -> float | None:
        return self.shrink.schedule(k) if self.shrink else None

    def log_deviation_bound(self, N: int, walk_count: int) -> float:
        """``log(2 g^{floor(N/2)} lambda_max^N / |W_N|)``."""
        if not self.shrink:
            return math.inf
        if walk_count <= 0:
            raise DomainError("no walks of this length")
        g = self.shrink.g
        if g == 0 and N >= 2:
            return -math.inf
        lg = (N // 2) * math.log(g) if N >= 2 else 0.0
        return math.log(2) + lg + N * math.log(self.lambda_max) - math.log(walk_count)

    def deviation_bound(self, N: int, walk_count: int) -> float:
        return math.exp(self.log_deviation_bound(N, walk_count))


def effective_rate(graph: DecoratedGraph, *, rho: Representation | None = None,
                   group: FiniteGroup | None = None, epsilon1: float | None = None) -> EffectiveRate:
    """Shrinkage certificate for the walk distribution on ``graph``.

    ``d`` comes from ``epsilon1`` when supplied, else exactly from ``rho``, else
    from the regular representation (all nontrivial irreps at once).
    """
    w, pd = _perron_weights(graph)
    lam = pd.ratio
    if epsilon1 is not None:
        d, source = d_from_kazhdan(graph, epsilon1), "kazhdan"
    elif rho is not None:
        d, source = compression_d(graph, rho), "representation"
    else:
        d, source = compression_d(graph, group=group), "regular"
    if d >= 1 - 1e-12:
        return EffectiveRate(lam, d, source, pd.lambda_max, None,
                             "d = 1: some nontrivial irrep has a vector fixed by all t_i^-1 t_j; "
                             "no certificate")
    if lam >= 1:
        return EffectiveRate(lam, d, source, pd.lambda_max, None, "graph has no spectral gap")
    return EffectiveRate(lam, d, source, pd.lambda_max, shrink_bound(lam, d))


@dataclass
class ScheduleRow:
    N: int
    bound: float
    observed: float
    log_bound: float
    log_observed: float


def effective_rate_table(graph: DecoratedGraph, i: int, j: int, N_max: int,
                         rate: EffectiveRate, group: FiniteGroup | None = None) -> list[ScheduleRow]:
    """Certified deviation bound next to the exact DP deviation for ``N = 0..N_max``."""
    rows = []
    for dist in iter_walk_distributions(graph, i, j, N_max, group, "exact"):
        W = int(dist.total)
        if W == 0:
            continue
        dev = deviation(dist)
        lb = rate.log_deviation_bound(dist.N, W)
        rows.append(ScheduleRow(dist.N, math.exp(lb) if lb < math.inf else math.inf,
                                dev.max_deviation, lb, dev.log_max_deviation))
    return rows
