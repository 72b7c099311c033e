"""Twisted transfer operators ``U_rho A_rho`` and their spectral collapse.

For a representation ``rho`` of dimension ``k`` on an ``n``-vertex graph,
``U = blockdiag(rho(t_1), ..., rho(t_n))`` and ``A_rho = A (x) I_k``.  The
``(i, j)`` block of ``U (A_rho U)^N`` is the sum of ``rho(gamma(w))`` over all
walks of length ``N`` from ``i`` to ``j``, counting all ``N + 1`` vertex factors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, ResourceLimitError
from .fourier import Representation
from .graphwalk import DecoratedGraph, perron_data, enumerate_walks
from .groups import FiniteGroup, bfs_closure, normal_closure
from .linalg import (SpectralReport, frobenius_norm, gelfand_samples, operator_norm,
                     spectral_radius)

__all__ = [
    "frobenius_norm", "operator_norm", "spectral_radius", "SpectralReport",
    "TwistedOperator", "build_twisted", "walk_sum_block", "brute_force_walk_sum",
    "collapse_gap", "CollapseGap", "regular_transfer_rate", "RegularTransfer",
    "RegularRate", "walk_hypotheses", "HypothesisCheck",
]

REGULAR_STATE_CAP = 10**6


@dataclass
class TwistedOperator:
    U: np.ndarray
    A_rho: np.ndarray
    n: int
    k: int

    @cached_property
    def M(self) -> np.ndarray:
        return self.U @ self.A_rho

    def block(self, X: np.ndarray, i: int, j: int) -> np.ndarray:
        k = self.k
        return X[i * k:(i + 1) * k, j * k:(j + 1) * k]


def build_twisted(graph: DecoratedGraph, rho: Representation) -> TwistedOperator:
    k = rho.dimension
    n = graph.n
    U = np.zeros((n * k, n * k), dtype=complex)
    for i, t in enumerate(graph.decorations):
        U[i * k:(i + 1) * k, i * k:(i + 1) * k] = rho(t)
    A_rho = np.kron(graph.adjacency.astype(float), np.eye(k))
    return TwistedOperator(U, A_rho, n, k)


def walk_sum_block(graph: DecoratedGraph, rho: Representation, i: int, j: int, N: int) -> np.ndarray:
    """``sum_{w in W_{N,i,j}} rho(gamma(w))`` as block ``(i, j)`` of ``U (A_rho U)^N``."""
    if N < 0:
        raise DomainError("N must be >= 0")
    op = build_twisted(graph, rho)
    k = op.k
    step = op.A_rho @ op.U
    row = op.U[i * k:(i + 1) * k, :]
    for _ in range(N):
        row = row @ step
    return row[:, j * k:(j + 1) * k]


def brute_force_walk_sum(graph: DecoratedGraph, rho: Representation, i: int, j: int, N: int) -> np.ndarray:
    """Oracle: enumerate every walk and add up ``rho`` of its product."""
    G = graph.group
    out = np.zeros((rho.dimension, rho.dimension), dtype=complex)
    for walk in enumerate_walks(graph, i, j, N):
        out += rho(G.product(graph.decorations[v] for v in walk))
    return out


@dataclass
class HypothesisCheck:
    generates: bool
    no_constant_character: bool | None
    pair_products_generate: bool
    generated_order: int
    group_order: int

    @property
    def collapse_expected(self) -> bool:
        return self.generates and bool(self.no_constant_character)

    @property
    def shrinkage_applies(self) -> bool:
        return self.collapse_expected and self.pair_products_generate


def walk_hypotheses(graph: DecoratedGraph, group: FiniteGroup | None = None) -> HypothesisCheck:
    """Decorations generate; no 1-dim rep is constant on them; and ``t_i^-1 t_j`` generate.

    A 1-dim character constant on all ``t_i`` is exactly a character trivial on
    the normal closure of ``{t_i^-1 t_j} U [Gamma, Gamma]``; one exists
    (nontrivially) iff that closure is proper.
    """
    group = group or graph.group
    ts = [group.coerce(t) for t in graph.decorations]
    order = group.order
    gen_order = len(bfs_closure(group, [t.value for t in ts]))
    generates = gen_order == order
    pairs = [a.inverse() * b for a in ts for b in ts]
    pairs_generate = len(bfs_closure(group, [p.value for p in pairs])) == order
    if not generates:
        return HypothesisCheck(False, None, pairs_generate, gen_order, order)
    commutators = [a * b * a.inverse() * b.inverse() for a in ts for b in ts]
    closure = normal_closure(group, pairs + commutators)
    return HypothesisCheck(True, len(closure) == order, pairs_generate, gen_order, order)


@dataclass
class CollapseGap:
    radius: float
    lambda_max: float
    ratio: float
    hypotheses_hold: bool | None
    certified_strict: bool
    report: SpectralReport


def collapse_gap(graph: DecoratedGraph, rho: Representation, gelfand_k: int = 32) -> CollapseGap:
    """``R(U A_rho) / lambda_max`` for one irreducible ``rho``.

    Strict collapse is expected unless ``rho`` is one-dimensional and constant
    on the decorations (given that the decorations generate).  It is certified
    by ``||M^k||^{1/k} < lambda_max`` at ``k = gelfand_k``.
    """
    pd = perron_data(graph)
    op = build_twisted(graph, rho)
    rep = spectral_radius(op.M, gelfand_ks=(8, 16, gelfand_k))
    ratio = rep.radius / pd.lambda_max
    G = rho.group
    try:
        gens = len(bfs_closure(G, [G.coerce(t).value for t in graph.decorations])) == G.order
        mats = [rho(t) for t in graph.decorations]
        constant_1d = rho.dimension == 1 and all(np.allclose(m, mats[0], atol=1e-12) for m in mats)
        hyp = gens and not constant_1d and not rho.is_trivial
    except ResourceLimitError:
        hyp = None
    certified = rep.gelfand[gelfand_k] < pd.lambda_max * (1 - 1e-12)
    if hyp and ratio >= 1 - 1e-9:
        raise AssertionError(f"collapse failed for {rho.label}: ratio {ratio}")
    return CollapseGap(rep.radius, pd.lambda_max, ratio, hyp, certified, rep)


class RegularTransfer:
    """``(Mf)(v, g) = sum_u A[u, v] f(u, g t_v^{-1})`` on functions ``V x Gamma``.

    Vectors are flattened row-major from shape ``(n, |Gamma|)``.  The subspace
    of functions with ``sum_g f(v, g) = 0`` for every ``v`` is invariant.
    """

    def __init__(self, graph: DecoratedGraph, group: FiniteGroup | None = None):
        group = group or graph.group
        n, order = graph.n, group.order
        if n * order > REGULAR_STATE_CAP:
            raise ResourceLimitError(f"state space {n}*{order} exceeds {REGULAR_STATE_CAP}")
        self.n, self.order = n, order
        self.shape = (n * order, n * order)
        self.A = graph.adjacency.astype(float)
        ts = [group.coerce(t) for t in graph.decorations]
        # forward: value at g read from g t_v^{-1}; adjoint: from g t_v
        self.fwd = [group.right_translation(t.inverse()) for t in ts]
        self.adj = [group.right_translation(t) for t in ts]
        self.dtype = complex

    def matvec(self, x):
        f = np.asarray(x).reshape(self.n, self.order)
        s = self.A.T @ f
        out = np.empty_like(s)
        for v in range(self.n):
            out[v] = s[v][self.fwd[v]]
        return out.ravel()

    def rmatvec(self, x):
        h = np.asarray(x).reshape(self.n, self.order)
        shifted = np.empty_like(h)
        for v in range(self.n):
            shifted[v] = h[v][self.adj[v]]
        return (self.A @ shifted).ravel()

    def project(self, x):
        """Orthogonal projection onto the mean-zero-in-Gamma complement."""
        f = np.asarray(x).reshape(self.n, self.order)
        return (f - f.mean(axis=1, keepdims=True)).ravel()


@dataclass
class RegularRate:
    ratio: float
    radius: float
    lambda_max: float
    report: SpectralReport


def regular_transfer_rate(graph: DecoratedGraph, group: FiniteGroup | None = None,
                          tol: float = 1e-10, seed: int = 0) -> RegularRate:
    """Largest nontrivial collapse ratio, over all irreps at once.

    Power iteration on the regular transfer operator restricted to the
    mean-zero complement, so no explicit dual is needed.
    """
    T = RegularTransfer(graph, group)
    pd = perron_data(graph)
    rep = spectral_radius(T, method="power", project=T.project, tol=tol, seed=seed,
                          krylov=min(30, T.shape[0]))
    return RegularRate(rep.radius / pd.lambda_max, rep.radius, pd.lambda_max, rep)
