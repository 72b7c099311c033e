"""Matrix norms and spectral-radius estimation.

Operands are dense ``numpy`` arrays or any object with ``shape``, ``matvec``
and ``rmatvec`` (e.g. ``scipy.sparse.linalg.LinearOperator``).  Spectral radii
come from power iteration with Ritz extraction, cross-checked against Gelfand
samples ``||M^k||_op^{1/k}``, which are upper bounds for every ``k``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError

DENSE_EXACT_LIMIT = 2000
GELFAND_KS = (8, 16, 32)


def _operator(M):
    if isinstance(M, np.ndarray):
        if M.ndim != 2:
            raise ValueError("expected a 2-d array")
        return M.shape, (lambda x: M @ x), (lambda x: M.conj().T @ x)
    return M.shape, M.matvec, M.rmatvec


def _random_start(n, seed, project=None):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if project is not None:
        x = project(x)
    return x / np.linalg.norm(x)


def frobenius_norm(M) -> float:
    M = np.asarray(M)
    return float(np.sqrt(np.sum(np.abs(M) ** 2)))


def operator_norm(M, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest singular value, by power iteration on ``M* M``.

    Stops when the Rayleigh-quotient residual ``||M*Mv - s^2 v||`` drops below
    ``tol * s^2``.
    """
    (rows, cols), mv, rmv = _operator(M)
    if rows == 0 or cols == 0:
        return 0.0
    if isinstance(M, np.ndarray) and not np.any(M):
        return 0.0
    v = _random_start(cols, seed)
    for it in range(1, max_iter + 1):
        w = mv(v)
        theta = float(np.vdot(w, w).real)
        if theta == 0.0:
            return 0.0
        z = rmv(w)
        res = float(np.linalg.norm(z - theta * v))
        if res <= tol * theta:
            return math.sqrt(theta)
        v = z / np.linalg.norm(z)
    raise ConvergenceError(f"operator norm did not converge in {max_iter} iterations",
                           residual=res / theta, iterations=max_iter)


@dataclass
class SpectralReport:
    radius: float
    method: str
    residual: float
    gelfand: dict[int, float] = field(default_factory=dict)
    converged: bool = True
    iterations: int = 0

    @property
    def upper_bound(self) -> float:
        """Smallest Gelfand sample; each sample dominates the spectral radius."""
        return min(self.gelfand.values()) if self.gelfand else math.inf

    def to_json(self) -> str:
        d = asdict(self)
        d["gelfand"] = {str(k): v for k, v in self.gelfand.items()}
        return json.dumps(d, sort_keys=True)


class _Restricted:
    """``P M P`` for a projector ``P`` onto an invariant subspace of ``M``."""

    def __init__(self, M, project):
        self.shape, self._mv, self._rmv = _operator(M)
        self._p = project

    def matvec(self, x):
        return self._p(self._mv(self._p(x)))

    def rmatvec(self, x):
        return self._p(self._rmv(self._p(x)))


class _Power:
    def __init__(self, M, k):
        self.shape, self._mv, self._rmv = _operator(M)
        self.k = k

    def matvec(self, x):
        for _ in range(self.k):
            x = self._mv(x)
        return x

    def rmatvec(self, x):
        for _ in range(self.k):
            x = self._rmv(x)
        return x


def gelfand_samples(M, ks=GELFAND_KS, project=None, seed: int = 0) -> dict[int, float]:
    """``||M^k||_op^{1/k}`` for each ``k`` (restricted to the range of ``project`` if given)."""
    op = _Restricted(M, project) if project is not None else M
    if isinstance(op, np.ndarray):
        scale = frobenius_norm(op)
        if scale == 0:
            return {k: 0.0 for k in ks}
        base = op / scale
        out = {}
        for k in ks:
            nk = operator_norm(np.linalg.matrix_power(base, k), seed=seed)
            out[k] = scale * nk ** (1.0 / k)
        return out
    (n, _), mv, _ = _operator(op)
    scale = np.linalg.norm(mv(_random_start(n, seed))) or 1.0
    scale = max(scale, 1e-300)
    out = {}
    for k in ks:
        scaled = _Scaled(op, 1.0 / scale)
        nk = operator_norm(_Power(scaled, k), seed=seed)
        out[k] = scale * nk ** (1.0 / k)
    return out


class _Scaled:
    def __init__(self, M, c):
        self.shape, self._mv, self._rmv = _operator(M)
        self.c = c

    def matvec(self, x):
        return self.c * self._mv(x)

    def rmatvec(self, x):
        return self.c * self._rmv(x)


def _power_ritz(M, project, tol, max_iter, krylov, seed):
    """Restarted power iteration: each sweep builds a short Krylov block from the
    current iterate and extracts Ritz values, so equal-modulus eigenvalues with
    different phases do not stall the estimate."""
    (n, _), mv, _ = _operator(M)
    apply = (lambda x: project(mv(x))) if project is not None else mv
    x = _random_start(n, seed, project)
    if not np.any(x):
        return 0.0, 0.0, 0, True
    matvecs = 0
    prev = None
    R, res = math.nan, math.inf
    while matvecs < max_iter:
        m = min(krylov, n)
        V = np.zeros((n, m + 1), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        V[:, 0] = x / np.linalg.norm(x)
        breakdown = False
        hmax = 0.0
        for j in range(m):
            w = apply(V[:, j])
            matvecs += 1
            for _ in range(2):
                h = V[:, : j + 1].conj().T @ w
                H[: j + 1, j] += h
                w = w - V[:, : j + 1] @ h
            hn = float(np.linalg.norm(w))
            H[j + 1, j] = hn
            hmax = max(hmax, float(np.abs(H[: j + 2, j]).max()))
            if hn <= 1e-13 * max(hmax, 1e-300):
                m = j + 1
                breakdown = True
                break
            V[:, j + 1] = w / hn
        theta, Y = np.linalg.eig(H[:m, :m])
        top = int(np.argmax(np.abs(theta)))
        R = float(abs(theta[top]))
        res = 0.0 if breakdown else float(abs(H[m, m - 1]) * abs(Y[m - 1, top]))
        scale = max(R, hmax, 1e-300)
        if breakdown or (res <= tol * scale and prev is not None and abs(R - prev) <= tol * scale):
            return R, res, matvecs, True
        prev = R
        near = np.abs(theta) >= (1 - 1e-3) * R
        x = V[:, :m] @ Y[:, near].sum(axis=1)
        if project is not None:
            x = project(x)
        nx = np.linalg.norm(x)
        if nx == 0:
            return R, res, matvecs, True
        x = x / nx
    return R, res, matvecs, False


def spectral_radius(M, *, method: str = "auto", project: Callable | None = None,
                    tol: float = 1e-10, max_iter: int = 100_000, krylov: int = 20,
                    gelfand_ks=GELFAND_KS, seed: int = 0) -> SpectralReport:
    """Spectral radius of ``M`` (restricted to the invariant range of ``project``).

    ``method`` is ``"exact"`` (dense eigenvalues), ``"power"`` or ``"auto"``
    (exact for dense matrices up to 2000 x 2000).  Gelfand samples are always
    attached.  If power iteration does not converge the report falls back to the
    smallest Gelfand sample and is flagged ``converged=False``.
    """
    (n, n2), _, _ = _operator(M)
    if n != n2:
        raise ValueError("spectral radius needs a square operator")
    gel = gelfand_samples(M, gelfand_ks, project, seed) if gelfand_ks else {}
    dense = isinstance(M, np.ndarray)
    if method == "auto":
        method = "exact" if dense and n <= DENSE_EXACT_LIMIT else "power"
    if method == "exact":
        B = np.asarray(M, dtype=complex)
        if project is not None:
            P = np.column_stack([project(e) for e in np.eye(n, dtype=complex)])
            B = P @ B @ P
        ev = np.linalg.eigvals(B) if n else np.zeros(0)
        R = float(np.abs(ev).max()) if n else 0.0
        return SpectralReport(R, "exact small-matrix", 0.0, gel)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    R, res, its, ok = _power_ritz(M, project, tol, max_iter, krylov, seed)
    if not ok:
        return SpectralReport(min(gel.values()) if gel else R, "Gelfand", res, gel, False, its)
    return SpectralReport(R, "power iteration", res, gel, True, its)
