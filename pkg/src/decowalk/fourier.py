"""Unitary irreducible representations and the Fourier transform on finite groups.

Explicit duals are built for cyclic groups, dihedral groups, and direct
products of supported groups (irreps of a product are Kronecker products of
factor irreps).  Other groups have to go through the regular-representation
operator in :mod:`decowalk.spectral`.

Conventions::

    f_hat(rho)   = sum_g f(g) rho(g)
    F_sharp(g)   = (1/|G|) sum_rho d_rho tr(F(rho) rho(g^{-1}))
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, DomainError
from .groups import CyclicGroup, DihedralGroup, DirectProduct, FiniteGroup, GroupElement


@dataclass(eq=False)
class Representation:
    """A unitary representation given by a function on canonical element values."""

    group: FiniteGroup
    dimension: int
    func: Callable[[object], np.ndarray]
    is_trivial: bool = False
    label: str = ""

    def __call__(self, g: GroupElement) -> np.ndarray:
        return self.func(self.group.coerce(g).value)

    @cached_property
    def table(self) -> np.ndarray:
        """Array of shape ``(|G|, d, d)`` indexed by the group's canonical order."""
        return np.stack([np.asarray(self.func(v), dtype=complex) for v in self.group.values])

    @cached_property
    def character(self) -> np.ndarray:
        return np.trace(self.table, axis1=1, axis2=2)

    def __repr__(self):
        return f"Representation({self.label or '?'}, dim={self.dimension})"


@dataclass
class UnitaryDual:
    group: FiniteGroup
    reps: list[Representation]

    def __iter__(self):
        return iter(self.reps)

    def __len__(self):
        return len(self.reps)

    def __getitem__(self, i):
        return self.reps[i]

    @property
    def nontrivial(self) -> list[Representation]:
        return [r for r in self.reps if not r.is_trivial]

    def plancherel_sum(self) -> int:
        return sum(r.dimension ** 2 for r in self.reps)


def _trivial(group):
    one = np.ones((1, 1), dtype=complex)
    return Representation(group, 1, lambda v: one, True, "trivial")


_QUARTER_ROOTS = (1 + 0j, 1j, -1 + 0j, -1j)


def root_of_unity(j: int, m: int) -> complex:
    """``exp(2 pi i j / m)``, exact when it is one of 1, i, -1, -i."""
    j %= m
    if (4 * j) % m == 0:
        return _QUARTER_ROOTS[4 * j // m]
    return complex(np.exp(2j * np.pi * j / m))


def _cyclic_dual(G: CyclicGroup):
    m = G.m
    reps = []
    for k in range(m):
        def chi(v, k=k):
            return np.array([[root_of_unity(k * v, m)]])
        reps.append(Representation(G, 1, chi, k == 0, f"chi{k}"))
    return reps


def _dihedral_dual(G: DihedralGroup):
    m = G.m
    reps = []
    # one-dimensional: rot -> a, flip -> b with a^m = 1, a = a^{-1}, b^2 = 1
    rot_signs = (1, -1) if m % 2 == 0 else (1,)
    for a, b in itertools.product(rot_signs, (1, -1)):
        def chi(v, a=a, b=b):
            r, f = v
            return np.array([[complex(a ** r * b ** f)]])
        reps.append(Representation(G, 1, chi, a == 1 and b == 1, f"sign({a},{b})"))
    flip = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    for h in range(1, (m - 1) // 2 + 1):
        theta = 2 * np.pi * h / m

        def rho(v, theta=theta):
            r, f = v
            c, s = np.cos(theta * r), np.sin(theta * r)
            rot = np.array([[c, -s], [s, c]], dtype=complex)
            return rot @ flip if f else rot
        reps.append(Representation(G, 2, rho, False, f"rot{h}"))
    return reps


def _product_dual(G: DirectProduct):
    factor_duals = [unitary_dual(f).reps for f in G.factors]
    reps = []
    for combo in itertools.product(*factor_duals):
        def rho(v, combo=combo):
            out = np.ones((1, 1), dtype=complex)
            for r, x in zip(combo, v):
                out = np.kron(out, r.func(x))
            return out
        dim = int(np.prod([r.dimension for r in combo]))
        reps.append(Representation(G, dim, rho, all(r.is_trivial for r in combo),
                                   "x".join(r.label for r in combo)))
    return reps


def unitary_dual(G: FiniteGroup) -> UnitaryDual:
    """Complete list of inequivalent unitary irreps of a supported group."""
    if isinstance(G, CyclicGroup):
        reps = _cyclic_dual(G)
    elif isinstance(G, DihedralGroup):
        reps = _dihedral_dual(G)
    elif isinstance(G, DirectProduct):
        reps = _product_dual(G)
    else:
        raise CapabilityError(
            f"no explicit unitary dual for {G.name}; use the regular-representation "
            "operator (decowalk.spectral.regular_transfer_rate) instead")
    return UnitaryDual(G, reps)


def has_explicit_dual(G: FiniteGroup) -> bool:
    if isinstance(G, (CyclicGroup, DihedralGroup)):
        return True
    if isinstance(G, DirectProduct):
        return all(has_explicit_dual(f) for f in G.factors)
    return False


def fourier_transform(f, rho: Representation) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape != (rho.group.order,):
        raise DomainError("function must have one value per group element")
    return np.tensordot(f, rho.table, axes=1)


def fourier_data(f, dual: UnitaryDual) -> list[np.ndarray]:
    return [fourier_transform(f, rho) for rho in dual]


def inverse_transform(F: Sequence[np.ndarray], dual: UnitaryDual) -> np.ndarray:
    if len(F) != len(dual):
        raise DomainError("need one matrix per representation in the dual")
    out = np.zeros(dual.group.order, dtype=complex)
    for Fr, rho in zip(F, dual):
        Fr = np.asarray(Fr, dtype=complex)
        if Fr.shape != (rho.dimension, rho.dimension):
            raise DomainError(f"matrix for {rho.label} has shape {Fr.shape}, "
                              f"expected {(rho.dimension,) * 2}")
        # tr(F rho(g^-1)) = tr(F rho(g)^*) = sum_ab F_ab conj(rho(g)_ab)
        out += rho.dimension * np.einsum("ab,gab->g", Fr, rho.table.conj())
    return out / dual.group.order


@dataclass
class UniformityBound:
    epsilon: float
    pairwise_bound: float
    value_bound: float | None = None
    observed_pairwise: float | None = None
    observed_value_deviation: float | None = None

    def subset_bound(self, subset_size: int) -> float:
        """Bound on ``|sum_{g in Omega} p(g) - |Omega|/|G||`` for a subset of that size."""
        return self.pairwise_bound * subset_size


def uniformity_bound(F: Sequence[np.ndarray], dual: UnitaryDual,
                     distribution=None) -> UniformityBound:
    """Largest nontrivial operator norm and the deviation bounds it certifies.

    If ``distribution`` (a real function summing to 1) is given, the observed
    pairwise spread and the observed deviation from ``1/|G|`` are attached.
    """
    from .spectral import operator_norm

    norms = [operator_norm(np.asarray(Fr)) for Fr, rho in zip(F, dual) if not rho.is_trivial]
    eps = max(norms, default=0.0)
    out = UniformityBound(eps, 2 * eps)
    if distribution is not None:
        p = np.asarray(distribution, dtype=float)
        if abs(p.sum() - 1) > 1e-9:
            raise DomainError("distribution must sum to 1")
        out.value_bound = 2 * eps
        out.observed_pairwise = float(p.max() - p.min())
        out.observed_value_deviation = float(np.abs(p - 1 / len(p)).max())
    return out


def fourier_data_to_json(F: Sequence[np.ndarray]) -> str:
    payload = [{"dimension": int(np.shape(Fr)[0]),
                "matrix": [[float(z.real), float(z.imag)] for z in np.asarray(Fr).ravel()]}
               for Fr in F]
    return json.dumps(payload)


def fourier_data_from_json(text: str) -> list[np.ndarray]:
    out = []
    for item in json.loads(text):
        d = int(item["dimension"])
        flat = np.array([complex(re, im) for re, im in item["matrix"]])
        if flat.size != d * d:
            raise DomainError("matrix entry count does not match dimension")
        out.append(flat.reshape(d, d))
    return out
