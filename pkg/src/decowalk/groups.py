"""Finite groups used as decoration targets and as quotients of integer matrix groups.

Every group exposes a canonical enumeration of its elements; distribution
vectors elsewhere in the package are indexed by that enumeration.  Elements
are :class:`GroupElement` values wrapping a hashable canonical form:

* cyclic ``Z_m``: residue in ``[0, m)``
* dihedral ``D_m`` (order ``2m``): pair ``(r, f)`` standing for ``rot^r * flip^f``
* direct product: tuple of factor values
* permutations: tuple of images of ``0..n-1``
* matrices over ``Z/mZ``: row-major tuple of residues

Permutation products compose as maps, ``(a*b)(x) = a(b(x))``, so that
``(1 2)*(2 3) = (1 2 3)`` in cycle notation.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, ResourceLimitError

BFS_CAP = 10**7
MAX_MODULUS = 2**31


@dataclass(frozen=True)
class GroupElement:
    group: "FiniteGroup"
    value: Hashable

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.group.mul(self, other)

    def inverse(self) -> "GroupElement":
        return self.group.inv(self)

    def __pow__(self, k: int) -> "GroupElement":
        return self.group.power(self, k)

    @property
    def index(self) -> int:
        return self.group.index_of(self.value)

    def literal(self):
        return self.group.literal(self)

    def __repr__(self):
        return f"{self.group.name}:{self.group.label(self)}"


class FiniteGroup:
    """Base class; subclasses supply the arithmetic on canonical values."""

    family = "abstract"

    # -- to be provided by subclasses -------------------------------------
    @property
    def key(self) -> tuple:
        raise NotImplementedError

    @property
    def identity_value(self) -> Hashable:
        raise NotImplementedError

    def _mul(self, a, b):
        raise NotImplementedError

    def _inv(self, a):
        raise NotImplementedError

    def _is_member(self, value) -> bool:
        raise NotImplementedError

    def _enumerate(self) -> list:
        raise NotImplementedError

    def _canonical(self, literal):
        """Convert an external literal into the canonical value (no membership check)."""
        return literal

    def literal(self, element: GroupElement):
        return element.value

    def descriptor(self) -> dict:
        raise NotImplementedError

    # -- generic machinery ------------------------------------------------
    @property
    def name(self) -> str:
        return self.family

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"

    @cached_property
    def values(self) -> list:
        vals = self._enumerate()
        if len(vals) > BFS_CAP:
            raise ResourceLimitError(f"{self.name}: enumeration exceeds {BFS_CAP} elements")
        return vals

    @cached_property
    def _index(self) -> dict:
        return {v: i for i, v in enumerate(self.values)}

    @property
    def order(self) -> int:
        return len(self.values)

    def index_of(self, value) -> int:
        try:
            return self._index[value]
        except KeyError:
            raise DomainError(f"{value!r} is not an element of {self.name}") from None

    @property
    def elements(self) -> list[GroupElement]:
        return [GroupElement(self, v) for v in self.values]

    @property
    def identity(self) -> GroupElement:
        return GroupElement(self, self.identity_value)

    def contains(self, value) -> bool:
        try:
            return self._is_member(value)
        except (TypeError, ValueError):
            return False

    def element(self, literal) -> GroupElement:
        value = self._canonical(literal)
        if not self.contains(value):
            raise DomainError(f"{literal!r} is not an element of {self.name}")
        return GroupElement(self, value)

    def coerce(self, element: GroupElement) -> GroupElement:
        """Re-home an element of an ambient or sibling group with the same value encoding."""
        if element.group == self:
            return element
        if not self.contains(element.value):
            raise DomainError(f"{element!r} does not lie in {self.name}")
        return GroupElement(self, element.value)

    def _check(self, *elements: GroupElement):
        for e in elements:
            if not isinstance(e, GroupElement) or e.group != self:
                raise DomainError(f"operand {e!r} does not belong to {self.name}")

    def mul(self, a: GroupElement, b: GroupElement) -> GroupElement:
        self._check(a, b)
        return GroupElement(self, self._mul(a.value, b.value))

    def inv(self, a: GroupElement) -> GroupElement:
        self._check(a)
        return GroupElement(self, self._inv(a.value))

    def power(self, a: GroupElement, k: int) -> GroupElement:
        self._check(a)
        base = a.value if k >= 0 else self._inv(a.value)
        result = self.identity_value
        k = abs(k)
        while k:
            if k & 1:
                result = self._mul(result, base)
            base = self._mul(base, base)
            k >>= 1
        return GroupElement(self, result)

    def product(self, elements: Iterable[GroupElement]) -> GroupElement:
        value = self.identity_value
        for e in elements:
            self._check(e)
            value = self._mul(value, e.value)
        return GroupElement(self, value)

    def label(self, element: GroupElement) -> str:
        return str(self.literal(element)).replace(" ", "")

    def right_translation(self, g: GroupElement) -> np.ndarray:
        """Index array ``perm`` with ``perm[idx(x)] = idx(x*g)``."""
        self._check(g)
        idx = self._index
        return np.fromiter((idx[self._mul(x, g.value)] for x in self.values),
                           dtype=np.int64, count=self.order)

    def left_translation(self, g: GroupElement) -> np.ndarray:
        """Index array ``perm`` with ``perm[idx(x)] = idx(g*x)``."""
        self._check(g)
        idx = self._index
        return np.fromiter((idx[self._mul(g.value, x)] for x in self.values),
                           dtype=np.int64, count=self.order)

    def inverse_indices(self) -> np.ndarray:
        idx = self._index
        return np.fromiter((idx[self._inv(x)] for x in self.values), dtype=np.int64,
                           count=self.order)


# ---------------------------------------------------------------------------
# concrete families


class CyclicGroup(FiniteGroup):
    family = "cyclic"

    def __init__(self, m: int):
        if int(m) < 1:
            raise DomainError("cyclic group needs m >= 1")
        self.m = int(m)

    @property
    def name(self):
        return f"Z{self.m}"

    @property
    def key(self):
        return ("cyclic", self.m)

    @property
    def identity_value(self):
        return 0

    def _mul(self, a, b):
        return (a + b) % self.m

    def _inv(self, a):
        return (-a) % self.m

    def _is_member(self, value):
        return isinstance(value, (int, np.integer)) and 0 <= value < self.m

    def _canonical(self, literal):
        return int(literal)

    def _enumerate(self):
        return list(range(self.m))

    def descriptor(self):
        return {"family": "cyclic", "m": self.m}


class DihedralGroup(FiniteGroup):
    """Symmetries of a regular m-gon, order 2m; ``(r, f)`` means ``rot^r flip^f``."""

    family = "dihedral"

    def __init__(self, m: int):
        if int(m) < 1:
            raise DomainError("dihedral group needs m >= 1")
        self.m = int(m)

    @property
    def name(self):
        return f"D{self.m}"

    @property
    def key(self):
        return ("dihedral", self.m)

    @property
    def identity_value(self):
        return (0, 0)

    def _mul(self, a, b):
        r1, f1 = a
        r2, f2 = b
        return ((r1 + (-r2 if f1 else r2)) % self.m, f1 ^ f2)

    def _inv(self, a):
        r, f = a
        return a if f else ((-r) % self.m, 0)

    def _is_member(self, value):
        r, f = value
        return 0 <= r < self.m and f in (0, 1)

    def _canonical(self, literal):
        r, f = literal
        return (int(r), int(f))

    def literal(self, element):
        return list(element.value)

    def label(self, element):
        r, f = element.value
        return f"r{r}" + ("s" if f else "")

    def _enumerate(self):
        return [(r, 0) for r in range(self.m)] + [(r, 1) for r in range(self.m)]

    def descriptor(self):
        return {"family": "dihedral", "m": self.m}


class DirectProduct(FiniteGroup):
    family = "product"

    def __init__(self, factors: Sequence[FiniteGroup]):
        if not factors:
            raise DomainError("direct product needs at least one factor")
        self.factors = tuple(factors)

    @property
    def name(self):
        return "x".join(f.name for f in self.factors)

    @property
    def key(self):
        return ("product",) + tuple(f.key for f in self.factors)

    @property
    def identity_value(self):
        return tuple(f.identity_value for f in self.factors)

    def _mul(self, a, b):
        return tuple(f._mul(x, y) for f, x, y in zip(self.factors, a, b))

    def _inv(self, a):
        return tuple(f._inv(x) for f, x in zip(self.factors, a))

    def _is_member(self, value):
        return len(value) == len(self.factors) and all(
            f.contains(x) for f, x in zip(self.factors, value))

    def _canonical(self, literal):
        return tuple(f._canonical(x) for f, x in zip(self.factors, literal))

    def literal(self, element):
        return [f.literal(GroupElement(f, x)) for f, x in zip(self.factors, element.value)]

    def _enumerate(self):
        return list(itertools.product(*(f.values for f in self.factors)))

    def descriptor(self):
        return {"family": "product", "factors": [f.descriptor() for f in self.factors]}


class SymmetricGroup(FiniteGroup):
    """All permutations of ``0..n-1`` in lexicographic order."""

    family = "symmetric"

    def __init__(self, n: int):
        if int(n) < 1:
            raise DomainError("symmetric group needs n >= 1")
        self.n = int(n)

    @property
    def name(self):
        return f"S{self.n}"

    @property
    def key(self):
        return ("symmetric", self.n)

    @property
    def identity_value(self):
        return tuple(range(self.n))

    def _mul(self, a, b):
        return tuple(a[i] for i in b)

    def _inv(self, a):
        out = [0] * len(a)
        for i, j in enumerate(a):
            out[j] = i
        return tuple(out)

    def _is_member(self, value):
        return len(value) == self.n and sorted(value) == list(range(self.n))

    def _canonical(self, literal):
        return tuple(int(x) for x in literal)

    def literal(self, element):
        return list(element.value)

    def _enumerate(self):
        if math.factorial(self.n) > BFS_CAP:
            raise ResourceLimitError(f"S{self.n} exceeds the enumeration cap")
        return list(itertools.permutations(range(self.n)))

    def descriptor(self):
        return {"family": "symmetric", "n": self.n}

    def from_cycles(self, *cycles: Sequence[int]) -> GroupElement:
        """Build a permutation from 1-based cycles, e.g. ``from_cycles((1, 2, 3))``."""
        img = list(range(self.n))
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                img[a - 1] = b - 1
        return self.element(img)


def integer_det(M) -> int:
    """Exact determinant of a square integer matrix (Bareiss elimination)."""
    a = [[int(x) for x in row] for row in M]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _as_rows(M) -> list[list[int]]:
    rows = [[int(x) for x in row] for row in M]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise DomainError("matrix must be square and non-empty")
    return rows


class MatrixGroup(FiniteGroup):
    """GL(n, Z/mZ): invertible n x n matrices over Z/mZ, row-major residue tuples."""

    family = "gl"

    def __init__(self, n: int, modulus: int):
        n, modulus = int(n), int(modulus)
        if n < 1 or modulus < 2:
            raise DomainError("matrix group needs n >= 1 and modulus >= 2")
        if modulus > MAX_MODULUS:
            raise DomainError(f"modulus capped at 2^31, got {modulus}")
        self.n = n
        self.modulus = modulus

    @property
    def name(self):
        return f"GL({self.n},{self.modulus})"

    @property
    def key(self):
        return ("gl", self.n, self.modulus)

    @property
    def identity_value(self):
        n = self.n
        return tuple(1 if i == j else 0 for i in range(n) for j in range(n))

    def _mul(self, a, b):
        n, m = self.n, self.modulus
        if n == 2:
            a0, a1, a2, a3 = a
            b0, b1, b2, b3 = b
            return ((a0 * b0 + a1 * b2) % m, (a0 * b1 + a1 * b3) % m,
                    (a2 * b0 + a3 * b2) % m, (a2 * b1 + a3 * b3) % m)
        return tuple(sum(a[i * n + k] * b[k * n + j] for k in range(n)) % m
                     for i in range(n) for j in range(n))

    def rows(self, value) -> list[list[int]]:
        n = self.n
        return [list(value[i * n:(i + 1) * n]) for i in range(n)]

    def det(self, value) -> int:
        return integer_det(self.rows(value)) % self.modulus

    def _inv(self, a):
        n, m = self.n, self.modulus
        rows = self.rows(a)
        det = integer_det(rows)
        if math.gcd(det, m) != 1:
            raise DomainError("matrix is not invertible modulo m")
        # adjugate = det * inverse, integral; then multiply by det^{-1} mod m
        inv = _fraction_inverse(rows)
        det_inv = pow(det % m, -1, m)
        return tuple(int(inv[i][j] * det) * det_inv % m for i in range(n) for j in range(n))

    def _is_member(self, value):
        if len(value) != self.n * self.n:
            return False
        if any(not (0 <= x < self.modulus) for x in value):
            return False
        return math.gcd(self.det(value), self.modulus) == 1

    def _canonical(self, literal):
        flat = list(itertools.chain.from_iterable(literal)) if literal and isinstance(
            literal[0], (list, tuple)) else list(literal)
        return tuple(int(x) % self.modulus for x in flat)

    def literal(self, element):
        return self.rows(element.value)

    def _enumerate(self):
        m, n = self.modulus, self.n
        if m ** (n * n) > BFS_CAP:
            raise ResourceLimitError(f"{self.name} is too large to enumerate directly")
        return [v for v in itertools.product(range(m), repeat=n * n)
                if math.gcd(self.det(v), m) == 1]

    def descriptor(self):
        return {"family": "gl", "n": self.n, "modulus": self.modulus}

    def reduce(self, M) -> GroupElement:
        rows = _as_rows(M)
        if len(rows) != self.n:
            raise DomainError(f"expected a {self.n}x{self.n} matrix")
        return self.element(rows)


def _fraction_inverse(rows):
    n = len(rows)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(rows)]
    for c in range(n):
        p = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[n:] for row in a]


class GeneratedGroup(FiniteGroup):
    """Subgroup of an ambient group generated by a list of elements, in BFS order."""

    family = "generated"

    def __init__(self, ambient: FiniteGroup, generators: Sequence[Hashable],
                 values: list | None = None, cap: int = BFS_CAP):
        self.ambient = ambient
        self.generators = tuple(generators)
        self.cap = cap
        if values is not None:
            self.__dict__["values"] = values

    @property
    def name(self):
        return f"<{len(self.generators)} gens in {self.ambient.name}>"

    @property
    def key(self):
        return ("generated", self.ambient.key, self.generators)

    @property
    def identity_value(self):
        return self.ambient.identity_value

    def _mul(self, a, b):
        return self.ambient._mul(a, b)

    def _inv(self, a):
        return self.ambient._inv(a)

    def _canonical(self, literal):
        return self.ambient._canonical(literal)

    def literal(self, element):
        return self.ambient.literal(GroupElement(self.ambient, element.value))

    def label(self, element):
        return self.ambient.label(GroupElement(self.ambient, element.value))

    def _is_member(self, value):
        return value in self._index

    def _enumerate(self):
        return bfs_closure(self.ambient, self.generators, self.cap)

    def descriptor(self):
        return {"family": "generated", "ambient": self.ambient.descriptor(),
                "generators": [self.ambient.literal(GroupElement(self.ambient, g))
                               for g in self.generators]}


class SpecialLinearGroup(GeneratedGroup):
    """SL(n, Z/mZ), enumerated by BFS from the elementary matrices E_ij(1)."""

    family = "sl"

    def __init__(self, n: int, modulus: int, cap: int = BFS_CAP):
        ambient = MatrixGroup(n, modulus)
        super().__init__(ambient, [v.value for v in elementary_matrices(ambient)], cap=cap)
        self.n = ambient.n
        self.modulus = ambient.modulus

    @property
    def name(self):
        return f"SL({self.n},{self.modulus})"

    @property
    def key(self):
        return ("sl", self.n, self.modulus)

    def _is_member(self, value):
        return self.ambient.contains(value) and self.ambient.det(value) == 1

    def _enumerate(self):
        expected = sl_order(self.n, self.modulus)
        if expected > self.cap:
            raise ResourceLimitError(f"|{self.name}| = {expected} exceeds the enumeration cap of {self.cap}")
        return super()._enumerate()

    def descriptor(self):
        return {"family": "sl", "n": self.n, "modulus": self.modulus}


def sl_order(n: int, m: int) -> int:
    """``|SL(n, Z/mZ)|``, multiplicative over prime powers ``p^e || m``."""
    out = 1
    rest = m
    q = 2
    while rest > 1:
        if q * q > rest:
            q = rest
        if rest % q == 0:
            e = 0
            while rest % q == 0:
                rest //= q
                e += 1
            base = q ** (n * (n - 1) // 2)
            for k in range(2, n + 1):
                base *= q**k - 1
            out *= base * q ** ((e - 1) * (n * n - 1))
        q += 1
    return out


def elementary_matrices(ambient: MatrixGroup, signs: Sequence[int] = (1,)) -> list[GroupElement]:
    """E_ij(s) = I + s*e_ij for i != j; for n = 2 the order is upper then lower."""
    n = ambient.n
    out = []
    for i, j in itertools.permutations(range(n), 2):
        for s in signs:
            rows = [[int(r == c) for c in range(n)] for r in range(n)]
            rows[i][j] = s
            out.append(ambient.element(rows))
    return out


def bfs_closure(group: FiniteGroup, generator_values: Sequence[Hashable], cap: int = BFS_CAP) -> list:
    """Values of the subgroup generated by ``generator_values``, in BFS discovery order.

    Starts from the identity and right-multiplies by each generator in turn, so
    the order is fully determined by the generator order.
    """
    start = group.identity_value
    seen = {start}
    order = [start]
    queue = deque([start])
    mul = group._mul
    gens = list(generator_values)
    while queue:
        x = queue.popleft()
        for s in gens:
            y = mul(x, s)
            if y not in seen:
                seen.add(y)
                order.append(y)
                if len(order) > cap:
                    raise ResourceLimitError(
                        f"generated subgroup exceeds the enumeration cap of {cap} elements")
                queue.append(y)
    return order


def enumerate_by_bfs(generators: Sequence[GroupElement], cap: int = BFS_CAP) -> GeneratedGroup:
    """Materialize the finite group generated by ``generators``."""
    if not generators:
        raise DomainError("need at least one generator")
    ambient = generators[0].group
    for g in generators:
        if g.group != ambient:
            raise DomainError("generators must share an ambient group")
    gens = [g.value for g in generators]
    return GeneratedGroup(ambient, gens, bfs_closure(ambient, gens, cap), cap=cap)


def generated_order(group: FiniteGroup, elements: Iterable[GroupElement]) -> int:
    gens = [group.coerce(e).value for e in elements]
    return len(bfs_closure(group, gens)) if gens else 1


def generates(group: FiniteGroup, elements: Iterable[GroupElement]) -> bool:
    return generated_order(group, elements) == group.order


def normal_closure(group: FiniteGroup, elements: Iterable[GroupElement]) -> set:
    """Values of the smallest normal subgroup containing ``elements``."""
    gens = {group.coerce(e).value for e in elements}
    conj_by = list(group.values)
    while True:
        sub = set(bfs_closure(group, sorted(gens, key=group.index_of)))
        extra = set()
        for g in gens:
            for c in conj_by:
                y = group._mul(group._mul(c, g), group._inv(c))
                if y not in sub:
                    extra.add(y)
        if not extra:
            return sub
        gens |= extra


@dataclass(frozen=True)
class QuotientMap:
    """Entrywise reduction of n x n integer matrices modulo ``modulus``."""

    n: int
    modulus: int

    @property
    def target(self) -> MatrixGroup:
        return MatrixGroup(self.n, self.modulus)

    def __call__(self, M) -> GroupElement:
        return reduce_mod(M, self.modulus)


def reduce_mod(M, m: int) -> GroupElement:
    rows = _as_rows(M)
    if int(m) < 2:
        raise DomainError("modulus must be >= 2")
    return MatrixGroup(len(rows), m).reduce(rows)


def group_from_descriptor(desc: dict[str, Any]) -> FiniteGroup:
    """Build a group from a config descriptor such as ``{"family": "sl", "n": 2, "modulus": 5}``."""
    try:
        family = desc["family"]
        if family == "cyclic":
            return CyclicGroup(desc["m"])
        if family == "dihedral":
            return DihedralGroup(desc["m"])
        if family == "product":
            return DirectProduct([group_from_descriptor(f) for f in desc["factors"]])
        if family in ("symmetric", "permutation"):
            full = SymmetricGroup(desc["n"])
            if desc.get("generators"):
                return enumerate_by_bfs([full.element(g) for g in desc["generators"]])
            return full
        if family == "sl":
            return SpecialLinearGroup(desc["n"], desc["modulus"])
        if family == "gl":
            return MatrixGroup(desc["n"], desc["modulus"])
        if family in ("matrix", "generated"):
            ambient = (group_from_descriptor(desc["ambient"]) if "ambient" in desc
                       else MatrixGroup(desc["n"], desc["modulus"]))
            return enumerate_by_bfs([ambient.element(g) for g in desc["generators"]])
    except KeyError as exc:
        raise DomainError(f"group descriptor {desc!r} is missing field {exc}") from None
    raise DomainError(f"unknown group family {desc.get('family')!r}")
