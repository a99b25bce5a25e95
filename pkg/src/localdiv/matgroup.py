"""2x2 matrices over Z/p^nZ and the finite groups they generate.

Points of (Z/p^nZ)^2 are written in the fixed standard basis e1, e2; nothing
in this module changes basis on its own.  Conjugation lives in
``localdiv.structure``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import gcd
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceeded, ModulusMismatch, NonInvertibleGenerator
from .modring import ModMatrix, Modulus, ResidueInt, kernel, valuation

DEFAULT_CAP = 10**6

Entries = tuple[int, int, int, int]


def _mul(x: Entries, y: Entries, q: int) -> Entries:
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % q, (a * f + b * h) % q, (c * e + d * g) % q, (c * f + d * h) % q)


@dataclass(frozen=True)
class TorsionPoint:
    x: int
    y: int
    modulus: Modulus

    def __post_init__(self):
        q = self.modulus.value
        object.__setattr__(self, "x", int(self.x) % q)
        object.__setattr__(self, "y", int(self.y) % q)

    @classmethod
    def zero(cls, modulus: Modulus) -> "TorsionPoint":
        return cls(0, 0, modulus)

    def _check(self, other: "TorsionPoint"):
        if other.modulus != self.modulus:
            raise ModulusMismatch("points live in different modules")

    def __add__(self, other: "TorsionPoint") -> "TorsionPoint":
        self._check(other)
        return TorsionPoint(self.x + other.x, self.y + other.y, self.modulus)

    def __sub__(self, other: "TorsionPoint") -> "TorsionPoint":
        self._check(other)
        return TorsionPoint(self.x - other.x, self.y - other.y, self.modulus)

    def __neg__(self) -> "TorsionPoint":
        return TorsionPoint(-self.x, -self.y, self.modulus)

    def __rmul__(self, k: int) -> "TorsionPoint":
        k = int(k)
        return TorsionPoint(k * self.x, k * self.y, self.modulus)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def coords(self) -> tuple[int, int]:
        return (self.x, self.y)

    def exact_order(self) -> int:
        m = self.modulus
        v = min(m.val(self.x), m.val(self.y))
        return m.p ** (m.n - v)

    def __iter__(self):
        return iter((self.x, self.y))


@dataclass(frozen=True)
class Mat2:
    """[[a11, a12], [a21, a22]] over Z/p^nZ."""

    a11: int
    a12: int
    a21: int
    a22: int
    modulus: Modulus

    def __post_init__(self):
        q = self.modulus.value
        for name in ("a11", "a12", "a21", "a22"):
            object.__setattr__(self, name, int(getattr(self, name)) % q)

    @classmethod
    def from_rows(cls, rows, modulus: Modulus) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d), modulus)

    @classmethod
    def from_entries(cls, entries: Sequence[int], modulus: Modulus) -> "Mat2":
        a, b, c, d = entries
        return cls(int(a), int(b), int(c), int(d), modulus)

    @classmethod
    def identity(cls, modulus: Modulus) -> "Mat2":
        return cls(1, 0, 0, 1, modulus)

    @classmethod
    def diag(cls, x: int, y: int, modulus: Modulus) -> "Mat2":
        return cls(x, 0, 0, y, modulus)

    @property
    def entries(self) -> Entries:
        return (self.a11, self.a12, self.a21, self.a22)

    def rows(self) -> list[list[int]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]

    def entry(self, i: int, j: int) -> ResidueInt:
        return ResidueInt(self.entries[2 * (i - 1) + (j - 1)], self.modulus)

    def det(self) -> int:
        return (self.a11 * self.a22 - self.a12 * self.a21) % self.modulus.value

    def is_invertible(self) -> bool:
        return self.det() % self.modulus.p != 0

    def inverse(self) -> "Mat2":
        if not self.is_invertible():
            raise NonInvertibleGenerator(f"{self.rows()} is not invertible mod {self.modulus.value}")
        di = pow(self.det(), -1, self.modulus.value)
        return Mat2(di * self.a22, -di * self.a12, -di * self.a21, di * self.a11, self.modulus)

    def __matmul__(self, other):
        if isinstance(other, Mat2):
            if other.modulus != self.modulus:
                raise ModulusMismatch("matrix moduli differ")
            return Mat2(*_mul(self.entries, other.entries, self.modulus.value), self.modulus)
        if isinstance(other, TorsionPoint):
            if other.modulus != self.modulus:
                raise ModulusMismatch("matrix and point moduli differ")
            return TorsionPoint(
                self.a11 * other.x + self.a12 * other.y,
                self.a21 * other.x + self.a22 * other.y,
                self.modulus,
            )
        return NotImplemented

    def __pow__(self, k: int) -> "Mat2":
        if k < 0:
            return self.inverse() ** (-k)
        q = self.modulus.value
        out, base = (1, 0, 0, 1), self.entries
        while k:
            if k & 1:
                out = _mul(out, base, q)
            base = _mul(base, base, q)
            k >>= 1
        return Mat2(*out, self.modulus)

    def minus_identity(self) -> "Mat2":
        return Mat2(self.a11 - 1, self.a12, self.a21, self.a22 - 1, self.modulus)

    def reduce(self, level: int) -> "Mat2":
        return Mat2(*self.entries, self.modulus.reduced(level))

    def to_modmatrix(self) -> ModMatrix:
        return ModMatrix(self.modulus, self.rows())

    def is_identity(self) -> bool:
        return self.entries == (1, 0, 0, 1)

    def __repr__(self):
        return f"Mat2({self.rows()} mod {self.modulus.value})"


class MatrixGroup:
    """A finite subgroup of GL_2(Z/p^nZ) closed from an ordered generator list.

    Elements are kept in breadth-first discovery order; ``word(sigma)`` is the
    shortlex-least word over generator indices that evaluates to sigma.
    ``right[i, k]`` is the index of elements[k] @ generators[i].
    """

    def __init__(self, modulus: Modulus, generators, elements, parent, via, right):
        self.modulus = modulus
        self.generators: tuple[Mat2, ...] = tuple(generators)
        self._entries: list[Entries] = elements
        self._index = {e: i for i, e in enumerate(elements)}
        self._parent = parent
        self._via = via
        self.right = right
        self.array = np.array(elements, dtype=modulus.dtype).reshape(len(elements), 4)
        self._elements: list[Mat2] | None = None
        self._cache: dict = {}
        self._sorted_keys = None

    @property
    def order(self) -> int:
        return len(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def elements(self) -> list[Mat2]:
        if self._elements is None:
            self._elements = [Mat2(*e, self.modulus) for e in self._entries]
        return self._elements

    def __iter__(self) -> Iterator[Mat2]:
        return iter(self.elements)

    def __contains__(self, sigma: Mat2) -> bool:
        return sigma.modulus == self.modulus and sigma.entries in self._index

    def index(self, sigma) -> int:
        key = sigma.entries if isinstance(sigma, Mat2) else tuple(sigma)
        return self._index[key]

    def entries_at(self, k: int) -> Entries:
        return self._entries[k]

    def element(self, k: int) -> Mat2:
        return Mat2(*self._entries[k], self.modulus)

    @property
    def identity(self) -> Mat2:
        return Mat2.identity(self.modulus)

    def word(self, sigma) -> tuple[int, ...]:
        k = self.index(sigma)
        out = []
        while k != 0:
            out.append(int(self._via[k]))
            k = int(self._parent[k])
        return tuple(reversed(out))

    def evaluate(self, word: Iterable[int]) -> Mat2:
        q = self.modulus.value
        out = (1, 0, 0, 1)
        for i in word:
            out = _mul(out, self.generators[i].entries, q)
        return Mat2(*out, self.modulus)

    @property
    def depth_order(self) -> np.ndarray:
        """Parent and generator arrays in BFS order (parents precede children)."""
        return self._parent, self._via

    def index_many(self, entries: np.ndarray) -> np.ndarray:
        """Vectorized ``index`` for an (K, 4) array of entries.

        Raises KeyError if some row is not a group element.
        """
        entries = np.asarray(entries)
        q = self.modulus.value
        if q**4 < 2**62:
            if self._sorted_keys is None:
                keys = self._keys(self.array.astype(np.int64))
                order = np.argsort(keys)
                self._sorted_keys = (keys[order], order)
            skeys, order = self._sorted_keys
            keys = self._keys(entries.astype(np.int64))
            pos = np.searchsorted(skeys, keys)
            pos = np.minimum(pos, len(skeys) - 1)
            if not np.all(skeys[pos] == keys):
                raise KeyError("entries outside the group")
            return order[pos]
        return np.array([self._index[tuple(int(x) for x in row)] for row in entries], dtype=np.int64)

    def _keys(self, arr: np.ndarray) -> np.ndarray:
        q = self.modulus.value
        return ((arr[:, 0] * q + arr[:, 1]) * q + arr[:, 2]) * q + arr[:, 3]

    def element_order(self, sigma: Mat2) -> int:
        q = self.modulus.value
        x = sigma.entries
        k, y = 1, x
        while y != (1, 0, 0, 1):
            y = _mul(y, x, q)
            k += 1
        return k

    def __repr__(self):
        return f"MatrixGroup(order={self.order}, mod {self.modulus.value}, {len(self.generators)} generators)"


def close_group(gens: Sequence[Mat2], cap: int = DEFAULT_CAP, *, modulus: Modulus | None = None) -> MatrixGroup:
    """Breadth-first closure of the group generated by ``gens``.

    Each element gets the shortlex-least word over generator indices.  The
    element set does not depend on generator order; words and the element
    ordering do.
    """
    gens = list(gens)
    if cap <= 0:
        raise ValueError("cap must be positive")
    if modulus is None:
        if not gens:
            raise ValueError("modulus is required for an empty generator list")
        modulus = gens[0].modulus
    for g in gens:
        if g.modulus != modulus:
            raise ModulusMismatch("generators use different moduli")
        if not g.is_invertible():
            raise NonInvertibleGenerator(f"generator {g.rows()} is not invertible")
    q = modulus.value
    gen_entries = [g.entries for g in gens]
    ident = (1, 0, 0, 1) if q > 1 else (0, 0, 0, 0)
    elements: list[Entries] = [ident]
    index = {ident: 0}
    parent = [0]
    via = [-1]
    right_rows: list[list[int]] = [[] for _ in gens]
    queue = deque([0])
    while queue:
        k = queue.popleft()
        x = elements[k]
        for i, g in enumerate(gen_entries):
            y = _mul(x, g, q)
            j = index.get(y)
            if j is None:
                j = len(elements)
                if j >= cap:
                    raise CapExceeded(f"group order exceeds cap {cap}")
                index[y] = j
                elements.append(y)
                parent.append(k)
                via.append(i)
                queue.append(j)
            right_rows[i].append(j)
    # BFS pops indices in increasing order, so right_rows[i][k] is the image of k
    right = np.array(right_rows, dtype=np.int64).reshape(len(gens), len(elements))
    return MatrixGroup(
        modulus,
        gens,
        elements,
        np.array(parent, dtype=np.int64),
        np.array(via, dtype=np.int64),
        right,
    )


def reduce_mod(G: MatrixGroup, level: int, cap: int = DEFAULT_CAP) -> MatrixGroup:
    """Image of G in GL_2(Z/p^level Z)."""
    n = G.modulus.n
    if not 1 <= level <= n:
        raise ValueError(f"level must lie in [1, {n}]")
    if level == n:
        return G
    mod = G.modulus.reduced(level)
    return close_group([g.reduce(level) for g in G.generators], cap, modulus=mod)


DIAGONAL, UPPER, LOWER, NONE = "diagonal", "upper", "lower", "none"


def triangularity(G: MatrixGroup) -> str:
    """Strongest triangular shape shared by all elements, in the fixed basis."""
    arr = G.array
    upper = not np.any(arr[:, 2])
    lower = not np.any(arr[:, 1])
    if upper and lower:
        return DIAGONAL
    if upper:
        return UPPER
    if lower:
        return LOWER
    return NONE


def is_upper(shape: str) -> bool:
    return shape in (DIAGONAL, UPPER)


def is_lower(shape: str) -> bool:
    return shape in (DIAGONAL, LOWER)


def fixed_points(G: MatrixGroup) -> tuple[list[TorsionPoint], int]:
    """Generators of {P : sigma P = P for all sigma} and the largest exact order there."""
    mod = G.modulus
    rows = []
    for g in G.generators:
        m = g.minus_identity()
        rows.extend([[m.a11, m.a12], [m.a21, m.a22]])
    if rows:
        gens = kernel(np.array(rows, dtype=object), mod)
    else:
        gens = [(1, 0), (0, 1)]
    points = [TorsionPoint(x, y, mod) for x, y in gens]
    v = min((min(mod.val(pt.x), mod.val(pt.y)) for pt in points), default=mod.n)
    return points, mod.p ** (mod.n - v)


def cyclic_subgroups(G: MatrixGroup) -> list[tuple[Mat2, int]]:
    """One (generator, order) pair per cyclic subgroup of G."""
    q = G.modulus.value
    seen: set[int] = set()
    out = []
    for k, x in enumerate(G._entries):
        if k in seen:
            continue
        powers = [G._index[(1, 0, 0, 1)]]
        y = x
        while y != (1, 0, 0, 1):
            powers.append(G._index[y])
            y = _mul(y, x, q)
        order = len(powers)
        for e in range(1, order + 1):
            if gcd(e, order) == 1:
                seen.add(powers[e % order])
        out.append((Mat2(*x, G.modulus), order))
    return out


def cyclic_subgroup_sets(G: MatrixGroup) -> list[frozenset[int]]:
    """Element-index sets of all cyclic subgroups, deduplicated by set equality."""
    q = G.modulus.value
    seen: dict[frozenset[int], None] = {}
    for x in G._entries:
        members = {0}
        y = x
        while y != (1, 0, 0, 1):
            members.add(G._index[y])
            y = _mul(y, x, q)
        seen.setdefault(frozenset(members), None)
    return list(seen)


def point_valuation(points: Iterable[TorsionPoint]) -> int:
    pts = list(points)
    if not pts:
        raise ValueError("no points")
    mod = pts[0].modulus
    return min(min(valuation(pt.x, mod.p, mod.n), valuation(pt.y, mod.p, mod.n)) for pt in pts)
