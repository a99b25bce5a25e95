"""Arithmetic and linear algebra over Z/p^nZ.

Everything here works over the local ring R = Z/p^nZ.  Because R is local,
every nonzero element is p^e times a unit, which makes pivoting by minimal
p-valuation a complete elimination strategy: an entry of minimal valuation
divides every other entry of the active block.

Two normal forms are provided.  ``howell_form`` is the canonical row-space
form used for membership tests and cross-checks on small matrices.
``smith_form`` diagonalizes with unimodular transforms and is vectorized with
numpy so the tall constraint systems produced by cohomology computations
(hundreds of thousands of rows, a handful of columns) stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    ModulusMismatch,
    NonUnit,
    NoSolution,
    SubgroupNotContained,
)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    f = 2
    while f * f <= p:
        if p % f == 0:
            return False
        f += 1
    return True


def valuation(x: int, p: int, n: int) -> int:
    """p-adic valuation of the residue x mod p^n, capped at n."""
    x %= p**n
    if x == 0:
        return n
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class Modulus:
    """The prime power p^n."""

    p: int
    n: int
    value: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.p, int) or not _is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "value", self.p**self.n)

    @property
    def dtype(self):
        # int64 is safe while every product of two residues fits in 63 bits
        return np.int64 if self.value < 2**31 else object

    def reduced(self, level: int) -> "Modulus":
        return Modulus(self.p, level)

    def __call__(self, x: int) -> "ResidueInt":
        return ResidueInt(x, self)

    def val(self, x: int) -> int:
        return valuation(x, self.p, self.n)

    def unit_part(self, x: int) -> tuple[int, int]:
        """Split x = p^e * u with u a unit; returns (e, u).  Zero gives (n, 1)."""
        x %= self.value
        if x == 0:
            return self.n, 1
        e = 0
        while x % self.p == 0:
            x //= self.p
            e += 1
        return e, x

    def inverse(self, x: int) -> int:
        if x % self.p == 0:
            raise NonUnit(f"{x} is not a unit modulo {self.value}")
        return pow(x, -1, self.value)

    def __str__(self):
        return f"{self.p}^{self.n}"


@dataclass(frozen=True)
class ResidueInt:
    residue: int
    modulus: Modulus

    def __post_init__(self):
        object.__setattr__(self, "residue", int(self.residue) % self.modulus.value)

    def _other(self, other) -> int:
        if isinstance(other, ResidueInt):
            if other.modulus != self.modulus:
                raise ModulusMismatch(
                    f"cannot combine residues mod {self.modulus.value} and {other.modulus.value}"
                )
            return other.residue
        if isinstance(other, (int, np.integer)):
            return int(other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return ResidueInt(self.residue + o, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return ResidueInt(self.residue - o, self.modulus)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return ResidueInt(o - self.residue, self.modulus)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return ResidueInt(self.residue * o, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return ResidueInt(-self.residue, self.modulus)

    def __pow__(self, k: int):
        if k < 0:
            return inv(self) ** (-k)
        return ResidueInt(pow(self.residue, k, self.modulus.value), self.modulus)

    def __eq__(self, other):
        if isinstance(other, ResidueInt):
            return self.modulus == other.modulus and self.residue == other.residue
        if isinstance(other, (int, np.integer)):
            return self.residue == int(other) % self.modulus.value
        return NotImplemented

    def __hash__(self):
        return hash((self.residue, self.modulus.p, self.modulus.n))

    def __int__(self):
        return self.residue

    __index__ = __int__

    def is_unit(self) -> bool:
        return self.residue % self.modulus.p != 0

    def __repr__(self):
        return f"{self.residue} (mod {self.modulus.value})"


def val_p(x: ResidueInt) -> int:
    """Largest t <= n with p^t dividing x; n exactly when x is zero."""
    return x.modulus.val(x.residue)


def inv(x: ResidueInt) -> ResidueInt:
    return ResidueInt(x.modulus.inverse(x.residue), x.modulus)


def multiplicative_order(x: int, q: int) -> int:
    """Order of the unit x in (Z/qZ)^*."""
    x %= q
    if q == 1:
        return 1
    k, y = 1, x
    while y != 1:
        y = y * x % q
        k += 1
        if k > q:
            raise NonUnit(f"{x} is not a unit modulo {q}")
    return k


def teichmuller_lift(a: int, modulus: Modulus) -> int:
    """The unique (p-1)-th root of unity mod p^n congruent to a mod p."""
    if a % modulus.p == 0:
        raise NonUnit(f"{a} is not a unit modulo {modulus.p}")
    return pow(a, modulus.p ** (modulus.n - 1), modulus.value)


class ModMatrix:
    """Dense matrix over Z/p^nZ.  Entries are stored as reduced Python ints."""

    __slots__ = ("modulus", "rows", "cols", "data")

    def __init__(self, modulus: Modulus, data, cols: int | None = None):
        q = modulus.value
        data = [[int(x) % q for x in row] for row in data]
        if cols is None:
            cols = len(data[0]) if data else 0
        if any(len(r) != cols for r in data):
            raise DimensionMismatch("ragged matrix rows")
        self.modulus = modulus
        self.rows = len(data)
        self.cols = cols
        self.data = tuple(tuple(r) for r in data)

    @classmethod
    def identity(cls, modulus: Modulus, size: int) -> "ModMatrix":
        return cls(modulus, [[int(i == j) for j in range(size)] for i in range(size)], cols=size)

    @classmethod
    def zeros(cls, modulus: Modulus, rows: int, cols: int) -> "ModMatrix":
        return cls(modulus, [[0] * cols for _ in range(rows)], cols=cols)

    @classmethod
    def from_array(cls, modulus: Modulus, arr) -> "ModMatrix":
        arr = np.asarray(arr, dtype=object)
        if arr.ndim != 2:
            raise DimensionMismatch("expected a 2-dimensional array")
        return cls(modulus, arr.tolist(), cols=arr.shape[1])

    def to_array(self) -> np.ndarray:
        a = np.array(self.data, dtype=self.modulus.dtype)
        return a.reshape(self.rows, self.cols)

    def __getitem__(self, ij) -> ResidueInt:
        i, j = ij
        return ResidueInt(self.data[i][j], self.modulus)

    def row(self, i: int) -> tuple[int, ...]:
        return self.data[i]

    @property
    def T(self) -> "ModMatrix":
        return ModMatrix(self.modulus, [list(c) for c in zip(*self.data)] if self.rows else [], cols=self.rows)

    def __matmul__(self, other):
        q = self.modulus.value
        if isinstance(other, ModMatrix):
            if other.modulus != self.modulus:
                raise ModulusMismatch("matrix moduli differ")
            if self.cols != other.rows:
                raise DimensionMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
            cols = list(zip(*other.data)) if other.rows else [() for _ in range(other.cols)]
            out = [[sum(a * b for a, b in zip(r, c)) % q for c in cols] for r in self.data]
            return ModMatrix(self.modulus, out, cols=other.cols)
        vec = [int(x) for x in other]
        if len(vec) != self.cols:
            raise DimensionMismatch(f"{self.rows}x{self.cols} @ vector of length {len(vec)}")
        return tuple(sum(a * b for a, b in zip(r, vec)) % q for r in self.data)

    def __eq__(self, other):
        return (
            isinstance(other, ModMatrix)
            and self.modulus == other.modulus
            and self.cols == other.cols
            and self.data == other.data
        )

    def __hash__(self):
        return hash((self.modulus, self.cols, self.data))

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.data for x in r)

    def __repr__(self):
        return f"ModMatrix(mod {self.modulus.value}, {[list(r) for r in self.data]})"


# ---------------------------------------------------------------------------
# Howell form


def howell_form(A: ModMatrix) -> tuple[ModMatrix, ModMatrix]:
    """Howell normal form of the row space of A.

    Returns (H, U) with U @ A == H.  H has its zero rows removed, pivots are
    powers of p, entries above a pivot p^e are reduced into [0, p^e), and the
    Howell property holds: for a pivot row r with pivot p^e, p^(n-e) * r lies
    in the span of the rows below it.  The last property is what makes
    greedy reduction (``in_row_space``) an exact membership test.
    """
    mod = A.modulus
    p, n, q = mod.p, mod.n, mod.value
    m = A.rows
    # each pool entry: [row, combination of original rows]
    pool = [[list(A.data[i]), [int(i == k) for k in range(m)]] for i in range(m)]
    done: list[tuple[int, list[int], list[int]]] = []

    def axpy(dst, src, f):
        for k in range(len(dst)):
            dst[k] = (dst[k] - f * src[k]) % q

    for col in range(A.cols):
        best, best_e = None, n
        for idx, (row, _) in enumerate(pool):
            if row[col]:
                e = valuation(row[col], p, n)
                if e < best_e:
                    best, best_e = idx, e
        if best is None:
            continue
        row, comb = pool.pop(best)
        _, u = mod.unit_part(row[col])
        uinv = pow(u, -1, q)
        row = [x * uinv % q for x in row]
        comb = [x * uinv % q for x in comb]
        pe = p**best_e
        for other in pool:
            if other[0][col]:
                f = other[0][col] // pe
                axpy(other[0], row, f)
                axpy(other[1], comb, f)
        pool = [entry for entry in pool if any(entry[0])]
        if best_e > 0:
            s = p ** (n - best_e)
            extra = [x * s % q for x in row]
            if any(extra):
                pool.append([extra, [x * s % q for x in comb]])
        done.append((col, row, comb))

    for i, (col_i, row_i, comb_i) in enumerate(done):
        pe = p ** valuation(row_i[col_i], p, n)
        for j in range(i):
            _, row_j, comb_j = done[j]
            f = row_j[col_i] // pe
            if f:
                axpy(row_j, row_i, f)
                axpy(comb_j, comb_i, f)

    H = ModMatrix(mod, [r for _, r, _ in done], cols=A.cols)
    U = ModMatrix(mod, [c for _, _, c in done], cols=m)
    return H, U


def _pivots(H: ModMatrix) -> list[int]:
    return [next(k for k, x in enumerate(r) if x) for r in H.data]


def reduce_against(H: ModMatrix, v: Sequence[int]) -> tuple[int, ...]:
    """Greedy reduction of v by the rows of a Howell form."""
    mod = H.modulus
    q, p, n = mod.value, mod.p, mod.n
    v = [int(x) % q for x in v]
    for row, k in zip(H.data, _pivots(H)):
        pe = p ** valuation(row[k], p, n)
        if v[k] % pe:
            continue
        f = v[k] // pe
        if f:
            v = [(a - f * b) % q for a, b in zip(v, row)]
    return tuple(v)


def in_row_space(H: ModMatrix, v: Sequence[int]) -> bool:
    """Membership of v in the row space of H (H must be a Howell form)."""
    return not any(reduce_against(H, v))


# ---------------------------------------------------------------------------
# Smith form (vectorized)


@dataclass
class SmithResult:
    """U @ A @ V = D where D is diagonal with entries p^exps[k].

    ``exps`` has length min(rows, cols); an exponent equal to n marks a zero
    diagonal entry.  ``rhs`` holds U applied to any right-hand sides passed
    in, so callers can solve without materializing U for tall matrices.
    """

    exps: list[int]
    V: np.ndarray
    rhs: np.ndarray | None = None
    U: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return len(self.exps)


def _as_array(A, modulus: Modulus) -> np.ndarray:
    if isinstance(A, ModMatrix):
        return A.to_array()
    arr = np.array(A, dtype=modulus.dtype)
    return arr % modulus.value


def smith_form(A, modulus: Modulus, rhs=None, want_u: bool = False) -> SmithResult:
    """Diagonalize A over Z/p^nZ.

    Pivots are chosen by minimal valuation over the active block; ties go to
    the leftmost column, then the topmost row.  Row operations are mirrored
    onto ``rhs`` (shape rows x k) and, when requested, onto U.
    """
    p, n, q = modulus.p, modulus.n, modulus.value
    A = _as_array(A, modulus).copy()
    if A.ndim != 2:
        raise DimensionMismatch("smith_form expects a matrix")
    R, C = A.shape
    V = np.eye(C, dtype=modulus.dtype)
    B = None
    if rhs is not None:
        B = _as_array(rhs, modulus).copy()
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if B.shape[0] != R:
            raise DimensionMismatch("right-hand side has the wrong number of rows")
    U = np.eye(R, dtype=modulus.dtype) if want_u else None
    powers = [p**e for e in range(n + 1)]
    exps: list[int] = []

    for t in range(min(R, C)):
        sub = A[t:, t:]
        found = None
        for e in range(n):
            mask = (sub % powers[e + 1]) != 0
            if mask.any():
                c = int(np.argmax(mask.any(axis=0)))
                r = int(np.argmax(mask[:, c]))
                found = (e, t + r, t + c)
                break
        if found is None:
            exps.extend([n] * (min(R, C) - t))
            break
        e, r, c = found
        if r != t:
            A[[t, r]] = A[[r, t]]
            if B is not None:
                B[[t, r]] = B[[r, t]]
            if U is not None:
                U[[t, r]] = U[[r, t]]
        if c != t:
            A[:, [t, c]] = A[:, [c, t]]
            V[:, [t, c]] = V[:, [c, t]]
        pe = powers[e]
        u = int(A[t, t]) // pe
        uinv = pow(u, -1, q)
        A[t] = A[t] * uinv % q
        if B is not None:
            B[t] = B[t] * uinv % q
        if U is not None:
            U[t] = U[t] * uinv % q
        f = A[t + 1 :, t] // pe
        nz = np.nonzero(f)[0]
        if len(nz):
            rows = nz + t + 1
            fr = f[nz][:, None]
            A[rows] = (A[rows] - fr * A[t]) % q
            if B is not None:
                B[rows] = (B[rows] - fr * B[t]) % q
            if U is not None:
                U[rows] = (U[rows] - fr * U[t]) % q
        g = A[t, t + 1 :] // pe
        if np.any(g):
            V[:, t + 1 :] = (V[:, t + 1 :] - V[:, t : t + 1] * g) % q
            A[t, t + 1 :] = 0
        exps.append(e)
    return SmithResult(exps=exps, V=V, rhs=B, U=U)


# ---------------------------------------------------------------------------
# Linear systems


@dataclass
class SolutionSet:
    """Particular solution plus generators of the kernel module."""

    particular: tuple[int, ...]
    kernel: list[tuple[int, ...]]
    modulus: Modulus


def _kernel_from_smith(sm: SmithResult, cols: int, modulus: Modulus) -> list[tuple[int, ...]]:
    n, p, q = modulus.n, modulus.p, modulus.value
    gens = []
    for k in range(cols):
        e = sm.exps[k] if k < len(sm.exps) else n
        if e == 0:
            continue
        scale = p ** (n - e) % q if e < n else 1
        col = [int(x) * scale % q for x in sm.V[:, k]]
        if any(col):
            gens.append(tuple(col))
    return gens


def kernel(A, modulus: Modulus) -> list[tuple[int, ...]]:
    """Generators of {x : A x = 0} as a Z/p^nZ-module."""
    arr = _as_array(A, modulus)
    if arr.ndim != 2:
        raise DimensionMismatch("kernel expects a matrix")
    sm = smith_form(arr, modulus)
    return _kernel_from_smith(sm, arr.shape[1], modulus)


def solve_linear(A: ModMatrix, b: Sequence) -> SolutionSet:
    """Solve A x = b over Z/p^nZ.

    Raises NoSolution when b is outside the column space and
    DimensionMismatch when the shapes disagree.
    """
    mod = A.modulus
    p, n, q = mod.p, mod.n, mod.value
    bvec = []
    for x in b:
        if isinstance(x, ResidueInt) and x.modulus != mod:
            raise ModulusMismatch("right-hand side uses a different modulus")
        bvec.append(int(x) % q)
    if len(bvec) != A.rows:
        raise DimensionMismatch(f"matrix has {A.rows} rows, right-hand side has {len(bvec)}")
    if A.cols == 0:
        if any(bvec):
            raise NoSolution("empty system with nonzero right-hand side")
        return SolutionSet((), [], mod)
    if A.rows == 0:
        return SolutionSet(tuple([0] * A.cols), [tuple(int(i == j) for j in range(A.cols)) for i in range(A.cols)], mod)
    sm = smith_form(A, mod, rhs=np.array(bvec, dtype=object).reshape(-1, 1))
    c = [int(x) for x in sm.rhs[:, 0]]
    y = [0] * A.cols
    for k, e in enumerate(sm.exps):
        if e == n:
            if c[k]:
                raise NoSolution("inconsistent row after diagonalization")
            continue
        if c[k] % p**e:
            raise NoSolution(f"valuation obstruction in pivot {k}")
        y[k] = c[k] // p**e
    if any(c[len(sm.exps) :]):
        raise NoSolution("inconsistent trailing rows")
    x = tuple(sum(int(sm.V[i, k]) * y[k] for k in range(A.cols)) % q for i in range(A.cols))
    return SolutionSet(x, _kernel_from_smith(sm, A.cols, mod), mod)


# ---------------------------------------------------------------------------
# Abelian group structure


def _vectors(gens, modulus: Modulus, dim: int | None) -> np.ndarray:
    rows = [[int(x) % modulus.value for x in g] for g in gens]
    if dim is None:
        if not rows:
            raise DimensionMismatch("dim is required when no generators are given")
        dim = len(rows[0])
    if any(len(r) != dim for r in rows):
        raise DimensionMismatch("generators have inconsistent lengths")
    return np.array(rows, dtype=modulus.dtype).reshape(len(rows), dim)


def quotient_decomposition(
    gens: Iterable[Sequence[int]],
    modulus: Modulus,
    modulo: Iterable[Sequence[int]] | None = None,
    dim: int | None = None,
) -> list[tuple[int, tuple[int, ...]]]:
    """Decompose span(gens) / span(modulo) into cyclic factors.

    Returns (order, representative) pairs, sorted by order, where the
    representatives lie in span(gens) and their classes generate the quotient
    as an internal direct sum of cyclic groups of the stated orders.
    """
    p, n, q = modulus.p, modulus.n, modulus.value
    gens = list(gens)
    modulo = list(modulo) if modulo is not None else []
    if dim is None:
        for g in gens + modulo:
            dim = len(g)
            break
    if dim is None or not gens:
        if any(any(int(x) % q for x in g) for g in modulo):
            raise SubgroupNotContained("nonzero subgroup of the trivial group")
        return []
    Ga = _vectors(gens, modulus, dim)
    # rowspace(Ga) = rowspace(D V^-1): basis vectors p^e_k * (row k of V^-1)
    sm = smith_form(Ga, modulus)
    Vinv = _invert(sm.V, modulus)
    basis = [(k, e) for k, e in enumerate(sm.exps) if e < n]
    if not basis:
        if any(any(int(x) % q for x in g) for g in modulo):
            raise SubgroupNotContained("subgroup is not contained in the zero module")
        return []

    # coordinates of the subgroup generators in that basis
    rel_rows = []
    if modulo:
        Gb = _vectors(modulo, modulus, dim)
        Z = (Gb @ sm.V) % q
        for z in Z:
            for k in range(dim):
                e = sm.exps[k] if k < len(sm.exps) else n
                zk = int(z[k])
                if (e == n and zk) or (e < n and zk % p**e):
                    raise SubgroupNotContained("subgroup generator outside span(gens)")
            rel_rows.append([int(z[k]) // p**e for k, e in basis])
    s = len(basis)
    for idx, (k, e) in enumerate(basis):
        row = [0] * s
        row[idx] = p ** (n - e) % q
        rel_rows.append(row)
    rel = np.array(rel_rows, dtype=modulus.dtype) % q
    sm2 = smith_form(rel, modulus)
    W = _invert(sm2.V, modulus)
    out = []
    for t in range(s):
        f = sm2.exps[t] if t < len(sm2.exps) else n
        if f == 0:
            continue
        y = [int(x) for x in W[t]]
        vec = [0] * dim
        for yk, (k, e) in zip(y, basis):
            if yk:
                scale = yk * p**e
                for c in range(dim):
                    vec[c] = (vec[c] + scale * int(Vinv[k, c])) % q
        out.append((p**f, tuple(vec)))
    out.sort(key=lambda t: t[0])
    return out


def abelian_structure(
    gens: Iterable[Sequence[int]],
    modulus: Modulus,
    modulo: Iterable[Sequence[int]] | None = None,
    dim: int | None = None,
) -> list[int]:
    """Invariant factors (ascending) of span(gens) / span(modulo).

    An empty list is the trivial group.
    """
    return [d for d, _ in quotient_decomposition(gens, modulus, modulo, dim)]


def module_order(structure: Sequence[int]) -> int:
    out = 1
    for d in structure:
        out *= d
    return out


def _invert(V: np.ndarray, modulus: Modulus) -> np.ndarray:
    """Inverse of a unimodular square matrix over Z/p^nZ."""
    q = modulus.value
    size = V.shape[0]
    sm = smith_form(V, modulus, rhs=np.eye(size, dtype=modulus.dtype))
    if any(e != 0 for e in sm.exps):
        raise NonUnit("matrix is not invertible")
    # U V W = I with W = sm.V, hence V^-1 = W U; sm.rhs holds U
    return (sm.V.astype(object) @ sm.rhs.astype(object) % q).astype(modulus.dtype)
