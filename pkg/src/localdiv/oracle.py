"""Brute-force cohomology for small groups.

Slow on purpose: unknowns are the 2N values of a cocycle on every element,
the cocycle identity is imposed for all N^2 pairs, the solution module is
enumerated element by element, local conditions are tested against the
explicitly enumerated images of (sigma - 1), and every group structure is
read off by counting p^k-torsion.  Nothing here shares code with the
generator-value solver beyond the kernel computation of the pair system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded
from .matgroup import MatrixGroup
from .modring import kernel

MAX_GROUP_ORDER = 120
MAX_ENUMERATED = 2_000_000


@dataclass
class OracleReport:
    z1_structure: list[int]
    b1_structure: list[int]
    h1_structure: list[int]
    z1loc_structure: list[int]
    h1loc_structure: list[int]

    def as_dict(self) -> dict:
        return {
            "z1": self.z1_structure,
            "b1": self.b1_structure,
            "h1": self.h1_structure,
            "z1loc": self.z1loc_structure,
            "h1loc": self.h1loc_structure,
        }


def pair_system(G: MatrixGroup) -> np.ndarray:
    """Rows of Z_{st} - Z_s - s Z_t = 0 over all pairs, unknowns (Z_g)_x, (Z_g)_y for every g."""
    N, q = G.order, G.modulus.value
    arr = G.array.astype(np.int64)
    rows = []
    for s in range(N):
        a, b, c, d = (int(v) for v in arr[s])
        prods = G.index_many(_mul_all(arr[s], arr, q))
        for t in range(N):
            st = int(prods[t])
            for coord, (u, v) in enumerate(((a, b), (c, d))):
                r = np.zeros(2 * N, dtype=np.int64)
                r[2 * st + coord] += 1
                r[2 * s + coord] -= 1
                r[2 * t] -= u
                r[2 * t + 1] -= v
                rows.append(r % q)
    return np.array(rows, dtype=np.int64).reshape(-1, 2 * N)


def _mul_all(x, arr, q):
    a, b, c, d = (int(v) for v in x)
    out = np.empty_like(arr)
    out[:, 0] = (a * arr[:, 0] + b * arr[:, 2]) % q
    out[:, 1] = (a * arr[:, 1] + b * arr[:, 3]) % q
    out[:, 2] = (c * arr[:, 0] + d * arr[:, 2]) % q
    out[:, 3] = (c * arr[:, 1] + d * arr[:, 3]) % q
    return out


def span(gens: np.ndarray, q: int, limit: int = MAX_ENUMERATED) -> np.ndarray:
    """Every Z/qZ-combination of the rows of ``gens``, as a sorted unique array."""
    gens = np.asarray(gens, dtype=np.int64) % q
    dim = gens.shape[1] if gens.ndim == 2 else 0
    S = np.zeros((1, dim), dtype=np.int64)
    for g in gens:
        o = 1
        while np.any(o * g % q):
            o += 1
        parts = [(S + k * g) % q for k in range(o)]
        S = np.unique(np.concatenate(parts), axis=0)
        if len(S) > limit:
            raise CapExceeded(f"module has more than {limit} elements")
    return S


def _keys(S: np.ndarray) -> set:
    return {r.tobytes() for r in np.ascontiguousarray(S)}


def structure_from_counts(p: int, counts: list[int]) -> list[int]:
    """Cyclic orders of a finite abelian p-group from |A[p^k]| for k = 0, 1, ..."""
    logs = []
    for c in counts:
        e = 0
        while c > 1:
            if c % p:
                raise ValueError("count is not a power of p")
            c //= p
            e += 1
        logs.append(e)
    ranks = [logs[k] - logs[k - 1] for k in range(1, len(logs))] + [0]
    out = []
    for k in range(1, len(logs)):
        exact = ranks[k - 1] - ranks[k]
        out.extend([p**k] * exact)
    return sorted(out)


def quotient_structure(A: np.ndarray, B: np.ndarray, p: int, n: int) -> list[int]:
    """Structure of A/B for enumerated subgroups B <= A of (Z/p^n)^D."""
    q = p**n
    bkeys = _keys(B)
    counts = [1]
    for k in range(1, n + 1):
        hit = sum(1 for r in (A * p**k % q) if r.tobytes() in bkeys)
        counts.append(hit // len(B))
    return structure_from_counts(p, counts)


def oracle_h1(G: MatrixGroup, max_order: int = MAX_GROUP_ORDER) -> OracleReport:
    if G.order > max_order:
        raise CapExceeded(f"oracle limited to groups of order <= {max_order}")
    mod = G.modulus
    p, n, q, N = mod.p, mod.n, mod.value, G.order
    gens = kernel(pair_system(G), mod)
    Z1 = span(np.array(gens, dtype=np.int64).reshape(-1, 2 * N), q)

    arr = G.array.astype(np.int64)
    W = np.array([(x, y) for x in range(q) for y in range(q)], dtype=np.int64)
    cob = np.empty((len(W), 2 * N), dtype=np.int64)
    cob[:, 0::2] = (np.outer(W[:, 0], arr[:, 0] - 1) + np.outer(W[:, 1], arr[:, 1])) % q
    cob[:, 1::2] = (np.outer(W[:, 0], arr[:, 2]) + np.outer(W[:, 1], arr[:, 3] - 1)) % q
    B1 = np.unique(cob, axis=0)

    # image of (sigma - 1) for every sigma, as a q*q boolean table
    image = np.zeros((N, q * q), dtype=bool)
    image[np.arange(N)[None, :], cob[:, 0::2] * q + cob[:, 1::2]] = True
    vals = Z1[:, 0::2] * q + Z1[:, 1::2]
    local = image[np.arange(N)[None, :], vals].all(axis=1)
    Z1loc = Z1[local]

    zero = np.zeros((1, 2 * N), dtype=np.int64)
    return OracleReport(
        z1_structure=quotient_structure(Z1, zero, p, n),
        b1_structure=quotient_structure(B1, zero, p, n),
        h1_structure=quotient_structure(Z1, B1, p, n),
        z1loc_structure=quotient_structure(Z1loc, zero, p, n),
        h1loc_structure=quotient_structure(Z1loc, B1, p, n),
    )
