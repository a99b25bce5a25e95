"""First cohomology of a matrix group acting on (Z/p^nZ)^2.

Cocycles are parameterized by their values on the generators.  For a group
with g generators the unknown is a vector x of length 2g (the values Z_{g_i}
stacked), and every element's value is a linear function of x obtained by
expanding along its BFS word:

    Z_{sigma g_i} = Z_sigma + sigma Z_{g_i}.

The expansion matrices ``M[k]`` (2 x 2g) are built once per group.  x defines
a cocycle exactly when the expansion is consistent along every Cayley edge,
which is one homogeneous linear system with 2g columns.  The local
conditions ``Z_sigma in Im(sigma - 1)`` are linear in Z_sigma as well: with
U (sigma - 1) V = diag(p^e1, p^e2), membership is p^(n-e_k) (U Z_sigma)_k = 0.
So Z^1, Z^1_loc and B^1 are all submodules of (Z/p^nZ)^(2g) and the quotients
come out of ``quotient_decomposition``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    IncompleteCocycle,
    ModulusMismatch,
    NoSolution,
    NormalizationObstructed,
    NotACocycle,
    NotLocallyTrivial,
)
from .matgroup import Mat2, MatrixGroup, TorsionPoint, cyclic_subgroup_sets
from .modring import ModMatrix, Modulus, abelian_structure, kernel, module_order, quotient_decomposition, solve_linear

FULL_CHECK_LIMIT = 2000


class Cocycle:
    """A map G -> (Z/p^nZ)^2, stored as an (|G|, 2) array in the group's element order."""

    def __init__(self, group: MatrixGroup, values):
        self.group = group
        mod = group.modulus
        values = np.asarray(values, dtype=mod.dtype) % mod.value
        if values.shape != (group.order, 2):
            raise IncompleteCocycle(f"expected {group.order} values, got shape {values.shape}")
        self.values = values

    @classmethod
    def from_mapping(cls, group: MatrixGroup, mapping: Mapping | Callable) -> "Cocycle":
        vals = []
        for sigma in group.elements:
            if callable(mapping):
                v = mapping(sigma)
            else:
                if sigma not in mapping:
                    raise IncompleteCocycle(f"no value for {sigma.rows()}")
                v = mapping[sigma]
            vals.append(tuple(v))
        return cls(group, np.array(vals, dtype=object).reshape(group.order, 2))

    @classmethod
    def zero(cls, group: MatrixGroup) -> "Cocycle":
        return cls(group, np.zeros((group.order, 2), dtype=group.modulus.dtype))

    @property
    def modulus(self) -> Modulus:
        return self.group.modulus

    def __getitem__(self, sigma: Mat2) -> TorsionPoint:
        x, y = self.values[self.group.index(sigma)]
        return TorsionPoint(int(x), int(y), self.modulus)

    def items(self):
        for k, sigma in enumerate(self.group.elements):
            x, y = self.values[k]
            yield sigma, TorsionPoint(int(x), int(y), self.modulus)

    def _same_group(self, other: "Cocycle"):
        if other.group is not self.group:
            raise ModulusMismatch("cocycles live on different group objects")

    def __add__(self, other: "Cocycle") -> "Cocycle":
        self._same_group(other)
        return Cocycle(self.group, self.values + other.values)

    def __sub__(self, other: "Cocycle") -> "Cocycle":
        self._same_group(other)
        return Cocycle(self.group, self.values - other.values)

    def __neg__(self) -> "Cocycle":
        return Cocycle(self.group, -self.values)

    def __rmul__(self, k: int) -> "Cocycle":
        return Cocycle(self.group, (int(k) % self.modulus.value) * self.values)

    def __eq__(self, other):
        return isinstance(other, Cocycle) and other.group is self.group and np.array_equal(self.values, other.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def generator_values(self) -> np.ndarray:
        """The stacked values on the generators (the 2g coordinate vector)."""
        G = self.group
        idx = [G.index(g) for g in G.generators]
        return self.values[idx].reshape(-1)

    def __repr__(self):
        return f"Cocycle(|G|={self.group.order}, nonzero={int(np.count_nonzero(self.values.any(axis=1)))})"


@dataclass
class CocycleModule:
    """A finitely generated submodule of the cocycles of ``group``."""

    group: MatrixGroup
    basis: list[Cocycle]
    coords: list[tuple[int, ...]]
    structure: list[int]

    @property
    def order(self) -> int:
        return module_order(self.structure)


@dataclass
class H1Report:
    h1_structure: list[int]
    h1loc_structure: list[int]
    representatives: list[Cocycle] = field(default_factory=list)
    representative_orders: list[int] = field(default_factory=list)
    z1_structure: list[int] = field(default_factory=list)
    b1_structure: list[int] = field(default_factory=list)
    z1loc_structure: list[int] = field(default_factory=list)

    @property
    def h1_order(self) -> int:
        return module_order(self.h1_structure)

    @property
    def h1loc_order(self) -> int:
        return module_order(self.h1loc_structure)


# ---------------------------------------------------------------------------
# 2x2 Smith form, used per element on sigma - 1


def smith2(entries, mod: Modulus):
    """U A V = diag(p^e1, p^e2) for a 2x2 matrix A; returns ((e1, e2), U, V).

    Exponent n stands for a zero diagonal entry.  Matrices are flat 4-tuples.
    """
    p, n, q = mod.p, mod.n, mod.value
    a, b, c, d = (int(x) % q for x in entries)
    if not (a or b or c or d):
        return (n, n), (1, 0, 0, 1), (1, 0, 0, 1)
    best = None
    # leftmost column first, then topmost row
    for pos, x in ((0, a), (2, c), (1, b), (3, d)):
        if x:
            e = mod.val(x)
            if best is None or e < best[0]:
                best = (e, pos)
    e1, pos = best
    U = [1, 0, 0, 1]
    V = [1, 0, 0, 1]
    if pos in (2, 3):  # swap rows
        a, b, c, d = c, d, a, b
        U = [U[2], U[3], U[0], U[1]]
    if pos in (1, 3):  # swap columns
        a, b, c, d = b, a, d, c
        V = [V[1], V[0], V[3], V[2]]
    pe = p**e1
    ui = pow(a // pe, -1, q)
    a, b = a * ui % q, b * ui % q
    U[0], U[1] = U[0] * ui % q, U[1] * ui % q
    f = c // pe
    c, d = (c - f * a) % q, (d - f * b) % q
    U[2], U[3] = (U[2] - f * U[0]) % q, (U[3] - f * U[1]) % q
    g = b // pe
    b = 0
    d = d % q  # row 1 has a zero in column 0, so the column op leaves d alone
    V[1], V[3] = (V[1] - g * V[0]) % q, (V[3] - g * V[2]) % q
    if d:
        e2, u2 = mod.unit_part(d)
        ui2 = pow(u2, -1, q)
        U[2], U[3] = U[2] * ui2 % q, U[3] * ui2 % q
    else:
        e2 = n
    return (e1, e2), tuple(U), tuple(V)


def solve2(entries, rhs, mod: Modulus):
    """A particular W with A W = rhs for a 2x2 matrix A, or None."""
    p, n, q = mod.p, mod.n, mod.value
    (e1, e2), U, V = smith2(entries, mod)
    r0, r1 = int(rhs[0]), int(rhs[1])
    c0 = (U[0] * r0 + U[1] * r1) % q
    c1 = (U[2] * r0 + U[3] * r1) % q
    y = []
    for c, e in ((c0, e1), (c1, e2)):
        if e == n:
            if c:
                return None
            y.append(0)
        else:
            if c % p**e:
                return None
            y.append(c // p**e)
    return ((V[0] * y[0] + V[1] * y[1]) % q, (V[2] * y[0] + V[3] * y[1]) % q)


def image_conditions(entries, mod: Modulus) -> np.ndarray:
    """2x2 matrix S with: v in Im(A)  <=>  S v = 0."""
    p, n, q = mod.p, mod.n, mod.value
    (e1, e2), U, _ = smith2(entries, mod)
    s1 = p ** (n - e1) % q if e1 > 0 else 0
    s2 = p ** (n - e2) % q if e2 > 0 else 0
    return np.array([[s1 * U[0] % q, s1 * U[1] % q], [s2 * U[2] % q, s2 * U[3] % q]], dtype=object)


# ---------------------------------------------------------------------------
# Per-group linear data


def _mats(G: MatrixGroup) -> np.ndarray:
    return G.array.reshape(-1, 2, 2)


def _expansion(G: MatrixGroup) -> np.ndarray:
    """M[k] with Z_{elements[k]} = M[k] @ x for generator values x."""
    if "expansion" in G._cache:
        return G._cache["expansion"]
    mod = G.modulus
    q = mod.value
    g = len(G.generators)
    N = G.order
    mats = _mats(G)
    M = np.zeros((N, 2, 2 * g), dtype=mod.dtype)
    parent, via = G._parent, G._via
    depth = np.zeros(N, dtype=np.int64)
    for k in range(1, N):
        depth[k] = depth[parent[k]] + 1
    order = np.argsort(depth, kind="stable")
    bounds = np.searchsorted(depth[order], np.arange(depth.max() + 2)) if N else [0]
    for d in range(1, len(bounds) - 1):
        ks = order[bounds[d] : bounds[d + 1]]
        if not len(ks):
            continue
        par = parent[ks]
        M[ks] = M[par]
        for i in range(g):
            sel = via[ks] == i
            if np.any(sel):
                kk = ks[sel]
                M[kk, :, 2 * i : 2 * i + 2] = (M[kk, :, 2 * i : 2 * i + 2] + mats[par[sel]]) % q
    G._cache["expansion"] = M
    return M


def _edge_rows(G: MatrixGroup) -> np.ndarray:
    """Cayley-edge consistency rows; x is a cocycle iff all rows vanish on x."""
    if "edge_rows" in G._cache:
        return G._cache["edge_rows"]
    mod = G.modulus
    q = mod.value
    g = len(G.generators)
    M = _expansion(G)
    mats = _mats(G)
    blocks = []
    for i in range(g):
        D = M[G.right[i]] - M
        D[:, :, 2 * i : 2 * i + 2] -= mats
        D %= q
        D = D.reshape(-1, 2 * g)
        blocks.append(D[np.any(D, axis=1)])
    rows = np.concatenate(blocks) if blocks else np.zeros((0, 0), dtype=mod.dtype)
    G._cache["edge_rows"] = rows
    return rows


def _local_rows(G: MatrixGroup) -> np.ndarray:
    """Rows expressing Z_sigma in Im(sigma - 1) for every sigma."""
    if "local_rows" in G._cache:
        return G._cache["local_rows"]
    mod = G.modulus
    q = mod.value
    N = G.order
    S = np.zeros((N, 2, 2), dtype=mod.dtype)
    for k, (a, b, c, d) in enumerate(G._entries):
        S[k] = image_conditions((a - 1, b, c, d - 1), mod)
    M = _expansion(G)
    L = np.matmul(S, M) % q
    L = L.reshape(-1, M.shape[2])
    L = L[np.any(L, axis=1)]
    G._cache["local_rows"] = L
    return L


def _coboundary_coords(G: MatrixGroup) -> list[tuple[int, ...]]:
    q = G.modulus.value
    out = []
    for w in ((1, 0), (0, 1)):
        vec = []
        for g in G.generators:
            m = g.minus_identity()
            vec.extend([(m.a11 * w[0] + m.a12 * w[1]) % q, (m.a21 * w[0] + m.a22 * w[1]) % q])
        out.append(tuple(vec))
    return out


def _kernel_of(rows: np.ndarray, width: int, mod: Modulus) -> list[tuple[int, ...]]:
    if width == 0:
        return []
    if rows.shape[0] == 0:
        return [tuple(int(i == j) for j in range(width)) for i in range(width)]
    return kernel(rows, mod)


def _cocycle_from_coords(G: MatrixGroup, x) -> Cocycle:
    M = _expansion(G)
    if M.shape[2] == 0:
        return Cocycle.zero(G)
    vec = np.array([int(v) for v in x], dtype=G.modulus.dtype)
    vals = np.matmul(M, vec) % G.modulus.value
    return Cocycle(G, vals)


def _z1_coords(G: MatrixGroup) -> list[tuple[int, ...]]:
    if "z1" not in G._cache:
        G._cache["z1"] = _kernel_of(_edge_rows(G), 2 * len(G.generators), G.modulus)
    return G._cache["z1"]


def _z1loc_coords(G: MatrixGroup) -> list[tuple[int, ...]]:
    if "z1loc" not in G._cache:
        width = 2 * len(G.generators)
        if width == 0:
            G._cache["z1loc"] = []
        else:
            rows = np.concatenate([_edge_rows(G).reshape(-1, width), _local_rows(G).reshape(-1, width)])
            G._cache["z1loc"] = _kernel_of(rows, width, G.modulus)
    return G._cache["z1loc"]


def _structure(G: MatrixGroup, coords, modulo=None) -> list[int]:
    width = 2 * len(G.generators)
    if width == 0:
        return []
    return abelian_structure(coords, G.modulus, modulo=modulo, dim=width)


# ---------------------------------------------------------------------------
# Public operations


def is_cocycle(Z: Cocycle, exhaustive: bool | None = None) -> bool:
    """Check Z_{st} = Z_s + s Z_t.

    With ``exhaustive`` (the default for groups up to FULL_CHECK_LIMIT
    elements) every pair is checked.  Otherwise the identity is checked on
    Z_1 = 0 and on every (element, generator) pair, which implies the full
    identity because every element is a positive word in the generators.
    """
    G = Z.group
    q = G.modulus.value
    vals = Z.values
    if G.order == 0:
        return True
    if np.any(vals[G.index(G.identity)]):
        return False
    mats = _mats(G)
    if exhaustive is None:
        exhaustive = G.order <= FULL_CHECK_LIMIT
    if exhaustive:
        arr = G.array
        for s in range(G.order):
            a, b, c, d = (int(x) for x in arr[s])
            prods = np.stack(
                [
                    (a * arr[:, 0] + b * arr[:, 2]) % q,
                    (a * arr[:, 1] + b * arr[:, 3]) % q,
                    (c * arr[:, 0] + d * arr[:, 2]) % q,
                    (c * arr[:, 1] + d * arr[:, 3]) % q,
                ],
                axis=1,
            )
            idx = G.index_many(prods)
            expect = (vals[s] + vals @ mats[s].T) % q
            if not np.array_equal(vals[idx], expect):
                return False
        return True
    for i, g in enumerate(G.generators):
        zg = vals[G.index(g)]
        expect = (vals + np.matmul(mats, zg)) % q
        if not np.array_equal(vals[G.right[i]], expect):
            return False
    return True


def coboundary(G: MatrixGroup, W) -> Cocycle:
    """sigma -> (sigma - 1) W."""
    mod = G.modulus
    if isinstance(W, TorsionPoint):
        W = W.coords()
    w = np.array([int(W[0]), int(W[1])], dtype=mod.dtype)
    vals = (np.matmul(_mats(G), w) - w) % mod.value
    return Cocycle(G, vals)


def cocycle_space(G: MatrixGroup) -> CocycleModule:
    coords = _z1_coords(G)
    return CocycleModule(G, [_cocycle_from_coords(G, x) for x in coords], list(coords), _structure(G, coords))


def coboundary_space(G: MatrixGroup) -> CocycleModule:
    coords = _coboundary_coords(G)
    basis = [coboundary(G, (1, 0)), coboundary(G, (0, 1))]
    return CocycleModule(G, basis, coords, _structure(G, coords))


def local_cocycle_space(G: MatrixGroup) -> CocycleModule:
    coords = _z1loc_coords(G)
    return CocycleModule(G, [_cocycle_from_coords(G, x) for x in coords], list(coords), _structure(G, coords))


def h1(G: MatrixGroup) -> list[int]:
    return _structure(G, _z1_coords(G), modulo=_coboundary_coords(G))


def h1_loc(G: MatrixGroup) -> H1Report:
    """H^1 and its locally trivial part, with representatives of H^1_loc."""
    if "h1_loc" in G._cache:
        return G._cache["h1_loc"]
    B = _coboundary_coords(G)
    z1 = _z1_coords(G)
    z1loc = _z1loc_coords(G)
    width = 2 * len(G.generators)
    if width:
        parts = quotient_decomposition(z1loc, G.modulus, modulo=B, dim=width)
    else:
        parts = []
    report = H1Report(
        h1_structure=_structure(G, z1, modulo=B),
        h1loc_structure=[d for d, _ in parts],
        representatives=[_cocycle_from_coords(G, v) for _, v in parts],
        representative_orders=[d for d, _ in parts],
        z1_structure=_structure(G, z1),
        b1_structure=_structure(G, B),
        z1loc_structure=_structure(G, z1loc),
    )
    G._cache["h1_loc"] = report
    return report


def _require_cocycle(Z: Cocycle):
    if not is_cocycle(Z):
        raise NotACocycle("the given map does not satisfy the cocycle identity")


def is_coboundary(Z: Cocycle, check: bool = True) -> tuple[bool, TorsionPoint | None]:
    """Whether Z = (sigma - 1) W for a single W; returns (flag, W)."""
    if check:
        _require_cocycle(Z)
    G = Z.group
    mod = G.modulus
    if not G.generators:
        return True, TorsionPoint.zero(mod)
    rows, rhs = [], []
    for g in G.generators:
        m = g.minus_identity()
        rows.extend([[m.a11, m.a12], [m.a21, m.a22]])
        rhs.extend(int(v) for v in Z.values[G.index(g)])
    try:
        sol = solve_linear(ModMatrix(mod, rows), rhs)
    except NoSolution:
        return False, None
    return True, TorsionPoint(*sol.particular, mod)


def satisfies_local_conditions(Z: Cocycle, check: bool = True) -> tuple[bool, dict[Mat2, TorsionPoint]]:
    """Solve (sigma - 1) W_sigma = Z_sigma for every sigma.

    Returns (all solvable, witnesses for the solvable elements).
    """
    if check:
        _require_cocycle(Z)
    G = Z.group
    mod = G.modulus
    witnesses = {}
    ok = True
    for k, (a, b, c, d) in enumerate(G._entries):
        w = solve2((a - 1, b, c, d - 1), Z.values[k], mod)
        if w is None:
            ok = False
            continue
        witnesses[Mat2(a, b, c, d, mod)] = TorsionPoint(w[0], w[1], mod)
    return ok, witnesses


def locally_trivial_by_restriction(Z: Cocycle) -> bool:
    """Local conditions via restriction: Z restricted to every cyclic subgroup is a coboundary there.

    Independent of ``satisfies_local_conditions``; solves one stacked system
    per cyclic subgroup over all of its elements.
    """
    G = Z.group
    mod = G.modulus
    for members in cyclic_subgroup_sets(G):
        rows, rhs = [], []
        for k in members:
            a, b, c, d = G.entries_at(k)
            rows.extend([[a - 1, b], [c, d - 1]])
            rhs.extend(int(v) for v in Z.values[k])
        try:
            solve_linear(ModMatrix(mod, rows), rhs)
        except NoSolution:
            return False
    return True


def class_order(Z: Cocycle) -> int:
    """Order of [Z] in H^1."""
    p = Z.modulus.p
    e = 1
    while True:
        if is_coboundary(e * Z, check=False)[0]:
            return e
        e *= p


def p_torsion_representative(Z: Cocycle) -> Cocycle | None:
    """A cocycle cohomologous to Z with every value killed by p, or None.

    Solves p (g - 1) W = p Z_g over the generators; p (Z - dW) is then a
    cocycle vanishing on generators, hence zero.
    """
    G = Z.group
    mod = G.modulus
    p = mod.p
    rows, rhs = [], []
    for g in G.generators:
        m = g.minus_identity()
        rows.extend([[p * m.a11, p * m.a12], [p * m.a21, p * m.a22]])
        rhs.extend(p * v for v in Z[g].coords())
    if not rows:
        return Z
    try:
        sol = solve_linear(ModMatrix(mod, rows), rhs)
    except NoSolution:
        return None
    return Z - coboundary(G, sol.particular)


def cocycle_from_generator_values(G: MatrixGroup, x) -> Cocycle:
    """Expand generator values along BFS words.  The result is a cocycle iff x solves the edge system."""
    return _cocycle_from_coords(G, x)


def normalize_cocycle(Z: Cocycle, profile) -> Cocycle:
    """A cohomologous cocycle vanishing on tau_U, tau_L, rho with Z_delta = (p^m beta, 0).

    Follows the three-restriction argument: R trivializes Z on <rho, tau_L>
    and is subtracted off; then points P on <rho, tau_U> and Q on the
    diagonal subgroup must exist, both lying in ker(rho - 1), which forces
    Z_{tau_U} = 0 and Z_delta = (delta - 1) Q = (p^m beta, 0).
    """
    ok, _ = satisfies_local_conditions(Z)
    if not ok:
        raise NotLocallyTrivial("cocycle fails the local conditions")
    G = Z.group
    mod = G.modulus
    p, q = mod.p, mod.value

    def trivializer(elements, cocycle):
        rows, rhs = [], []
        for s in elements:
            m = s.minus_identity()
            rows.extend([[m.a11, m.a12], [m.a21, m.a22]])
            rhs.extend(cocycle[s].coords())
        if not rows:
            return TorsionPoint.zero(mod)
        try:
            sol = solve_linear(ModMatrix(mod, rows), rhs)
        except NoSolution:
            return None
        return TorsionPoint(*sol.particular, mod)

    lower_part = [s for s in (profile.rho, profile.tau_l) if not s.is_identity()]
    R = trivializer(lower_part, Z)
    if R is None:
        raise NormalizationObstructed("no point trivializes the cocycle on <rho, tau_L>")
    out = Z - coboundary(G, R)

    upper_part = [s for s in (profile.rho, profile.tau_u) if not s.is_identity()]
    if trivializer(upper_part, out) is None:
        raise NormalizationObstructed("no point trivializes the cocycle on <rho, tau_U>")
    diagonal = [s for s in G.elements if s.a12 == 0 and s.a21 == 0]
    Q = trivializer(diagonal, out)
    if Q is None:
        raise NormalizationObstructed("no point trivializes the cocycle on the diagonal subgroup")

    for s in (profile.rho, profile.tau_l, profile.tau_u):
        if not out[s].is_zero():
            raise NormalizationObstructed(f"normalized value at {s.rows()} is {out[s].coords()}")
    zd = out[profile.delta]
    if zd.y != 0 or zd.x % p**profile.m:
        raise NormalizationObstructed(f"normalized value at delta is {zd.coords()}")
    if not is_coboundary(out - Z, check=False)[0]:
        raise NormalizationObstructed("normalization changed the cohomology class")
    return out
