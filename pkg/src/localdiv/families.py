"""Explicit groups with nonzero locally trivial classes, and harnesses around them.

Every family is generated by

    tau_L = [[1, 0], [p^j, 1]],  tau_U = [[1, p^i], [0, 1]],
    delta = diag(1 + p^m, 1 + p^h),  rho = diag(1, lambda)

with every element factoring as delta^a tau_L^c tau_U^b rho^gamma.  The
witness cocycle is read off the exponents:

    j_lt_m       (m, j) = (n-1, n-2)        Z = (a p^(n-1), 0)
    j_ge_m_eq    (m, j) = (n-1, n-1)        Z = (a p^m, 0)
    j_ge_m_gt    (m, j) = (n-2, n-1)        Z = (a p^m, 0)
    n3_j_eq_m    n = 3, delta = diag(1+p^2, 1+p)    Z = ((1+p^2)^a - 1, 0)
    n3_j_gt_m    n = 3, delta = diag(1+p, 1+p)      Z = (0, c p^2)

Besides the constructions this module has the certificate check, a grid
harness for the vanishing criterion, an exhaustive search for small n and a
per-level triangularity table.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .cohomology import (
    Cocycle,
    class_order,
    h1,
    h1_loc,
    is_coboundary,
    is_cocycle,
    p_torsion_representative,
    satisfies_local_conditions,
)
from .errors import (
    BudgetExceeded,
    CapExceeded,
    DecompositionFailed,
    LocalDivError,
    NoDiagonalDeviation,
    SpecViolated,
)
from .matgroup import (
    DEFAULT_CAP,
    DIAGONAL,
    LOWER,
    UPPER,
    Mat2,
    MatrixGroup,
    close_group,
    fixed_points,
    is_upper,
    reduce_mod,
    triangularity,
)
from .modring import Modulus, multiplicative_order, teichmuller_lift
from .structure import (
    ParameterProfile,
    check_preconditions,
    extract_parameters,
    vanishing_predicate,
)

CASES = ("j_lt_m", "j_ge_m_eq", "j_ge_m_gt", "n3_j_eq_m", "n3_j_gt_m")


def default_alpha(p: int) -> int:
    """Smallest alpha in [2, p-1] whose multiplicative order mod p is at least 3."""
    for a in range(2, p):
        if multiplicative_order(a, p) >= 3:
            return a
    raise SpecViolated(f"no unit of order >= 3 modulo {p}")


def primitive_root(p: int) -> int:
    for g in range(2, p):
        if multiplicative_order(g, p) == p - 1:
            return g
    return 1


def derived_h(case: str, n: int) -> int:
    if case == "j_lt_m":
        return n // 2
    if case in ("j_ge_m_eq", "j_ge_m_gt"):
        return n // 2 if n % 2 == 0 else (n + 1) // 2
    return 1


@dataclass
class FamilySpec:
    """Parameters of one family member.

    ``i`` defaults to n.  ``theta_shift`` is the s in lambda = alpha + p^(h+s) theta
    (default 1 for j_lt_m, 2 for j_ge_m_*); alpha is lifted to its
    Teichmuller representative so that rho has order ord(alpha).
    """

    p: int
    n: int
    case: str
    i: int | None = None
    alpha: int | None = None
    theta: int = 0
    theta_shift: int | None = None
    lambda_override: int | None = None

    def __post_init__(self):
        self.case = self.case.replace("-", "_")
        if self.case not in CASES:
            raise SpecViolated(f"unknown family case {self.case!r}; expected one of {CASES}")
        if self.p < 5:
            raise SpecViolated("families need p >= 5")
        Modulus(self.p, self.n)
        if self.case.startswith("n3") and self.n != 3:
            raise SpecViolated(f"{self.case} is defined only for n = 3")
        if self.case == "j_lt_m" and self.n < 3:
            raise SpecViolated("j_lt_m needs n >= 3 (there is no such family for n = 2)")
        if self.case.startswith("j_ge_m") and self.n < 4:
            raise SpecViolated(f"{self.case} needs n >= 4; use the n3_* cases for n = 3")
        if self.i is None:
            self.i = self.n
        h = self.h
        if self.case.startswith("n3"):
            if self.i != 3:
                raise SpecViolated("the n = 3 families have i = 3")
        elif not (h + 1 < self.i <= self.n):
            raise SpecViolated(f"need h + 1 < i <= n, got i={self.i}, h={h}, n={self.n}")
        if self.alpha is None:
            self.alpha = primitive_root(self.p) if self.case == "n3_j_gt_m" else default_alpha(self.p)
        if self.alpha % self.p == 0 or multiplicative_order(self.alpha % self.p, self.p) < 3:
            raise SpecViolated(f"alpha={self.alpha} must be a unit of order >= 3 mod {self.p}")
        if self.theta_shift is None:
            self.theta_shift = {"j_lt_m": 1}.get(self.case, 2)
        low = 1 if self.case == "j_lt_m" else 2
        if self.theta_shift < low:
            raise SpecViolated(f"theta_shift must be >= {low} for {self.case}")
        if self.lambda_override is not None:
            lam = self.lambda_override % self.modulus.value
            if lam % self.p == 0 or multiplicative_order(lam % self.p, self.p) < 3:
                raise SpecViolated("lambda_override must reduce to a unit of order >= 3 mod p")

    @property
    def modulus(self) -> Modulus:
        return Modulus(self.p, self.n)

    @property
    def h(self) -> int:
        return derived_h(self.case, self.n)

    @property
    def m(self) -> int:
        n = self.n
        return {"j_lt_m": n - 1, "j_ge_m_eq": n - 1, "j_ge_m_gt": n - 2, "n3_j_eq_m": 2, "n3_j_gt_m": 1}[self.case]

    @property
    def j(self) -> int:
        n = self.n
        return {"j_lt_m": n - 2, "j_ge_m_eq": n - 1, "j_ge_m_gt": n - 1, "n3_j_eq_m": 2, "n3_j_gt_m": 2}[self.case]

    @property
    def lam(self) -> int:
        mod = self.modulus
        q = mod.value
        if self.lambda_override is not None:
            return self.lambda_override % q
        base = teichmuller_lift(self.alpha, mod)
        if self.case == "n3_j_gt_m":
            return base
        if self.case == "n3_j_eq_m":
            level = 2
        else:
            level = self.h + self.theta_shift
        return (base + pow(self.p, level, q) * self.theta) % q if level < self.n else base

    def generators(self) -> dict[str, Mat2]:
        mod = self.modulus
        p, n, q = self.p, self.n, mod.value
        if self.case == "n3_j_eq_m":
            d11, d22 = 1 + p**2, 1 + p
        elif self.case == "n3_j_gt_m":
            d11, d22 = 1 + p, 1 + p
        else:
            d11, d22 = 1 + p**self.m, 1 + p**self.h
        return {
            "delta": Mat2.diag(d11 % q, d22 % q, mod),
            "tau_l": Mat2(1, 0, p**self.j % q, 1, mod),
            "tau_u": Mat2(1, p**self.i % q, 0, 1, mod),
            "rho": Mat2.diag(1, self.lam, mod),
        }

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "case": self.case,
            "i": self.i,
            "j": self.j,
            "m": self.m,
            "h": self.h,
            "alpha": self.alpha,
            "theta": self.theta,
            "theta_shift": self.theta_shift,
            "lambda": self.lam,
        }


class Decomposer:
    """Recover (a, c, b, gamma) with sigma = delta^a tau_L^c tau_U^b rho^gamma.

    All four generators have closed-form powers (diagonal or unipotent), so
    the work is integer arithmetic on the entries:

        delta^a tau_L^c tau_U^b rho^gamma =
            [[x^a,            x^a b p^i lam^g],
             [y^a c p^j,      y^a (1 + b c p^(i+j)) lam^g]]
    """

    def __init__(self, spec: FamilySpec):
        self.spec = spec
        self.mod = spec.modulus
        g = spec.generators()
        self.delta, self.tau_l, self.tau_u, self.rho = g["delta"], g["tau_l"], g["tau_u"], g["rho"]
        q = self.mod.value
        self.a_of = self._power_table(self.delta.a11, q)
        self.gamma_of = self._power_table(self.rho.a22, q)
        self.y_order = len(self._power_table(self.delta.a22, q))
        self.delta_order = math.lcm(len(self.a_of), self.y_order)

    @staticmethod
    def _power_table(x: int, q: int) -> dict[int, int]:
        table, y, k = {}, 1, 0
        while y not in table:
            table[y] = k
            y = y * x % q
            k += 1
        return table

    def compose(self, a: int, c: int, b: int, gamma: int) -> Mat2:
        spec, q = self.spec, self.mod.value
        pj, pi = spec.p**spec.j, spec.p**spec.i
        x, y = pow(self.delta.a11, a, q), pow(self.delta.a22, a, q)
        lg = pow(self.rho.a22, gamma, q)
        return Mat2(x, x * b * pi * lg % q, y * c * pj % q, y * (1 + b * c * pi * pj) * lg % q, self.mod)

    def decompose(self, sigma: Mat2) -> tuple[int, int, int, int]:
        """Exponents with sigma = delta^a tau_L^c tau_U^b rho^gamma.

        The (1,1) entry fixes a only modulo the order of delta_11, so every
        lift a + k ord(delta_11) below ord(delta) is tried.
        """
        spec, q = self.spec, self.mod.value
        pj, pi = spec.p**spec.j, spec.p**spec.i
        a0 = self.a_of.get(sigma.a11)
        if a0 is None:
            raise DecompositionFailed(f"{sigma.rows()}: (1,1) entry is not a power of delta_11")
        xinv = pow(sigma.a11, -1, q)
        yinv = pow(self.delta.a22, -1, q)
        for a in range(a0, self.delta_order, len(self.a_of)):
            ya_inv = pow(yinv, a, q)
            r12 = sigma.a12 * xinv % q
            r21 = sigma.a21 * ya_inv % q
            r22 = sigma.a22 * ya_inv % q
            if r21 % pj:
                continue
            c = (r21 // pj) % (q // pj)
            lg = (r22 - c * pj * r12) % q
            gamma = self.gamma_of.get(lg)
            if gamma is None:
                continue
            t = r12 * pow(lg, -1, q) % q
            if t % pi:
                continue
            b = (t // pi) % (q // pi) if spec.i < spec.n else 0
            if self.compose(a, c, b, gamma) == sigma:
                return a, c, b, gamma
        raise DecompositionFailed(f"{sigma.rows()} does not factor as delta^a tau_L^c tau_U^b rho^gamma")

    def witness_value(self, sigma: Mat2) -> tuple[int, int]:
        a, c, _, _ = self.decompose(sigma)
        p, q = self.mod.p, self.mod.value
        case = self.spec.case
        if case == "j_lt_m":
            return a * p ** (self.spec.n - 1) % q, 0
        if case in ("j_ge_m_eq", "j_ge_m_gt"):
            return a * p**self.spec.m % q, 0
        if case == "n3_j_eq_m":
            return (pow(1 + p**2, a, q) - 1) % q, 0
        return 0, c * p**2 % q


def build_family(spec: FamilySpec, cap: int = DEFAULT_CAP) -> tuple[MatrixGroup, Cocycle]:
    gens = spec.generators()
    names = ["tau_l", "tau_u", "delta", "rho"]
    G = close_group([gens[k] for k in names if not gens[k].is_identity()], cap, modulus=spec.modulus)
    dec = Decomposer(spec)
    Z = Cocycle.from_mapping(G, dec.witness_value)
    if not is_cocycle(Z):
        raise DecompositionFailed(f"witness for {spec.case} is not a cocycle")
    return G, Z


@dataclass
class CounterexampleCertificate:
    group: MatrixGroup
    witness: Cocycle
    checks: dict
    profile: ParameterProfile | None
    fixed_point_max_order: int
    notes: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        c = self.checks
        return bool(c["is_cocycle"] and c["local_ok"] and c["not_coboundary"])

    def as_dict(self) -> dict:
        return {
            "valid": self.valid,
            "order": self.group.order,
            "generators": [g.rows() for g in self.group.generators],
            "checks": dict(self.checks),
            "profile": self.profile.as_dict() if self.profile else None,
            "fixed_point_max_order": self.fixed_point_max_order,
            "notes": list(self.notes),
        }


def verify_counterexample(G: MatrixGroup, witness: Cocycle) -> CounterexampleCertificate:
    """Run every check on (G, witness) and record the outcomes; never raises on a failed check."""
    notes = []
    cocycle_ok = is_cocycle(witness, exhaustive=G.order <= 2000)
    local_ok = cob = False
    order = 0
    if cocycle_ok:
        local_ok = satisfies_local_conditions(witness, check=False)[0]
        cob = is_coboundary(witness, check=False)[0]
        order = class_order(witness)
    else:
        notes.append("witness is not a cocycle")
    p = G.modulus.p
    p_torsion = (p * witness).is_zero()
    rep = p_torsion_representative(witness) if cocycle_ok else None
    if cocycle_ok and not p_torsion and rep is not None:
        notes.append("witness is not killed by p, but a cohomologous cocycle is")
    profile = None
    try:
        profile = extract_parameters(G)
    except LocalDivError as exc:
        notes.append(f"profile unavailable: {exc}")
    _, fp = fixed_points(G)
    checks = {
        "is_cocycle": bool(cocycle_ok),
        "local_ok": bool(local_ok),
        "not_coboundary": bool(cocycle_ok and not cob),
        "class_order": int(order),
        "p_torsion": bool(p_torsion),
        "p_torsion_class": rep is not None,
    }
    return CounterexampleCertificate(G, witness, checks, profile, fp, notes)


# ---------------------------------------------------------------------------
# grid harness


def synthesize(p: int, n: int, i: int, j: int, m: int, h: int, d: int, lam1: int, cap: int = DEFAULT_CAP) -> MatrixGroup:
    """The group generated by diag(1+p^m, 1+p^h d), the unipotents p^j / p^i and diag(1, lift(lam1))."""
    mod = Modulus(p, n)
    q = mod.value
    gens = [
        Mat2.diag((1 + p**m) % q, (1 + p**h * d) % q, mod),
        Mat2(1, 0, p**j % q, 1, mod),
        Mat2(1, p**i % q, 0, 1, mod),
        Mat2.diag(1, teichmuller_lift(lam1, mod), mod),
    ]
    return close_group([g for g in gens if not g.is_identity()], cap, modulus=mod)


def default_sampler(p: int, n: int, rng: random.Random) -> list[tuple[int, ...]]:
    """All (i, j, m, h, d, lam1) with 1 <= i, j, m, h <= n, d in {1, 2} and lam1 of order >= 3.

    Only tuples where the criterion holds are returned, shuffled by ``rng``.
    """
    lams = [x for x in range(2, p) if multiplicative_order(x, p) >= 3]
    out = []
    for i, j, m, h in itertools.product(range(1, n + 1), repeat=4):
        if not vanishing_predicate(i, j, m, h):
            continue
        for d in (1, 2):
            if h == n and d != 1:
                continue
            for lam in lams:
                out.append((i, j, m, h, d, lam))
    rng.shuffle(out)
    return out


@dataclass
class GridEntry:
    p: int
    n: int
    sampled: tuple
    order: int | None
    status: str
    profile: tuple | None = None
    predicate: bool | None = None
    preconditions: bool | None = None
    h1loc: list | None = None
    matches_sample: bool | None = None

    def as_dict(self) -> dict:
        keys = ("i", "j", "m", "h", "d", "lambda1")
        return {
            "p": self.p,
            "n": self.n,
            "sampled": dict(zip(keys, self.sampled)),
            "order": self.order,
            "status": self.status,
            "profile": dict(zip(("i", "j", "m", "h"), self.profile)) if self.profile else None,
            "predicate": self.predicate,
            "preconditions": self.preconditions,
            "h1loc": self.h1loc,
            "matches_sample": self.matches_sample,
        }


@dataclass
class GridReport:
    entries: list[GridEntry] = field(default_factory=list)
    family_checks: list[dict] = field(default_factory=list)
    decisions: list[str] = field(default_factory=list)
    complete: bool = True

    @property
    def tested(self) -> list[GridEntry]:
        """Entries whose own profile satisfies the criterion (vanishing expected)."""
        return [e for e in self.entries if e.status in ("ok", "violation")]

    @property
    def violations(self) -> list[GridEntry]:
        return [e for e in self.entries if e.status == "violation"]

    def as_dict(self) -> dict:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.status] = counts.get(e.status, 0) + 1
        return {
            "complete": self.complete,
            "tested": len(self.tested),
            "violations": [e.as_dict() for e in self.violations],
            "status_counts": counts,
            "entries": [e.as_dict() for e in self.entries],
            "family_checks": self.family_checks,
            "decisions": self.decisions,
        }


def _grid_entry(p, n, tup, cap) -> GridEntry:
    try:
        G = synthesize(p, n, *tup, cap=cap)
    except CapExceeded:
        return GridEntry(p, n, tup, None, "cap_exceeded")
    loc = h1_loc(G).h1loc_structure
    entry = GridEntry(p, n, tup, G.order, "", h1loc=loc)
    report = check_preconditions(G)
    entry.preconditions = report.satisfied
    try:
        prof = extract_parameters(G, report=report)
    except NoDiagonalDeviation:
        # m = n: every value of a normalized cocycle vanishes
        entry.profile = (None, None, n, None)
        entry.status = "m_equals_n" if not loc else "violation"
        return entry
    except LocalDivError:
        entry.status = "no_profile" if not loc else "nonzero_outside_scope"
        return entry
    entry.profile = (prof.i, prof.j, prof.m, prof.h)
    entry.matches_sample = entry.profile == tuple(tup[:4])
    entry.predicate = vanishing_predicate(*entry.profile)
    if not entry.predicate:
        entry.status = "predicate_false"
    elif not report.satisfied:
        entry.status = "preconditions_fail" if not loc else "nonzero_outside_scope"
    else:
        entry.status = "violation" if loc else "ok"
    return entry


def theorem_grid(
    p_list: Iterable[int],
    n_list: Iterable[int],
    profile_sampler: Callable | None = None,
    budget: int = 1000,
    *,
    cap: int = 20000,
    seed: int = 0,
    families: bool = True,
) -> GridReport:
    """Synthesize groups for sampled (i, j, m, h, d, lam1) and check the vanishing criterion.

    A violation is an entry whose extracted profile satisfies the criterion,
    which meets the shape assumptions, and still has nonzero locally trivial
    classes.  ``budget`` bounds the number of groups built; when it runs out
    BudgetExceeded carries the partial report.  With ``families`` the report
    also lists the explicit families for each n >= 3 (where the criterion
    fails and classes are expected).
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    sampler = profile_sampler or default_sampler
    rng = random.Random(seed)
    report = GridReport(
        decisions=[
            "generators diag(1+p^m, 1+p^h d), [[1,0],[p^j,1]], [[1,p^i],[0,1]], diag(1, teichmuller(lam1)); d in {1,2} by default",
            f"groups larger than cap={cap} are skipped; the profile is re-extracted from the closed group",
        ]
    )
    spent = 0
    for p in p_list:
        for n in n_list:
            for tup in sampler(p, n, rng):
                if spent >= budget:
                    report.complete = False
                    raise BudgetExceeded(f"budget of {budget} groups exhausted", partial=report)
                spent += 1
                report.entries.append(_grid_entry(p, n, tuple(tup), cap))
            if families and n >= 3:
                cases = ["n3_j_eq_m", "n3_j_gt_m"] if n == 3 else ["j_lt_m", "j_ge_m_eq", "j_ge_m_gt"]
                for case in cases:
                    spec = FamilySpec(p, n, case)
                    G, _ = build_family(spec, cap=max(cap, DEFAULT_CAP))
                    loc = h1_loc(G).h1loc_structure
                    report.family_checks.append({**spec.as_dict(), "order": G.order, "h1loc": loc, "nonzero": bool(loc)})
    return report


# ---------------------------------------------------------------------------
# exhaustive search


def _diag_canonical_key(G: MatrixGroup) -> tuple:
    """Canonical form of the element set under conjugation by diag(1, u)."""
    mod = G.modulus
    q = mod.value
    arr = G.array.astype(object) if mod.dtype is object else G.array.astype(np.int64)
    best = None
    for u in range(1, q):
        if u % mod.p == 0:
            continue
        ui = pow(u, -1, q)
        conj = arr.copy()
        conj[:, 1] = conj[:, 1] * ui % q
        conj[:, 2] = conj[:, 2] * u % q
        key = tuple(sorted(map(tuple, conj.tolist())))
        if best is None or key < best:
            best = key
    return best


def search_counterexamples(p: int, n: int, shape_constraints: dict | None = None, cap: int = 5000) -> list[CounterexampleCertificate]:
    """Enumerate small generator tuples and certify every group with nonzero locally trivial classes.

    ``shape_constraints`` keys: ``shape`` ("lower", "upper" or "diagonal",
    default lower), and optional fixed ``j`` (valuation of the off-diagonal
    unipotent, used for i in the upper shape), ``m`` and ``h``.  Candidates
    are tau = p^j c in the off-diagonal slot (c a unit mod p), delta =
    diag(1 + p^m a, 1 + p^h d) and rho = diag(1, lambda) with lambda of order
    >= 3 mod p.  Groups equal up to conjugation by a diagonal matrix are
    reported once.  ``cap`` bounds each closed group; CapExceeded propagates.
    """
    if n < 2:
        raise SpecViolated("search needs n >= 2")
    sc = dict(shape_constraints or {})
    shape = sc.get("shape", LOWER)
    if shape not in (LOWER, UPPER, DIAGONAL):
        raise SpecViolated(f"unknown shape {shape!r}")
    mod = Modulus(p, n)
    q = mod.value
    js = [sc["j"]] if "j" in sc else list(range(1, n))
    ms = [sc["m"]] if "m" in sc else list(range(1, n + 1))
    hs = [sc["h"]] if "h" in sc else list(range(1, n + 1))
    lams = [x for x in range(1, q) if x % p and multiplicative_order(x % p, p) >= 3]
    if shape == DIAGONAL:
        offdiag = [None]
    else:
        offdiag = [(jj, c) for jj in js for c in range(1, p)]

    found: dict = {}
    for od, m, h in itertools.product(offdiag, ms, hs):
        for a in range(1, p) if m < n else [1]:
            for d in range(1, p) if h < n else [1]:
                for lam in lams:
                    gens = [
                        Mat2.diag((1 + p**m * a) % q, (1 + p**h * d) % q, mod),
                        Mat2.diag(1, lam, mod),
                    ]
                    if od is not None:
                        jj, c = od
                        x = c * p**jj % q
                        gens.append(Mat2(1, 0, x, 1, mod) if shape == LOWER else Mat2(1, x, 0, 1, mod))
                    G = close_group([g for g in gens if not g.is_identity()], cap, modulus=mod)
                    rep = h1_loc(G)
                    if not rep.h1loc_structure:
                        continue
                    key = _diag_canonical_key(G)
                    if key in found:
                        continue
                    found[key] = verify_counterexample(G, rep.representatives[0])
    return list(found.values())


# ---------------------------------------------------------------------------
# isogeny table


def isogeny_report(G: MatrixGroup, cap: int = DEFAULT_CAP) -> list[dict]:
    """Triangularity of G mod p^l for l = 1..n.

    Upper triangular mod p^l means the first basis vector spans a G-stable
    cyclic submodule of order p^l, i.e. a rational cyclic isogeny of that degree.
    """
    p, n = G.modulus.p, G.modulus.n
    rows = []
    for level in range(1, n + 1):
        shape = triangularity(reduce_mod(G, level, cap))
        rows.append(
            {
                "level": level,
                "degree": p**level,
                "shape": shape,
                "upper": is_upper(shape),
                "cyclic_isogeny": is_upper(shape),
            }
        )
    return rows


def family_summary(spec: FamilySpec, cap: int = DEFAULT_CAP) -> dict:
    """Build, certify and tabulate one family; convenient for reports."""
    t0 = time.perf_counter()
    G, Z = build_family(spec, cap)
    cert = verify_counterexample(G, Z)
    return {
        "family": spec.as_dict(),
        "certificate": cert.as_dict(),
        "h1": h1(G),
        "h1loc": h1_loc(G).h1loc_structure,
        "isogeny": isogeny_report(G, cap),
        "seconds": round(time.perf_counter() - t0, 3),
    }
