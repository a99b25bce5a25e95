"""Shape checks and the parameter profile (i, j, m, h) of a group.

The profile is read in the fixed basis e1, e2, where e1 reduces to the
rational point of order p.  Given a group G:

* i is the least valuation of the upper-right entry over the strictly upper
  unipotent elements of G (n when there are none), j likewise for lower;
* m is the least t with an element diag(1 + a p^t, mu), a a unit;
* delta = diag(1 + p^m, 1 + p^h d) is built from a minimizing diagonal
  element by stripping its prime-to-p part with rho and raising to the power
  that turns the (1,1) entry into exactly 1 + p^m.

When i <= h + |j - m| the locally trivial classes vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoDiagonalDeviation, NonInvertibleGenerator, PreconditionViolated
from .matgroup import (
    DEFAULT_CAP,
    DIAGONAL,
    LOWER,
    UPPER,
    Mat2,
    MatrixGroup,
    close_group,
    reduce_mod,
    triangularity,
)
from .modring import multiplicative_order

ENTRY_RULES = ("nonzero", "gt1")


@dataclass
class ParameterProfile:
    p: int
    n: int
    i: int
    j: int
    m: int
    h: int
    d: int
    lambda1: int
    delta: Mat2
    tau_l: Mat2
    tau_u: Mat2
    rho: Mat2
    k_exp: int
    l_exp: int = 1

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "i": self.i,
            "j": self.j,
            "m": self.m,
            "h": self.h,
            "d": self.d,
            "lambda1": self.lambda1,
            "k_exp": self.k_exp,
            "l_exp": self.l_exp,
            "delta": self.delta.rows(),
            "tau_l": self.tau_l.rows(),
            "tau_u": self.tau_u.rows(),
            "rho": self.rho.rows(),
        }


@dataclass
class PreconditionReport:
    g1_cyclic_ok: bool
    g1_generator: Mat2 | None
    ord_lambda1: int
    basis_ok: bool
    g2_triangularity: str
    lambda1: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return (
            self.g1_cyclic_ok
            and self.basis_ok
            and self.ord_lambda1 >= 3
            and self.g2_triangularity in (DIAGONAL, UPPER, LOWER)
        )

    def as_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "g1_cyclic_ok": self.g1_cyclic_ok,
            "g1_generator": self.g1_generator.rows() if self.g1_generator else None,
            "lambda1": self.lambda1,
            "ord_lambda1": self.ord_lambda1,
            "basis_ok": self.basis_ok,
            "g2_triangularity": self.g2_triangularity,
            "notes": list(self.notes),
        }


def check_preconditions(G: MatrixGroup, cap: int = DEFAULT_CAP) -> PreconditionReport:
    """Reduce G mod p and mod p^2 and test the shape assumptions.

    A failed check is not an error: it means the vanishing already follows
    from the mod-p structure of G, and the notes say which way.
    """
    p, n = G.modulus.p, G.modulus.n
    G1 = reduce_mod(G, 1, cap)
    G2 = reduce_mod(G, min(2, n), cap)
    notes = []

    gen = None
    for sigma in G1.elements:
        if G1.element_order(sigma) == G1.order:
            gen = sigma
            break
    cyclic = gen is not None
    if not cyclic:
        notes.append("G1 is not cyclic: the mod-p image rules out locally trivial classes")

    diag_one = all(a == 1 and b == 0 and c == 0 for a, b, c, _ in G1._entries)
    lam1 = None
    ord_l = 0
    if cyclic and diag_one:
        lam1 = gen.a22
        ord_l = multiplicative_order(lam1, p)
    basis_ok = diag_one
    if not diag_one:
        notes.append("G1 is not of the form diag(1, lambda1) in this basis")
    elif G1.order == 1:
        notes.append("G1 is trivial (diagonal with lambda1 = 1); ord(lambda1) < 3")
    elif ord_l < 3:
        notes.append(f"ord(lambda1) = {ord_l} < 3: the base field contains the real cyclotomic subfield")

    shape2 = triangularity(G2)
    if shape2 not in (DIAGONAL, UPPER, LOWER):
        notes.append("G2 is neither upper nor lower triangular: locally trivial classes vanish")
    else:
        notes.append(f"G2 is {shape2}")

    return PreconditionReport(
        g1_cyclic_ok=cyclic,
        g1_generator=gen,
        ord_lambda1=ord_l,
        basis_ok=basis_ok,
        g2_triangularity=shape2,
        lambda1=lam1,
        notes=notes,
    )


def _min_offdiag(G: MatrixGroup, col: int, other: int, rule: str) -> tuple[int, Mat2 | None]:
    """Least valuation of entry ``col`` over unipotent elements with entry ``other`` zero."""
    mod = G.modulus
    best, best_el = mod.n, None
    for a, b, c, d in G._entries:
        e = (a, b, c, d)
        if a != 1 or d != 1 or e[other] != 0 or e[col] == 0:
            continue
        x = e[col]
        if rule == "gt1" and x <= 1:
            continue
        v = mod.val(x)
        if v < best:
            best, best_el = v, Mat2(*e, mod)
    return best, best_el


def extract_parameters(G: MatrixGroup, entry_rule: str = "nonzero", report: PreconditionReport | None = None) -> ParameterProfile:
    """Read (i, j, m, h), delta, tau_L, tau_U and rho off the elements of G.

    ``entry_rule`` selects which off-diagonal entries count towards i and j:
    "nonzero" (default) or "gt1", the literal reading that only entries whose
    representative exceeds 1 count.

    Only the mod-p shape (G1 cyclic of the form diag(1, lambda1)) is needed
    to read the profile; ord(lambda1) >= 3 and the G2 shape are reported by
    check_preconditions but not enforced here, so that e.g. a purely
    diagonal 1-unit group still has a profile.
    """
    if entry_rule not in ENTRY_RULES:
        raise ValueError(f"entry_rule must be one of {ENTRY_RULES}")
    mod = G.modulus
    p, n, q = mod.p, mod.n, mod.value
    if report is None:
        report = check_preconditions(G)
    if not (report.g1_cyclic_ok and report.basis_ok):
        raise PreconditionViolated("; ".join(report.notes) or "preconditions fail")
    lam1 = report.lambda1
    if lam1 is None:
        lam1 = 1

    i, tau_u = _min_offdiag(G, col=1, other=2, rule=entry_rule)
    j, tau_l = _min_offdiag(G, col=2, other=1, rule=entry_rule)
    ident = Mat2.identity(mod)
    tau_u = tau_u or ident
    tau_l = tau_l or ident

    m, tilde = n, None
    rho = None
    for a, b, c, d in G._entries:
        if b or c:
            continue
        if a != 1:
            t = mod.val(a - 1)
            if t < m:
                m, tilde = t, Mat2(a, b, c, d, mod)
        elif rho is None and d % p == lam1 % p:
            rho = Mat2(a, b, c, d, mod)
    if rho is None:
        raise PreconditionViolated("no element diag(1, lambda) lifting the mod-p generator")
    if tilde is None:
        raise NoDiagonalDeviation("every diagonal element has (1,1) entry equal to 1")

    ord_l = max(report.ord_lambda1, 1)
    k = next(k for k in range(ord_l) if pow(lam1, k, p) == tilde.a22 % p)
    eps = tilde @ (rho ** (-k))
    target = (1 + p**m) % q
    x, l = eps.a11, 1
    while x != target:
        x = x * eps.a11 % q
        l += 1
        if l > q:
            raise PreconditionViolated("cannot normalize the diagonal deviation")
    delta = eps**l
    h = mod.val(delta.a22 - 1)
    d = (delta.a22 - 1) // p**h if h < n else 1
    return ParameterProfile(
        p=p,
        n=n,
        i=i,
        j=j,
        m=m,
        h=h,
        d=d,
        lambda1=lam1,
        delta=delta,
        tau_l=tau_l,
        tau_u=tau_u,
        rho=rho,
        k_exp=k,
        l_exp=l,
    )


def theorem3_predicate(profile: ParameterProfile) -> bool:
    """The vanishing criterion i <= h + |j - m|."""
    return profile.i <= profile.h + abs(profile.j - profile.m)


def vanishing_predicate(i: int, j: int, m: int, h: int) -> bool:
    return i <= h + abs(j - m)


def conjugate(G: MatrixGroup, M: Mat2, cap: int = DEFAULT_CAP) -> MatrixGroup:
    """The group M G M^-1, closed again from the conjugated generators."""
    if not M.is_invertible():
        raise NonInvertibleGenerator(f"conjugator {M.rows()} is not invertible")
    Mi = M.inverse()
    return close_group([M @ g @ Mi for g in G.generators], cap, modulus=G.modulus)
