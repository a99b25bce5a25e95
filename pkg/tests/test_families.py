import random

import pytest

from localdiv.cohomology import coboundary, cocycle_from_generator_values, h1_loc
from localdiv.errors import BudgetExceeded, SpecViolated
from localdiv.families import (
    Decomposer,
    FamilySpec,
    build_family,
    default_alpha,
    default_sampler,
    isogeny_report,
    search_counterexamples,
    theorem_grid,
    verify_counterexample,
)
from localdiv.matgroup import Mat2, close_group
from localdiv.modring import Modulus, multiplicative_order

MAX_ORDER = 120_000


def expected_order(spec):
    """|G| = |<delta, rho>| * |<tau_L>| * |<tau_U>|.

    delta and rho are both diagonal and may share a p-power part when theta != 0,
    so the diagonal part is sized by closing it directly.
    """
    g = spec.generators()
    p, n = spec.p, spec.n
    diag = close_group([g["delta"], g["rho"]], modulus=spec.modulus).order
    return diag * p ** (n - spec.j) * p ** (n - spec.i)


def family_cases():
    out = []
    for p in (5, 7, 11):
        alphas = [a for a in range(2, p) if multiplicative_order(a, p) >= 3]
        choices = [(default_alpha(p), 0), (alphas[-1], 1)]
        for n in range(3, 7):
            cases = ["j_lt_m"] + (["j_ge_m_eq", "j_ge_m_gt"] if n >= 4 else ["n3_j_eq_m", "n3_j_gt_m"])
            for case in cases:
                for alpha, theta in choices:
                    out.append((p, n, case, alpha, theta))
    return out


@pytest.mark.parametrize("p,n,case,alpha,theta", family_cases())
def test_every_family_certifies(p, n, case, alpha, theta):
    spec = FamilySpec(p, n, case, alpha=alpha, theta=theta)
    size = expected_order(spec)
    if size > MAX_ORDER:
        pytest.skip(f"|G| = {size} exceeds the test budget of {MAX_ORDER}")
    G, Z = build_family(spec)
    assert G.order == size
    cert = verify_counterexample(G, Z)
    assert cert.valid, cert.checks
    assert cert.checks["class_order"] == p
    assert cert.checks["p_torsion_class"]
    if case == "j_lt_m":
        assert cert.checks["p_torsion"]
        assert cert.fixed_point_max_order <= p ** (n - 2)
    else:
        assert cert.fixed_point_max_order <= p ** (n - 1)


def test_family_example_j_lt_m():
    G, Z = build_family(FamilySpec(5, 3, "j_lt_m", i=3, alpha=2, theta=0))
    cert = verify_counterexample(G, Z)
    assert (cert.profile.i, cert.profile.j, cert.profile.m, cert.profile.h) == (3, 1, 2, 1)
    assert cert.valid


def test_family_example_n3_eq_value_at_delta():
    spec = FamilySpec(5, 3, "n3_j_eq_m", alpha=2, theta=0)
    G, Z = build_family(spec)
    assert Z[spec.generators()["delta"]].coords() == (25, 0)
    assert verify_counterexample(G, Z).checks["class_order"] == 5


@pytest.mark.parametrize("case", ["j_lt_m", "j_ge_m_eq", "j_ge_m_gt", "n3_j_eq_m", "n3_j_gt_m"])
def test_n_equal_two_rejected(case):
    with pytest.raises(SpecViolated):
        FamilySpec(5, 2, case)


def test_spec_validation():
    with pytest.raises(SpecViolated):
        FamilySpec(5, 5, "j_lt_m", i=3)  # needs i > h + 1 = 3
    with pytest.raises(SpecViolated):
        FamilySpec(5, 4, "j_lt_m", alpha=4)  # ord(4) = 2 mod 5
    with pytest.raises(SpecViolated):
        FamilySpec(5, 3, "j_ge_m_eq")
    with pytest.raises(SpecViolated):
        FamilySpec(5, 4, "n3_j_eq_m")
    with pytest.raises(SpecViolated):
        FamilySpec(3, 3, "j_lt_m")
    assert FamilySpec(5, 5, "j_lt_m", i=4).h == 2
    assert FamilySpec(5, 5, "j_ge_m_eq").h == 3
    assert FamilySpec(5, 6, "j_ge_m_gt").h == 3


def test_default_alpha():
    assert default_alpha(5) == 2
    assert default_alpha(7) == 2  # order 3
    assert default_alpha(13) == 2


def test_rho_lift_has_order_of_alpha():
    spec = FamilySpec(7, 4, "j_lt_m", alpha=3, theta=0)
    assert multiplicative_order(spec.lam, 7**4) == 6


def test_n3_gt_lambda_has_order_p_minus_one():
    spec = FamilySpec(7, 3, "n3_j_gt_m")
    assert multiplicative_order(spec.lam, 343) == 6


def test_certificate_rejects_coboundary():
    G, _ = build_family(FamilySpec(5, 3, "j_lt_m"))
    cert = verify_counterexample(G, coboundary(G, (1, 2)))
    assert cert.checks["is_cocycle"] and cert.checks["local_ok"]
    assert not cert.checks["not_coboundary"]
    assert not cert.valid


@pytest.mark.parametrize("case,n", [("j_lt_m", 4), ("j_ge_m_gt", 4), ("n3_j_eq_m", 3), ("n3_j_gt_m", 3)])
def test_witness_independent_of_word(case, n):
    spec = FamilySpec(5, n, case)
    G, Z = build_family(spec)
    # expanding the generator values along BFS words gives the same map
    assert cocycle_from_generator_values(G, Z.generator_values()) == Z
    dec = Decomposer(spec)
    rng = random.Random(0)
    for k in rng.sample(range(G.order), 50):
        sigma = G.element(k)
        a, c, b, g = dec.decompose(sigma)
        assert dec.compose(a, c, b, g) == sigma
        assert G.evaluate(G.word(sigma)) == sigma


@pytest.mark.parametrize(
    "case,n,shift",
    [("j_lt_m", 4, 1), ("j_lt_m", 5, 1), ("j_lt_m", 5, 2), ("j_ge_m_eq", 6, 2), ("j_ge_m_gt", 6, 2)],
)
def test_theta_level_variants(case, n, shift):
    spec = FamilySpec(5, n, case, theta=3, theta_shift=shift)
    assert spec.lam % 5**n != FamilySpec(5, n, case).lam % 5**n
    G, Z = build_family(spec)
    assert verify_counterexample(G, Z).valid


# --- grid ---------------------------------------------------------------------------


def test_grid_n2_all_vanish():
    rep = theorem_grid([5], [2], budget=10_000)
    assert rep.complete
    assert rep.tested
    assert not rep.violations
    assert all(not e.h1loc for e in rep.entries if e.h1loc is not None and e.status != "predicate_false")


def test_grid_reports_families():
    only_few = lambda p, n, rng: default_sampler(p, n, rng)[:3]
    rep = theorem_grid([5], [3], profile_sampler=only_few, budget=100)
    fam = {f["case"]: f for f in rep.family_checks}
    assert fam["n3_j_eq_m"]["nonzero"] and (fam["n3_j_eq_m"]["i"], fam["n3_j_eq_m"]["j"], fam["n3_j_eq_m"]["m"], fam["n3_j_eq_m"]["h"]) == (3, 2, 2, 1)
    assert fam["n3_j_gt_m"]["nonzero"]


def test_grid_empty_and_budget():
    rep = theorem_grid([], [2, 3])
    assert rep.entries == [] and rep.family_checks == []
    with pytest.raises(BudgetExceeded) as info:
        theorem_grid([5], [2], budget=3)
    assert len(info.value.partial.entries) == 3
    assert not info.value.partial.complete
    with pytest.raises(ValueError):
        theorem_grid([5], [2], budget=0)


# --- search -------------------------------------------------------------------------


def test_search_lower_finds_n2_example():
    certs = search_counterexamples(5, 2, {"shape": "lower", "j": 1, "m": 1, "h": 1})
    assert certs
    for c in certs:
        assert c.valid and c.checks["class_order"] == 5
        assert c.fixed_point_max_order <= 5


def test_search_diagonal_finds_nothing():
    assert search_counterexamples(5, 2, {"shape": "diagonal", "m": 1}) == []


def test_search_rejects_bad_input():
    with pytest.raises(SpecViolated):
        search_counterexamples(5, 1)
    with pytest.raises(SpecViolated):
        search_counterexamples(5, 2, {"shape": "sideways"})


# --- isogeny table ------------------------------------------------------------------


def shapes(G):
    return [row["shape"] for row in isogeny_report(G)]


def test_isogeny_j_lt_m():
    G, _ = build_family(FamilySpec(5, 5, "j_lt_m", i=4))
    rows = isogeny_report(G)
    assert [r["upper"] for r in rows] == [True, True, True, False, False]
    assert rows[-1]["shape"] == "none"


def test_isogeny_j_ge_m():
    G, _ = build_family(FamilySpec(5, 6, "j_ge_m_eq", i=5))
    assert shapes(G)[-1] == "none"
    assert [r["upper"] for r in isogeny_report(G)] == [True] * 5 + [False]


def test_isogeny_diagonal():
    M = Modulus(5, 3)
    G = close_group([Mat2.diag(1, 2, M), Mat2.diag(6, 1, M)])
    assert shapes(G) == ["diagonal"] * 3
    assert h1_loc(G).h1loc_structure == []
