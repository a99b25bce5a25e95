import pytest

from localdiv.cohomology import h1_loc
from localdiv.errors import NoDiagonalDeviation, NonInvertibleGenerator, PreconditionViolated
from localdiv.families import FamilySpec, build_family
from localdiv.matgroup import DIAGONAL, LOWER, UPPER, Mat2, close_group, triangularity
from localdiv.modring import Modulus
from localdiv.structure import (
    check_preconditions,
    conjugate,
    extract_parameters,
    theorem3_predicate,
    vanishing_predicate,
)

M25 = Modulus(5, 2)


def test_preconditions_lower_example():
    G = close_group([Mat2.diag(1, 2, M25), Mat2(1, 0, 5, 1, M25)])
    rep = check_preconditions(G)
    assert rep.g1_cyclic_ok
    assert rep.ord_lambda1 == 4
    assert rep.g2_triangularity == LOWER
    assert rep.satisfied


def test_preconditions_family():
    G, _ = build_family(FamilySpec(5, 3, "j_lt_m"))
    assert check_preconditions(G).satisfied


def test_preconditions_full_gl2_not_cyclic():
    G = close_group([Mat2.diag(2, 1, M25), Mat2(1, 1, 0, 1, M25), Mat2(0, 1, 1, 0, M25)])
    assert G.order == 300000  # |GL_2(Z/25Z)|
    rep = check_preconditions(G)
    assert not rep.g1_cyclic_ok
    assert not rep.satisfied
    with pytest.raises(PreconditionViolated):
        extract_parameters(G)


def test_preconditions_small_lambda_order():
    rep = check_preconditions(close_group([Mat2.diag(1, 24, M25)]))
    assert rep.ord_lambda1 == 2
    assert not rep.satisfied
    assert any("ord(lambda1)" in note for note in rep.notes)


def test_extract_n3_eq():
    G, _ = build_family(FamilySpec(5, 3, "n3_j_eq_m", alpha=2, theta=0))
    prof = extract_parameters(G)
    assert (prof.i, prof.j, prof.m, prof.h) == (3, 2, 2, 1)
    assert prof.delta.a11 == 1 + 25
    assert prof.delta.a22 == 1 + 5**prof.h * prof.d


def test_extract_j_lt_m():
    G, _ = build_family(FamilySpec(5, 3, "j_lt_m", i=3))
    prof = extract_parameters(G)
    assert (prof.i, prof.j, prof.m, prof.h) == (3, 1, 2, 1)
    assert not theorem3_predicate(prof)


def test_extract_diagonal_only():
    prof = extract_parameters(close_group([Mat2.diag(6, 6, M25)]))
    assert (prof.i, prof.j, prof.m, prof.h) == (2, 2, 1, 1)


def test_profile_invariants_on_families():
    for case, n in [("j_lt_m", 4), ("j_ge_m_eq", 4), ("j_ge_m_gt", 5), ("n3_j_gt_m", 3)]:
        G, _ = build_family(FamilySpec(5, n, case))
        prof = extract_parameters(G)
        q = 5**n
        assert 1 <= prof.i <= n and 1 <= prof.j <= n and 1 <= prof.m <= n and 1 <= prof.h <= n
        assert prof.delta.a11 == (1 + 5**prof.m) % q
        assert prof.delta.a22 == (1 + 5**prof.h * prof.d) % q
        assert prof.delta.a12 == prof.delta.a21 == 0
        if prof.j < n:
            assert Modulus(5, n).val(prof.tau_l.a21) == prof.j
        if prof.i < n:
            assert Modulus(5, n).val(prof.tau_u.a12) == prof.i


def test_no_diagonal_deviation_means_trivial_h1_loc():
    G = close_group([Mat2.diag(1, 2, M25), Mat2(1, 0, 5, 1, M25)])
    with pytest.raises(NoDiagonalDeviation):
        extract_parameters(G)
    assert h1_loc(G).h1loc_structure == []


def test_entry_rule_option():
    G, _ = build_family(FamilySpec(5, 3, "j_lt_m"))
    assert extract_parameters(G, entry_rule="gt1").j == 1
    with pytest.raises(ValueError):
        extract_parameters(G, entry_rule="bogus")


def test_predicate_examples():
    assert vanishing_predicate(1, 1, 1, 1)
    assert not vanishing_predicate(3, 1, 2, 1)
    assert vanishing_predicate(2, 2, 1, 1)


def test_conjugate():
    up = close_group([Mat2.diag(1, 2, M25), Mat2(1, 5, 0, 1, M25)])
    assert triangularity(up) == UPPER
    assert set(conjugate(up, Mat2.identity(M25))._entries) == set(up._entries)
    swapped = conjugate(up, Mat2(0, 1, 1, 0, M25))
    assert triangularity(swapped) == LOWER
    with pytest.raises(NonInvertibleGenerator):
        conjugate(up, Mat2(5, 0, 0, 1, M25))


def test_diagonal_conjugation_preserves_profile():
    G, _ = build_family(FamilySpec(5, 3, "j_lt_m"))
    base = extract_parameters(G)
    H = conjugate(G, Mat2.diag(1, 7, Modulus(5, 3)))
    prof = extract_parameters(H)
    assert (prof.i, prof.j, prof.m, prof.h) == (base.i, base.j, base.m, base.h)
    assert triangularity(close_group([Mat2.diag(6, 11, M25)])) == DIAGONAL
