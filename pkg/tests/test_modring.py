import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localdiv.errors import DimensionMismatch, ModulusMismatch, NonUnit, NoSolution, SubgroupNotContained
from localdiv.modring import (
    ModMatrix,
    Modulus,
    ResidueInt,
    abelian_structure,
    howell_form,
    in_row_space,
    inv,
    kernel,
    module_order,
    multiplicative_order,
    quotient_decomposition,
    smith_form,
    solve_linear,
    teichmuller_lift,
    val_p,
    valuation,
)
from localdiv.oracle import span, structure_from_counts


def brute_row_space(A, q):
    rows = [np.array(r, dtype=np.int64) for r in A]
    out = set()
    for coeffs in itertools.product(range(q), repeat=len(rows)):
        v = sum((c * r for c, r in zip(coeffs, rows)), np.zeros(len(rows[0]), dtype=np.int64)) % q
        out.add(tuple(int(x) for x in v))
    return out


def brute_solutions(A, b, q):
    cols = len(A[0])
    A = np.array(A, dtype=np.int64)
    b = np.array(b, dtype=np.int64) % q
    return {x for x in itertools.product(range(q), repeat=cols) if np.array_equal(A @ np.array(x) % q, b)}


def structure_by_counting(vectors, p, n):
    q = p**n
    S = span(np.array(vectors, dtype=np.int64), q)
    counts = [sum(1 for r in S if not np.any(r * p**k % q)) for k in range(n + 1)]
    return structure_from_counts(p, counts)


small_mats = st.integers(1, 3).flatmap(
    lambda r: st.integers(1, 3).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 8), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


# --- scalars -----------------------------------------------------------------


def test_modulus_rejects_composite_and_bad_exponent():
    with pytest.raises(ValueError):
        Modulus(6, 2)
    with pytest.raises(ValueError):
        Modulus(5, 0)


def test_valuation_and_units():
    assert valuation(0, 5, 3) == 3
    assert valuation(50, 5, 3) == 2
    assert valuation(7, 5, 3) == 0
    mod = Modulus(5, 3)
    assert mod.unit_part(50) == (2, 2)
    assert val_p(mod(25)) == 2
    assert val_p(mod(0)) == 3


def test_residue_arithmetic():
    mod = Modulus(5, 2)
    x, y = mod(7), mod(24)
    assert int(x + y) == 6
    assert int(x * y) == 18
    assert int(x - y) == 8
    assert int(inv(x)) * 7 % 25 == 1
    assert x**-1 == inv(x)
    with pytest.raises(NonUnit):
        inv(mod(10))
    with pytest.raises(ModulusMismatch):
        x + Modulus(5, 3)(1)


def test_multiplicative_order_and_teichmuller():
    assert multiplicative_order(2, 25) == 20
    assert multiplicative_order(6, 25) == 5
    mod = Modulus(7, 3)
    t = teichmuller_lift(3, mod)
    assert t % 7 == 3
    assert pow(t, 6, 343) == 1
    assert multiplicative_order(t, 343) == multiplicative_order(3, 7)


# --- Howell form -------------------------------------------------------------


def test_howell_example_diagonal_p():
    mod = Modulus(5, 2)
    H, U = howell_form(ModMatrix(mod, [[5, 0], [0, 5]]))
    assert [list(r) for r in H.data] == [[5, 0], [0, 5]]


def test_howell_needs_saturation_rows():
    # the row (p, 1) alone spans (0, p^(n-1)) as well: p^(n-1)*(p, 1) = (0, p^(n-1))
    mod = Modulus(3, 2)
    H, _ = howell_form(ModMatrix(mod, [[3, 1]]))
    assert in_row_space(H, (0, 3))
    assert not in_row_space(H, (0, 1))


@settings(max_examples=60, deadline=None)
@given(small_mats)
def test_howell_membership_matches_enumeration(rows):
    mod = Modulus(3, 2)
    A = ModMatrix(mod, rows)
    H, U = howell_form(A)
    assert (U @ A) == H
    space = brute_row_space(A.data, 9)
    assert brute_row_space(H.data, 9) == space if H.rows else space == {tuple([0] * A.cols)}
    for v in itertools.product(range(9), repeat=A.cols):
        assert in_row_space(H, v) == (v in space)


def test_howell_is_canonical():
    mod = Modulus(5, 2)
    A = ModMatrix(mod, [[5, 10, 3], [0, 5, 1]])
    B = ModMatrix(mod, [[5, 15, 4], [5, 10, 3], [0, 0, 0]])  # same row space
    assert brute_row_space(A.data, 25) == brute_row_space(B.data, 25)
    assert howell_form(A)[0] == howell_form(B)[0]


# --- Smith form and linear systems ------------------------------------------


@settings(max_examples=60, deadline=None)
@given(small_mats)
def test_smith_diagonalizes(rows):
    mod = Modulus(3, 2)
    A = np.array(rows, dtype=np.int64) % 9
    sm = smith_form(A, mod, want_u=True)
    D = sm.U @ A @ sm.V % 9
    for i in range(D.shape[0]):
        for j in range(D.shape[1]):
            expect = 3 ** sm.exps[i] % 9 if i == j and sm.exps[i] < 2 else 0
            assert D[i, j] == expect
    assert list(sm.exps) == sorted(sm.exps)


def test_solve_linear_example():
    mod = Modulus(5, 2)
    sol = solve_linear(ModMatrix(mod, [[5]]), [10])
    assert sol.particular == (2,)
    assert sol.kernel == [(5,)]
    with pytest.raises(NoSolution):
        solve_linear(ModMatrix(mod, [[5]]), [1])
    with pytest.raises(DimensionMismatch):
        solve_linear(ModMatrix(mod, [[5, 1]]), [1, 2])


@settings(max_examples=60, deadline=None)
@given(small_mats, st.lists(st.integers(0, 8), min_size=3, max_size=3))
def test_solve_linear_matches_enumeration(rows, rhs):
    mod = Modulus(3, 2)
    b = rhs[: len(rows)]
    sols = brute_solutions(rows, b, 9)
    A = ModMatrix(mod, rows)
    if not sols:
        with pytest.raises(NoSolution):
            solve_linear(A, b)
        return
    sol = solve_linear(A, b)
    assert sol.particular in sols
    zero = tuple([0] * A.cols)
    ker = brute_solutions(rows, [0] * len(rows), 9)
    spanned = {tuple(int(x) for x in v) for v in span(np.array(sol.kernel or [zero]), 9)}
    assert spanned == ker


def test_kernel_of_large_modulus_uses_object_dtype():
    mod = Modulus(101, 5)
    assert mod.dtype is object
    q = mod.value
    A = [[101**2, 3], [0, 101**4]]
    ker = kernel(A, mod)
    for v in ker:
        assert (A[0][0] * v[0] + A[0][1] * v[1]) % q == 0
        assert (A[1][0] * v[0] + A[1][1] * v[1]) % q == 0
    # y = p^2 s, x = -3 s + p^3 t: cyclic, generated by (-3, p^2)
    assert abelian_structure(ker, mod) == [101**5]
    with pytest.raises(NoSolution):
        solve_linear(ModMatrix(mod, A), [3, 0])  # left side is divisible by p
    x, y = solve_linear(ModMatrix(mod, A), [303, 0]).particular
    assert (A[0][0] * x + 3 * y) % q == 303
    assert A[1][1] * y % q == 0


# --- abelian structure -------------------------------------------------------


def test_structure_examples():
    mod = Modulus(5, 2)
    assert abelian_structure([(1, 0), (0, 1)], mod, modulo=[(5, 0), (0, 5)]) == [5, 5]
    assert abelian_structure([(5, 0)], mod) == [5]
    assert abelian_structure([], mod) == []
    assert module_order([5, 25]) == 125
    with pytest.raises(SubgroupNotContained):
        abelian_structure([(5, 0)], mod, modulo=[(1, 0)])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 26), min_size=3, max_size=3), min_size=1, max_size=3))
def test_structure_matches_torsion_counts(vectors):
    mod = Modulus(3, 3)
    assert abelian_structure(vectors, mod) == structure_by_counting(vectors, 3, 3)


def test_quotient_representatives_have_stated_orders():
    mod = Modulus(3, 2)
    gens = [(1, 0, 0), (0, 3, 0), (0, 0, 1)]
    modulo = [(3, 0, 0), (0, 0, 3)]
    parts = quotient_decomposition(gens, mod, modulo=modulo)
    assert [d for d, _ in parts] == [3, 3, 3]
    B = {tuple(int(x) for x in v) for v in span(np.array(modulo), 9)}
    for d, v in parts:
        assert tuple(x * d % 9 for x in v) in B
        assert tuple(x * (d // 3) % 9 for x in v) not in B
