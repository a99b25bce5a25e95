import itertools
import random

import pytest

from localdiv.errors import CapExceeded, ModulusMismatch, NonInvertibleGenerator
from localdiv.matgroup import (
    DIAGONAL,
    LOWER,
    NONE,
    UPPER,
    Mat2,
    TorsionPoint,
    close_group,
    cyclic_subgroup_sets,
    cyclic_subgroups,
    fixed_points,
    is_lower,
    is_upper,
    reduce_mod,
    triangularity,
)
from localdiv.modring import Modulus

M25 = Modulus(5, 2)


def D(a, b, mod=M25):
    return Mat2.diag(a, b, mod)


def brute_closure(gens, q):
    """Plain set-based closure under right multiplication."""
    ident = (1, 0, 0, 1)
    seen = {ident}
    frontier = [ident]
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                a, b, c, d = x
                e, f, h, k = g
                y = ((a * e + b * h) % q, (a * f + b * k) % q, (c * e + d * h) % q, (c * f + d * k) % q)
                if y not in seen:
                    seen.add(y)
                    new.append(y)
        frontier = new
    return seen


def test_torsion_point_arithmetic_and_order():
    P = TorsionPoint(5, 10, M25)
    Q = TorsionPoint(1, 0, M25)
    assert (P + Q).coords() == (6, 10)
    assert (-P).coords() == (20, 15)
    assert (5 * P).is_zero()
    assert P.exact_order() == 5
    assert Q.exact_order() == 25
    assert TorsionPoint.zero(M25).exact_order() == 1


def test_mat2_basics():
    A = Mat2.from_rows([[2, 1], [1, 1]], M25)
    assert A.det() == 1
    assert (A @ A.inverse()).is_identity()
    assert A**0 == Mat2.identity(M25)
    assert A**3 == A @ A @ A
    assert (A**-2) @ (A**2) == Mat2.identity(M25)
    assert (A @ TorsionPoint(1, 0, M25)).coords() == (2, 1)
    assert A.reduce(1).modulus == Modulus(5, 1)
    with pytest.raises(ModulusMismatch):
        A @ Mat2.identity(Modulus(5, 3))


def test_cyclic_diagonal_example():
    G = close_group([D(1, 2)])
    assert G.order == 20
    assert len(cyclic_subgroups(G)) == 6  # one per divisor of 20
    assert triangularity(G) == DIAGONAL


def test_lower_unipotent():
    tau = Mat2(1, 0, 5, 1, M25)
    G = close_group([tau])
    assert G.order == 5
    assert triangularity(G) == LOWER
    assert G.element_order(tau) == 5


def test_closure_matches_brute_force():
    rng = random.Random(7)
    for _ in range(25):
        gens = []
        while len(gens) < 2:
            g = Mat2(*(rng.randrange(25) for _ in range(4)), M25)
            if g.is_invertible():
                gens.append(g)
        try:
            G = close_group(gens, cap=5000)
        except CapExceeded:
            continue
        assert set(G._entries) == brute_closure([g.entries for g in gens], 25)


def test_words_evaluate_to_elements():
    G = close_group([D(1, 2), Mat2(1, 0, 5, 1, M25)])
    assert G.order == 100
    for sigma in G.elements:
        assert G.evaluate(G.word(sigma)) == sigma
    assert G.word(G.identity) == ()


def test_element_set_independent_of_generator_order():
    a, b = D(1, 2), Mat2(1, 5, 0, 1, M25)
    assert set(close_group([a, b])._entries) == set(close_group([b, a])._entries)


def test_cap_and_bad_generators():
    with pytest.raises(CapExceeded):
        close_group([D(1, 2)], cap=10)
    with pytest.raises(NonInvertibleGenerator):
        close_group([Mat2(5, 0, 0, 1, M25)])
    with pytest.raises(ModulusMismatch):
        close_group([D(1, 2), D(1, 2, Modulus(5, 3))])
    assert close_group([], modulus=M25).order == 1


def test_reduce_mod():
    G = close_group([D(1, 2), Mat2(1, 0, 5, 1, M25)])
    G1 = reduce_mod(G, 1)
    assert G1.order == 4
    assert triangularity(G1) == DIAGONAL


def test_triangularity_shapes():
    assert triangularity(close_group([Mat2(1, 1, 0, 1, M25)])) == UPPER
    assert triangularity(close_group([Mat2(1, 1, 0, 1, M25), Mat2(1, 0, 1, 1, M25)], cap=10**6)) == NONE
    assert is_upper(DIAGONAL) and is_lower(DIAGONAL)
    assert not is_upper(LOWER) and not is_lower(UPPER)


def brute_fixed(G):
    q = G.modulus.value
    out = []
    for x, y in itertools.product(range(q), repeat=2):
        P = TorsionPoint(x, y, G.modulus)
        if all((g @ P) == P for g in G.generators):
            out.append(P)
    return out


@pytest.mark.parametrize(
    "gens",
    [
        [D(1, 2)],
        [D(1, 2), Mat2(1, 0, 5, 1, M25)],
        [D(6, 11)],
        [D(2, 3)],
        [Mat2(1, 5, 0, 1, M25), Mat2(1, 0, 5, 1, M25)],
        [],
    ],
)
def test_fixed_points_match_enumeration(gens):
    G = close_group(gens, modulus=M25)
    pts, max_order = fixed_points(G)
    brute = brute_fixed(G)
    assert max(P.exact_order() for P in brute) == max_order
    for P in pts:
        assert all((g @ P) == P for g in G.generators)


def test_fixed_point_example():
    G = close_group([D(1, 2), Mat2(1, 0, 5, 1, M25)])
    pts, max_order = fixed_points(G)
    assert max_order == 5
    assert {P.coords() for P in brute_fixed(G)} == {(5 * k, 0) for k in range(5)}


def test_cyclic_subgroups_agree_with_sets():
    G = close_group([D(1, 2), Mat2(1, 0, 5, 1, M25)])
    sets = cyclic_subgroup_sets(G)
    pairs = cyclic_subgroups(G)
    assert len(sets) == len(pairs)
    assert sorted(len(s) for s in sets) == sorted(o for _, o in pairs)
