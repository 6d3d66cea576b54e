from math import comb

import pytest

from screenalg.diffalg import DiffElem, w0
from screenalg.rootsys import parse_algebra
from screenalg.screening import v_fields
from screenalg.sepvar import (aux_operators_sl2, aux_relations_check, b_polys_sl2,
                              bigraded_character, compare_routes, enumerate_character,
                              f_alpha_normalization_sl2, product_character_tilde, pt, qt,
                              recursion_identity, round_trip_check, tilde_screenings,
                              tilde_transform)

A1, A2 = parse_algebra("A1"), parse_algebra("A2")
R = w0(A1)
T = tilde_transform(A1)
p, q, u = R.p(0), R.q(0), R.u(0)


def test_aux_operators():
    ops = aux_operators_sl2()
    assert ops["d"][0](u) == DiffElem.const(2)
    assert ops["d"][1](R.p(0, 2)) == p.scale(2 * comb(2, 0))
    assert ops["h0"](q) == q.scale(-2)
    assert aux_relations_check(A1)["ok"]


def test_tilde_in_w0():
    v = v_fields(A1)[0]
    assert T.tilde_in_w0("pt", 0, 0) == p
    assert T.tilde_in_w0("qt", 0, 0) == q
    assert T.tilde_in_w0("pt", 0, 1) == R.p(0, 1) - p * v
    assert aux_operators_sl2()["d"][1](T.tilde_in_w0("pt", 0, 1)).is_zero()


def test_b_polynomials():
    b = b_polys_sl2(2)
    two = (pt(0) * qt(0)).scale(2)
    assert b["minus"][0] == b["plus"][0] == DiffElem.const(1)
    assert b["minus"][1] == -two
    assert b["minus"][2] == T.d(-two) + (pt(0) * pt(0) * qt(0) * qt(0)).scale(4)
    # second route: B_{n+1} = -2 pt qt B_n + d~ B_n
    for n in range(2):
        assert b["minus"][n + 1] == -two * b["minus"][n] + T.d(b["minus"][n])


def test_sl2_tilde_screenings():
    G = tilde_screenings(A1)
    assert G[1].derivation()(qt(0)) == DiffElem.expo([-1])
    assert G[0].derivation()(pt(0)) == DiffElem.expo([1])
    assert G[1].derivation()(pt(0)).is_zero()


@pytest.mark.parametrize("rs", [A1, A2], ids=["A1", "A2"])
def test_routes_agree(rs):
    assert compare_routes(rs, 4)["ok"]


@pytest.mark.parametrize("rs", [A1, A2], ids=["A1", "A2"])
def test_recursion_identity(rs):
    assert recursion_identity(rs, 4)["ok"]


@pytest.mark.parametrize("rs,order", [(A1, 4), (A2, 2)], ids=["A1", "A2"])
def test_round_trip(rs, order):
    assert round_trip_check(rs, order)["ok"]


def test_f_alpha_normalization():
    r = f_alpha_normalization_sl2()
    assert r["ok"] and r["f"] == (pt(0) * qt(0)).scale(4)


def test_bigraded_character_entries():
    ser = enumerate_character(A1, 0, 3)
    assert ser[(0, 0, (0,))] == 1
    # the monomial qt alone (weight -alpha in root coordinates)
    assert ser[(0, 1, (-1,))] == 1


@pytest.mark.parametrize("order,degree", [(3, 6), (6, 8)])
def test_bigraded_character_a1(order, degree):
    # the enumeration and the product agree after u <-> u^-1
    lhs = enumerate_character(A1, order, degree)
    flipped = {(s, d, tuple(-x for x in w)): c for (s, d, w), c in lhs.items()}
    assert flipped == product_character_tilde(A1, order, degree)
    assert bigraded_character(A1, order, degree)["involution"] is True


def test_bigraded_character_a2():
    assert bigraded_character(A2, 4, 5)["ok"]


def test_factorization_through_v():
    # G_i (R(pt, qt) P(v)) = (G_i R) P(v) with v killed by every screening
    from screenalg.screening import classical_screening
    v = v_fields(A1)[0]
    Rt = T.tilde_in_w0("pt", 0, 1) * q
    G = classical_screening(A1, 0)
    assert G(Rt * v * v) == G(Rt) * v * v
