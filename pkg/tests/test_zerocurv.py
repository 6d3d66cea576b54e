from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from screenalg.diffalg import DiffElem, spin_of
from screenalg.errors import ConsistencyError
from screenalg.rootsys import parse_algebra
from screenalg.sepvar import pt, qt, tilde_screenings, tilde_transform
from screenalg.zerocurv import (LoopMatrix, akns_F, akns_flow, commutator_on, depth2_comparison,
                                dressed_connection_sl2, dressing, E_var, F_var,
                                flow_commutativity, general_flow, kernel_check_sl2, l_operator,
                                makns_flow, nls_from_json, nls_reduction, nls_to_json,
                                nonlocal_commutation, nonlocal_residual, nonlocal_zero_curvature,
                                resolvent, rho_flow, screening_commutation, spin_homogeneous,
                                makns2_report, _gens, _resolvent)

A1, A2 = parse_algebra("A1"), parse_algebra("A2")
HALF = DiffElem.const(Fraction(1, 2))
p, q = pt(0), qt(0)


def test_dressed_connection_entries():
    A = dressed_connection_sl2()
    assert A.entry(1, 0) == {0: p}
    assert A.entry(0, 1) == {-1: -q}
    assert A.trace() == {}
    assert A == LoopMatrix({-1: [[HALF, -q], [DiffElem(), -HALF]],
                            0: [[p * q, DiffElem()], [p, -(p * q)]]}, 2)


def test_general_dressing_reduces_to_sl2():
    assert dressing("A1").A == dressed_connection_sl2()


def test_loop_matrix_bracket_is_antisymmetric():
    A = dressed_connection_sl2()
    L = l_operator()
    assert (A.bracket(L) + L.bracket(A)).is_zero()


@pytest.mark.parametrize("order", [2, 4, 6])
def test_resolvent_identities(order):
    R = _resolvent("A1", order)
    assert R.commutator_defect().is_zero()
    assert R.casimir_defect().is_zero()


def test_resolvent_seed():
    R = resolvent(order=2)
    m = R.M[-1]
    assert m[0][0] == HALF and m[1][1] == -HALF


def test_resolvent_a2():
    R = _resolvent("A2", 3)
    assert R.commutator_defect().is_zero()


def test_depth2_derived_differs_from_display_only_at_known_entries():
    cmp = depth2_comparison()
    diff = cmp["differences"]
    p1, q1 = pt(0, 1), qt(0, 1)
    assert diff[(0, 0)] == {0: p * q1 - p1 * q + p * p * q * q}
    assert diff[(1, 1)] == {0: -(p * q1 - p1 * q + p * p * q * q)}
    assert diff[(0, 1)] == {-1: q1, 0: -q1}
    assert diff[(1, 0)] == {}


def test_flow_one_is_translation():
    D = makns_flow(1)
    assert D.images[("pt", 0)] == pt(0, 1)
    assert D.images[("qt", 0)] == qt(0, 1)


def test_flow_two_p_equation():
    D = makns_flow(2)
    assert D.images[("pt", 0)] == pt(0, 2) - (p ** 3 * q ** 2).scale(2) - (p ** 2 * qt(0, 1)).scale(2)


def test_flow_two_q_equation_and_report():
    D = makns_flow(2)
    derived = -qt(0, 2) + (q ** 3 * p ** 2).scale(2) - (q ** 2 * pt(0, 1)).scale(2)
    assert D.images[("qt", 0)] == derived
    rep = makns2_report()
    assert rep["p_matches"]
    assert rep["q2p1_coefficient"] == -2
    assert not rep["q_matches"]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_flow_spin(n):
    assert spin_homogeneous(makns_flow(n), n)


def test_flow_commutativity():
    assert flow_commutativity(4, order=1)["ok"]


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2))
def test_flows_commute_pairwise(n, m, order):
    ring = dressing("A1").ring
    assert not commutator_on(makns_flow(n), makns_flow(m), _gens(ring, order))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_flows_commute_with_tilde_screenings_sl2(n):
    assert screening_commutation(A1, n, order=1)["ok"]


@pytest.mark.parametrize("n", [1, 2])
def test_flows_commute_with_tilde_screenings_a2(n):
    assert screening_commutation(A2, n, order=0)["ok"]


def test_general_flow_sl2_matches_makns():
    for n in (1, 2, 3):
        assert general_flow(A1, 0, n).images == makns_flow(n).images


def test_a2_cartan_flows():
    ring = tilde_transform(A2)
    f1, f2 = general_flow(A2, 0, 1), general_flow(A2, 1, 1)
    vars_ = _gens(ring, 2)
    assert not commutator_on(f1, f2, vars_)
    # the rho direction is d~
    for v in vars_:
        x = DiffElem.var(*v)
        assert f1(x) + f2(x) == ring.d(x)
    assert not commutator_on(general_flow(A2, 0, 2), general_flow(A2, 1, 2), _gens(ring, 1))


def test_rho_flow_a2_is_translation_at_depth_one():
    ring = tilde_transform(A2)
    D = rho_flow(A2, 1)
    for v in _gens(ring, 1):
        assert D(DiffElem.var(*v)) == ring.d(DiffElem.var(*v))


# -- AKNS -------------------------------------------------------------------------


def test_kernel_variables():
    assert akns_F() == p * q * q + qt(0, 1)
    assert kernel_check_sl2() == {"E": True, "F": True}


def test_akns_two():
    A = akns_flow(2)
    E, F = E_var(), F_var()
    assert A.gen_images[("E", 0)] == E_var(2) - (E * E * F).scale(2)
    assert A.gen_images[("F", 0)] == -F_var(2) + (F * F * E).scale(2)


def test_akns_one():
    assert akns_flow(1).gen_images[("E", 0)] == E_var(1)


def test_l_operator():
    L = l_operator()
    assert L.entry(0, 1) == {0: F_var()}
    assert L.entry(0, 0) == {-1: HALF}
    assert L.trace() == {}


def test_nls():
    r = nls_reduction(akns_flow(2), 2)
    assert r["text"] == "i \\partial_{\\tau_{2}} E = E'' - 2 E |E|^{2}"
    assert nls_reduction(akns_flow(1), 1)["text"] == "i \\partial_{\\tau_{1}} E = iE'"
    rec, rhs = nls_from_json(nls_to_json(r))
    assert rec == r and rhs == akns_flow(2).gen_images[("E", 0)]


# -- nonlocal ---------------------------------------------------------------------


def test_nonlocal_b_entry():
    _A, B = nonlocal_zero_curvature()
    assert B.entry(1, 0) == {1: DiffElem.expo([1])}


def test_nonlocal_commutes_with_makns():
    assert nonlocal_commutation(2, 1) == []
    assert nonlocal_commutation(3, 1) == []


def test_nonlocal_residual_reversed_sign_vanishes():
    assert nonlocal_residual(-1).is_zero()


def test_nonlocal_residual_printed_sign_is_reported():
    r = nonlocal_residual(1)
    assert not r.is_zero()
    assert sorted(r.support()) == [-1, 0]
