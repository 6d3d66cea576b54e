from fractions import Fraction

import pytest

from screenalg.conserved import (_monomial, commutativity_check, flow_match, gauge_consistency,
                                 graded_basis, iom_candidates, is_integral, saturation_check,
                                 twisted_commutation)
from screenalg.diffalg import DiffElem, integrate
from screenalg.errors import ConsistencyError
from screenalg.rootsys import parse_algebra
from screenalg.sepvar import pt, qt, tilde_transform

A1, A2 = parse_algebra("A1"), parse_algebra("A2")
T = tilde_transform(A1)
p, q = pt(0), qt(0)


def key(x):
    (k,) = x.terms
    return k[0]


def test_graded_basis_examples():
    assert graded_basis(T, 0, (0,)) == [()]
    assert graded_basis(T, 1, (0,)) == [key(p * q)]
    want = sorted(key(x) for x in (pt(0, 1) * q, p * qt(0, 1), p * p * q * q))
    assert graded_basis(T, 2, (0,)) == want


@pytest.mark.parametrize("spin", [1, 2, 3, 4])
def test_sl2_one_candidate_per_spin(spin):
    cands = iom_candidates("A1", spin)
    assert len(cands) == 1
    X = cands[0].density
    assert is_integral(A1, X)
    assert integrate(X, T, allow_t=False) is None


def test_sl2_spin_one_density():
    (c,) = iom_candidates("A1", 1)
    assert c.density == -(pt(0, 1) * q) + p * p * q * q


@pytest.mark.parametrize("spin", [1, 2])
def test_a2_two_candidates(spin):
    cands = iom_candidates("A2", spin)
    assert len(cands) == 2
    for c in cands:
        assert is_integral(A2, c.density)


def test_non_integral_rejected():
    assert not is_integral(A1, p * q)


def test_commutativity():
    sl2 = [c for s in range(1, 5) for c in iom_candidates("A1", s)]
    r = commutativity_check(sl2)
    assert r["ok"] and all(all(row) for row in r["matrix"])
    a2 = [c for s in (1, 2) for c in iom_candidates("A2", s)]
    assert commutativity_check(a2)["ok"]


def test_flow_match_values():
    alphas = [flow_match(iom_candidates("A1", n)[0].density, n) for n in (1, 2, 3)]
    assert all(a != 0 for a in alphas)
    assert alphas == [1, -1, 1]


def test_flow_match_negative_control():
    X = iom_candidates("A1", 2)[0].density + (p * p * q * q).scale(5)
    with pytest.raises(ConsistencyError):
        flow_match(X, 2)


@pytest.mark.parametrize("name", ["A1", "A2"])
def test_twisted_commutation_is_trivial(name):
    rs = parse_algebra(name)
    for s in (1, 2):
        for c in iom_candidates(name, s):
            assert all(f.is_zero() for f in twisted_commutation(rs, c.density).values())


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_gauge_consistency(n):
    r = gauge_consistency(n)
    assert r["ok"] and r["scale"] == (-1) ** (n - 1) * (n - 1)


def test_gauge_raw_frame_is_not_conserved():
    assert not gauge_consistency(3, frame="raw")["ok"]


def test_saturation():
    assert saturation_check(A1, 3)["stable"]
