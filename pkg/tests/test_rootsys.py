from fractions import Fraction

import pytest

from screenalg.rootsys import (ConfigError, build_root_system, defining_rep, dual_basis,
                               inner_product, lie_algebra, parse_algebra, rho_vee,
                               structure_constants)


def _commutator(a, b):
    n = len(a)
    ab = [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    ba = [[sum(b[i][k] * a[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return [[ab[i][j] - ba[i][j] for j in range(n)] for i in range(n)]


def test_rank_one():
    rs = build_root_system("A", 1)
    assert rs.positive_roots == ((1,),)
    assert inner_product(rs, (1,), (1,)) == 2
    assert rs.h_dual == 2


def test_a2_roots():
    rs = build_root_system("A", 2)
    assert len(rs.positive_roots) == 3
    assert rs.highest_root == (1, 1)
    assert inner_product(rs, (1, 0), (0, 1)) == -1


@pytest.mark.parametrize("series,rank,count", [("A", 1, 1), ("A", 2, 3), ("A", 3, 6), ("A", 4, 10),
                                               ("D", 4, 12), ("D", 5, 20)])
def test_positive_root_count(series, rank, count):
    rs = build_root_system(series, rank)
    assert len(rs.positive_roots) == count
    assert inner_product(rs, rs.highest_root, rs.highest_root) == 2


@pytest.mark.parametrize("name", ["A1", "A2", "A3", "D4"])
def test_cartan_entries(name):
    rs = parse_algebra(name)
    for i in range(rs.rank):
        for j in range(rs.rank):
            ai, aj = rs.simple(i), rs.simple(j)
            assert rs.cartan[i][j] == 2 * inner_product(rs, ai, aj) / inner_product(rs, ai, ai)


def test_zero_pairing():
    rs = parse_algebra("A3")
    assert inner_product(rs, (0, 0, 0), (1, 1, 0)) == 0


def test_structure_constants():
    assert not structure_constants(parse_algebra("A1")).c
    rs = parse_algebra("A2")
    c = structure_constants(rs)
    a1, a2 = (1, 0), (0, 1)
    assert c(a1, a2) == -c(a2, a1)
    assert abs(c(a1, a2)) == 1


@pytest.mark.parametrize("name", ["A2", "A3", "D4"])
def test_jacobi(name):
    assert not lie_algebra(parse_algebra(name)).jacobi_violations()


@pytest.mark.parametrize("name", ["A1", "A2", "A3"])
def test_rho_vee_and_dual_basis(name):
    rs = parse_algebra(name)
    rho = rho_vee(rs)
    hs = dual_basis(rs)
    for j in range(rs.rank):
        aj = rs.simple(j)
        assert inner_product(rs, rho, aj) == 1
        for i, h in enumerate(hs):
            assert inner_product(rs, h, aj) == (1 if i == j else 0)


def test_rho_vee_a2_on_highest_root():
    rs = parse_algebra("A2")
    rho = rho_vee(rs)
    assert inner_product(rs, rho, (1, 1)) == 2


def test_defining_rep_sl2():
    rep = defining_rep(parse_algebra("A1"))
    e, f, (h,) = rep["e"][(1,)], rep["f"][(1,)], rep["h"]
    assert _commutator(e, f) == h
    assert sum(e[i][j] * f[j][i] for i in range(2) for j in range(2)) == 1


def test_defining_rep_a2_matches_table():
    rs = parse_algebra("A2")
    rep = defining_rep(rs)
    g = lie_algebra(rs)
    mats = {("e", rs.index[r]): m for r, m in rep["e"].items()}
    mats.update({("f", rs.index[r]): m for r, m in rep["f"].items()})
    mats.update({("h", i): m for i, m in enumerate(rep["h"])})
    size = rep["size"]
    for la in g.basis:
        for lb in g.basis:
            br = g.bracket({la: 1}, {lb: 1})
            want = [[Fraction(0)] * size for _ in range(size)]
            for lab, c in br.items():
                for i in range(size):
                    for j in range(size):
                        want[i][j] += c * mats[lab][i][j]
            assert _commutator(mats[la], mats[lb]) == want, (la, lb)


def test_parse_errors():
    with pytest.raises(ConfigError):
        parse_algebra("sl2")
    with pytest.raises(ConfigError):
        parse_algebra("B2")
