"""Root systems of types A and D with exact structure constants.

Roots are integer tuples in the basis of simple roots.  The bilinear form is
normalized so that every root has square length 2, which for simply-laced
algebras is the same as (alpha_max, alpha_max) = 2.

Structure constants come from a bimultiplicative sign function on the root
lattice (the Frenkel-Kac construction).  With E_alpha for every root,

    [h, E_a] = a(h) E_a,   [E_a, E_-a] = -a,   [E_a, E_b] = eps(a, b) E_{a+b},

and we put e_a = E_a, f_a = -E_{-a}, so that (e_a, f_a) = 1 and
[e_a, f_a] = a.  The table c is defined by [e_a, e_b] = -c[a, b] e_{a+b}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product


class ConfigError(ValueError):
    """Unsupported algebra or malformed configuration."""


Root = tuple


def _cartan_matrix(series, rank):
    a = [[0] * rank for _ in range(rank)]
    for i in range(rank):
        a[i][i] = 2
    if series == "A":
        for i in range(rank - 1):
            a[i][i + 1] = a[i + 1][i] = -1
    else:
        for i in range(rank - 2):
            a[i][i + 1] = a[i + 1][i] = -1
        a[rank - 3][rank - 1] = a[rank - 1][rank - 3] = -1
    return a


@dataclass(frozen=True)
class RootSystem:
    series: str
    rank: int
    cartan: tuple
    positive_roots: tuple
    highest_root: tuple
    marks: tuple
    h_dual: int
    index: dict = field(compare=False, repr=False)

    @property
    def name(self):
        return f"{self.series}{self.rank}"

    @property
    def simple_roots(self):
        return self.positive_roots[: self.rank]

    def simple(self, i):
        return tuple(1 if j == i else 0 for j in range(self.rank))

    def is_root(self, v):
        v = tuple(v)
        return v in self.index or tuple(-x for x in v) in self.index

    def height(self, v):
        return sum(v)

    def to_json(self):
        table = structure_constants(self)
        doc = {
            "algebra": self.name,
            "cartan": [list(r) for r in self.cartan],
            "positive_roots": [list(r) for r in self.positive_roots],
            "highest_root": list(self.highest_root),
            "h_dual": self.h_dual,
            "structure_constants": [
                [list(a), list(b), c] for (a, b), c in sorted(table.c.items())
            ],
        }
        return json.dumps(doc, sort_keys=True)


def build_root_system(series, rank):
    """Build the root system of A_rank or D_rank."""
    if series not in ("A", "D"):
        raise ConfigError(f"unsupported series {series!r}; only A and D are simply-laced here")
    if not isinstance(rank, int) or rank < 1 or (series == "D" and rank < 3):
        raise ConfigError(f"unsupported rank {rank!r} for series {series}")
    cartan = _cartan_matrix(series, rank)

    def form(u, v):
        return sum(u[i] * cartan[i][j] * v[j] for i in range(rank) for j in range(rank))

    # For simply-laced types the roots are exactly the norm-2 lattice vectors,
    # so b + alpha_i is a root iff (b, alpha_i) = -1.
    simple = [tuple(1 if j == i else 0 for j in range(rank)) for i in range(rank)]
    found = set(simple)
    layer = list(simple)
    while layer:
        nxt = []
        for b in layer:
            for i in range(rank):
                if form(b, simple[i]) == -1:
                    c = tuple(b[j] + (1 if j == i else 0) for j in range(rank))
                    if c not in found:
                        found.add(c)
                        nxt.append(c)
        layer = nxt
    # height first, then lexicographic (alpha_1 before alpha_2, ...)
    roots = sorted(found, key=lambda r: (sum(r), tuple(-x for x in r)))
    top = roots[-1]
    expected = rank * (rank + 1) // 2 if series == "A" else rank * (rank - 1)
    if len(roots) != expected:
        raise AssertionError("root enumeration failed")
    return RootSystem(
        series=series,
        rank=rank,
        cartan=tuple(tuple(r) for r in cartan),
        positive_roots=tuple(roots),
        highest_root=top,
        marks=top,
        h_dual=1 + sum(top),
        index={r: k for k, r in enumerate(roots)},
    )


def parse_algebra(name):
    """'A1', 'D4', ... -> RootSystem."""
    name = str(name).strip()
    if len(name) < 2 or not name[1:].isdigit():
        raise ConfigError(f"cannot parse algebra {name!r}")
    return build_root_system(name[0].upper(), int(name[1:]))


def inner_product(rs, lam, mu):
    """Normalized form on the root lattice (coordinates in simple roots)."""
    if len(lam) != rs.rank or len(mu) != rs.rank:
        raise ValueError("dimension mismatch")
    a = rs.cartan
    return Fraction(
        sum(lam[i] * a[i][j] * mu[j] for i in range(rs.rank) for j in range(rs.rank))
    )


def _solve(mat, rhs):
    n = len(mat)
    m = [[Fraction(x) for x in row] + [Fraction(r)] for row, r in zip(mat, rhs)]
    for c in range(n):
        piv = next(r for r in range(c, n) if m[r][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        pv = m[c][c]
        m[c] = [x / pv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return tuple(m[r][n] for r in range(n))


def rho_vee(rs):
    """rho-check in simple-root coordinates: (rho, alpha_i) = 1 for all i."""
    return _solve(rs.cartan, [1] * rs.rank)


def dual_basis(rs):
    """h^i in simple-root coordinates, (h^i, alpha_j) = delta_ij."""
    cols = []
    for i in range(rs.rank):
        cols.append(_solve(rs.cartan, [1 if j == i else 0 for j in range(rs.rank)]))
    return tuple(cols)


def _eps(rs, a, b):
    # bimultiplicative sign with eps(i,i) = -1 and eps(i,j) = -1 for i<j linked
    s = 0
    for i in range(rs.rank):
        for j in range(rs.rank):
            if a[i] == 0 or b[j] == 0:
                continue
            if i == j or (i < j and rs.cartan[i][j] == -1):
                s += a[i] * b[j]
    return -1 if s % 2 else 1


@dataclass(frozen=True)
class StructureTable:
    rs: RootSystem
    c: dict

    def __call__(self, a, b):
        return self.c.get((tuple(a), tuple(b)), 0)

    def ef(self, i, alpha):
        """Coefficient k in [e_i, f_alpha] = k f_{alpha - alpha_i}."""
        beta = tuple(x - y for x, y in zip(alpha, self.rs.simple(i)))
        return self.c.get((self.rs.simple(i), beta), 0)


_TABLES = {}


def structure_constants(rs):
    """c[a, b] for positive a, b with a + b a root."""
    key = (rs.series, rs.rank)
    if key in _TABLES:
        return _TABLES[key]
    if rs.series not in ("A", "D"):
        raise ConfigError("structure constants are implemented for simply-laced algebras")
    c = {}
    for a, b in product(rs.positive_roots, repeat=2):
        s = tuple(x + y for x, y in zip(a, b))
        if s in rs.index:
            c[(a, b)] = -_eps(rs, a, b)
    tab = StructureTable(rs, c)
    _TABLES[key] = tab
    return tab


class LieAlgebra:
    """Chevalley-type basis ('e', k), ('h', i), ('f', k) with exact brackets.

    Elements are dicts label -> coefficient; coefficients only need ring
    operations, so polynomial coefficients are fine.
    """

    def __init__(self, rs):
        self.rs = rs
        self.roots = rs.positive_roots
        n = len(self.roots)
        self.basis = (
            [("e", k) for k in range(n)]
            + [("h", i) for i in range(rs.rank)]
            + [("f", k) for k in range(n)]
        )
        self._table = {}
        for x in self.basis:
            for y in self.basis:
                self._table[(x, y)] = self._basis_bracket(x, y)

    def _root_of(self, label):
        kind, k = label
        r = self.roots[k]
        return r if kind == "e" else tuple(-v for v in r)

    def _E(self, root):
        # E_root in terms of e/f labels
        if root in self.rs.index:
            return {("e", self.rs.index[root]): 1}
        neg = tuple(-v for v in root)
        return {("f", self.rs.index[neg]): -1}

    def _basis_bracket(self, x, y):
        rs = self.rs
        if x[0] == "h" and y[0] == "h":
            return {}
        if x[0] == "h":
            r = self._root_of(y)
            w = inner_product(rs, rs.simple(x[1]), r)
            return {y: w} if w else {}
        if y[0] == "h":
            return {k: -v for k, v in self._basis_bracket(y, x).items()}
        # both root vectors; x = sx E_a, y = sy E_b
        sx = 1 if x[0] == "e" else -1
        sy = 1 if y[0] == "e" else -1
        a, b = self._root_of(x), self._root_of(y)
        s = tuple(u + v for u, v in zip(a, b))
        if all(v == 0 for v in s):
            # [E_a, E_-a] = -a
            return {("h", i): Fraction(-sx * sy * a[i]) for i in range(rs.rank) if a[i]}
        if not rs.is_root(s):
            return {}
        out = {}
        for lab, co in self._E(s).items():
            out[lab] = Fraction(sx * sy * _eps(rs, a, b) * co)
        return out

    def bracket(self, x, y):
        out = {}
        for lx, cx in x.items():
            for ly, cy in y.items():
                for lz, cz in self._table[(lx, ly)].items():
                    t = cz * (cx * cy)
                    out[lz] = out[lz] + t if lz in out else t
        return {k: v for k, v in out.items() if v != 0}

    def form(self, x, y):
        rs = self.rs
        tot = 0
        for lx, cx in x.items():
            for ly, cy in y.items():
                if lx[0] == "h" and ly[0] == "h":
                    g = rs.cartan[lx[1]][ly[1]]
                elif {lx[0], ly[0]} == {"e", "f"} and lx[1] == ly[1]:
                    g = 1
                else:
                    continue
                if g:
                    tot = tot + g * (cx * cy)
        return tot

    def cartan_element(self, coords):
        """Element of h from simple-root coordinates (h_i identified with alpha_i)."""
        return {("h", i): Fraction(v) for i, v in enumerate(coords) if v}

    def jacobi_violations(self):
        bad = []
        B = self.basis
        for i, x in enumerate(B):
            for j in range(i + 1, len(B)):
                y = B[j]
                yz_cache = {}
                for k in range(j + 1, len(B)):
                    z = B[k]
                    X, Y, Z = {x: 1}, {y: 1}, {z: 1}
                    t1 = self.bracket(X, self.bracket(Y, Z))
                    t2 = self.bracket(Y, self.bracket(Z, X))
                    t3 = self.bracket(Z, self.bracket(X, Y))
                    tot = dict(t1)
                    for t in (t2, t3):
                        for lab, v in t.items():
                            tot[lab] = tot.get(lab, 0) + v
                    if any(v != 0 for v in tot.values()):
                        bad.append((x, y, z))
        return bad


_ALGEBRAS = {}


def lie_algebra(rs):
    key = (rs.series, rs.rank)
    if key not in _ALGEBRAS:
        _ALGEBRAS[key] = LieAlgebra(rs)
    return _ALGEBRAS[key]


def _matmul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _unit(n, i, j):
    m = [[Fraction(0)] * n for _ in range(n)]
    m[i][j] = Fraction(1)
    return m


def defining_rep(rs):
    """Matrices of e_alpha, f_alpha, h_i for sl(rank+1).

    e_alpha = s E_{a,b} and f_alpha = s E_{b,a} for alpha = eps_a - eps_b,
    with signs s fixed so the commutators reproduce the structure table.
    The trace form equals the normalized form (constant 1).
    """
    if rs.series != "A":
        raise ConfigError("defining representation is implemented for type A only")
    n = rs.rank + 1
    tab = structure_constants(rs)
    span = {}
    for r in rs.positive_roots:
        a = next(i for i, v in enumerate(r) if v)
        b = a + sum(r)
        span[r] = (a, b)
    sign = {}
    for r in rs.positive_roots:
        a, b = span[r]
        if b == a + 1:
            sign[r] = 1
        else:
            ai = rs.simple(a)
            rest = tuple(x - y for x, y in zip(r, ai))
            sign[r] = -tab(ai, rest) * sign[rest]
    e = {r: [[Fraction(sign[r]) * x for x in row] for row in _unit(n, *span[r])] for r in rs.positive_roots}
    f = {r: [[Fraction(sign[r]) * x for x in row] for row in _unit(n, span[r][1], span[r][0])] for r in rs.positive_roots}
    h = []
    for i in range(rs.rank):
        m = _unit(n, i, i)
        m[i + 1][i + 1] = Fraction(-1)
        h.append(m)
    return {"e": e, "f": f, "h": h, "size": n}


def trace_form(x, y):
    p = _matmul(x, y)
    return sum(p[i][i] for i in range(len(p)))
