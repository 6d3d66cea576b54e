"""Classical screenings on W_0 and their kernel.

Coordinates x_a on the big cell are x_a(K) = -(f_a, K^-1 rho K), i.e. the
negated e_a-components of X = Ad(K^-1) rho.  Right fields come from
K -> K exp(eps e_a); left fields from f(K) -> f(exp(-eps a) K), pushed back
into N_+ modulo B_-.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .diffalg import (DiffElem, Derivation, LocalFunctional, TwistedDerivation,
                      functional_is_zero, make_weight, mode_bracket, spin_of, tpow,
                      w0, xi, xi_weighted)
from .rootsys import inner_product, lie_algebra, rho_vee, structure_constants


def x_var(a):
    return DiffElem.var("x", a)


# -- vector fields on N_+: dict root index -> coefficient DiffElem ----------


def vf_apply(field, f):
    out = DiffElem()
    for a, c in field.items():
        d = f.partial(("x", a, 0))
        if d:
            out = out + c * d
    return out


def vf_bracket(X, Y):
    out = {}
    keys = set(X) | set(Y)
    for b in keys:
        xb = x_var(b)
        v = vf_apply(X, vf_apply(Y, xb)) - vf_apply(Y, vf_apply(X, xb))
        if v:
            out[b] = v
    return out


def vf_combine(terms):
    out = {}
    for c, F in terms:
        for b, v in F.items():
            out[b] = out.get(b, DiffElem()) + c * v
    return {b: v for b, v in out.items() if v}


def vf_eq(X, Y):
    keys = set(X) | set(Y)
    return all(X.get(b, DiffElem()) == Y.get(b, DiffElem()) for b in keys)


@dataclass(frozen=True)
class CoordinateChart:
    rs: object
    right: dict   # root index -> field (e_a^R)
    left: dict    # basis label -> field (a^L)

    def PR(self, a, b):
        return self.right[a].get(b, DiffElem())

    def PL(self, a, b):
        return self.left[("e", a)].get(b, DiffElem())

    def Q(self, a, b):
        return self.left[("f", a)].get(b, DiffElem())


def right_fields(rs):
    """e_a^R = -(rho,a) d/dx_a + sum_b c(a,b) x_b d/dx_{a+b}."""
    c = structure_constants(rs)
    roots = rs.positive_roots
    out = {}
    for a, ra in enumerate(roots):
        f = {a: DiffElem.const(-rs.height(ra))}
        for b, rb in enumerate(roots):
            s = tuple(x + y for x, y in zip(ra, rb))
            if s in rs.index:
                k = rs.index[s]
                f[k] = f.get(k, DiffElem()) + x_var(b).scale(c(ra, rb))
        out[a] = {k: v for k, v in f.items() if v}
    return out


def _ad_exp(g, y, a, sign=-1):
    """exp(sign * ad y) a, y nilpotent."""
    out = dict(a)
    term = dict(a)
    k = 0
    while term:
        k += 1
        term = g.bracket(y, term)
        term = {lab: v * Fraction(sign, k) for lab, v in term.items()}
        term = {lab: v for lab, v in term.items() if v != 0}
        for lab, v in term.items():
            out[lab] = out[lab] + v if lab in out else v
    return {lab: v for lab, v in out.items() if v != 0}


def _group_coords(rs):
    """y in n_+ with Ad(exp(-y)) rho = X(x), solved height by height."""
    g = lie_algebra(rs)
    rho = g.cartan_element(rho_vee(rs))
    roots = rs.positive_roots
    y = {}
    for h in range(1, max(rs.height(r) for r in roots) + 1):
        Z = _ad_exp(g, y, rho)
        for k, r in enumerate(roots):
            if rs.height(r) != h:
                continue
            target = -x_var(k)
            cur = Z.get(("e", k), DiffElem())
            if not isinstance(cur, DiffElem):
                cur = DiffElem.const(cur)
            y[("e", k)] = (target - cur).scale(Fraction(1, h))
    return g, y


def left_fields(rs):
    """a^L for every basis label a of g."""
    g, y = _group_coords(rs)
    R = right_fields(rs)
    out = {}
    for lab in g.basis:
        Y = _ad_exp(g, y, {lab: Fraction(1)})
        terms = []
        for (kind, k), v in Y.items():
            if kind == "e":
                if not isinstance(v, DiffElem):
                    v = DiffElem.const(v)
                terms.append((-v, R[k]))
        out[lab] = vf_combine(terms)
    return out


@lru_cache(maxsize=None)
def chart(rs):
    return CoordinateChart(rs, right_fields(rs), left_fields(rs))


# -- screenings ---------------------------------------------------------------


def _to_q(f):
    """Replace x_a by q_a."""
    return f.substitute({("x", a, 0): DiffElem.var("q", a) for a in _xvars(f)})


def _xvars(f):
    return {v[1] for v in f.variables() if v[0] == "x"}


def simple_weight(rs, i, s=1):
    return make_weight({i: s})


def zero_weight(rs):
    """Weight of e^{-phi_0} = e^{theta}: phi_0 = -sum a_i phi_i."""
    return make_weight(list(rs.highest_root))


def gbar(rs, i):
    """Weighted density Gbar_i (i >= 1 as 0-based simple index, or 'zero')."""
    ch = chart(rs)
    out = DiffElem()
    for b, coeff in ch.right[i].items():
        out = out + _to_q(coeff) * DiffElem.var("p", b)
    return out * DiffElem.expo(simple_weight(rs, i, -1))


def gbar_zero(rs):
    top = rs.index[rs.highest_root]
    return DiffElem.var("q", top) * DiffElem.expo(zero_weight(rs))


def _screen_from(dens, ring):
    # G = {., Int dens} = -xi(dens)
    X = xi_weighted(dens, ring)
    imgs = {k: -v for k, v in X.gen_images.items()}
    return TwistedDerivation(imgs, ring, X.shift)


_SCREEN = {}


def classical_screening(rs, i):
    """G_i^0 for simple index i (0-based)."""
    key = (rs.name, i)
    if key not in _SCREEN:
        _SCREEN[key] = _screen_from(gbar(rs, i), w0(rs))
    return _SCREEN[key]


def screening_zero(rs):
    key = (rs.name, "zero")
    if key not in _SCREEN:
        _SCREEN[key] = _screen_from(gbar_zero(rs), w0(rs))
    return _SCREEN[key]


def screening(rs, j):
    """Screening by affine node: j == 0 is G_0, j >= 1 is simple node j-1."""
    return screening_zero(rs) if j == 0 else classical_screening(rs, j - 1)


def affine_cartan(rs):
    n = rs.rank
    theta = rs.highest_root
    # alpha_0 = -theta (inner products with alpha_0)
    a = [[0] * (n + 1) for _ in range(n + 1)]
    a[0][0] = 2
    for i in range(n):
        v = int(-inner_product(rs, theta, rs.simple(i)))
        a[0][i + 1] = a[i + 1][0] = v
        for j in range(n):
            a[i + 1][j + 1] = rs.cartan[i][j]
    if n == 1:
        a[0][1] = a[1][0] = -2
    return a


def generator_vars(rs, order):
    ring = w0(rs)
    out = []
    for kind, idx in ring.generators:
        for n in range(order + 1):
            out.append((kind, idx, n))
    return out


def serre_check(rs, i, j, truncation=6):
    """(ad G_i)^(1-a_ij) G_j on all generators up to the derivative order.

    Indices are affine nodes (0 = affine node).  Returns a dict with keys
    ok, inconclusive, depth, first_nonzero.
    """
    if i == j:
        raise ValueError("serre_check needs i != j")
    A = affine_cartan(rs)
    depth = 1 - A[i][j]
    Gi, Gj = screening(rs, i), screening(rs, j)
    D = Gj
    for _ in range(depth):
        D = Gi.commutator(D)
    bad = None
    for v in generator_vars(rs, truncation):
        if D.var_image(v):
            bad = v
            break
    return {"ok": bad is None, "inconclusive": truncation < depth,
            "depth": depth, "first_nonzero": bad}


def nested_commutator(rs, i, j, depth):
    D = screening(rs, j)
    Gi = screening(rs, i)
    for _ in range(depth):
        D = Gi.commutator(D)
    return D


# -- kernel -------------------------------------------------------------------


@dataclass
class KernelGenerators:
    rs: object
    E: dict  # root index -> DiffElem
    H: dict  # simple index -> DiffElem
    F: dict

    def items(self):
        for k in sorted(self.E):
            yield ("e", k), self.E[k]
        for i in sorted(self.H):
            yield ("h", i), self.H[i]
        for k in sorted(self.F):
            yield ("f", k), self.F[k]

    def element(self, x):
        """DiffElem for a Lie algebra element (dict label -> coeff)."""
        out = DiffElem()
        table = dict(self.items())
        for lab, c in x.items():
            out = out + table[lab].scale(c)
        return out


def h_generator(rs, i):
    ring = w0(rs)
    out = ring.u(i)
    for k, r in enumerate(rs.positive_roots):
        g = inner_product(rs, rs.simple(i), r)
        if g:
            out = out - (ring.p(k) * ring.q(k)).scale(g)
    return out


def v_fields(rs):
    """v_i = u_i - sum_a (alpha_i,a) q_a p_a, checked against every screening."""
    out = {i: h_generator(rs, i) for i in range(rs.rank)}
    for i, v in out.items():
        for j in range(rs.rank + 1):
            if screening(rs, j)(v):
                raise AssertionError(f"G_{j} does not kill v_{i + 1}")
    return out


def _lift(field, p_kind="p"):
    out = DiffElem()
    for b, c in field.items():
        out = out + _to_q(c) * DiffElem.var(p_kind, b)
    return out


def _bracket_density(X, Y, ring):
    return xi(X, ring)(Y)


_KERNEL = {}


def kernel_generators(rs, check=True):
    if rs.name in _KERNEL:
        return _KERNEL[rs.name]
    ring = w0(rs)
    ch = chart(rs)
    g = lie_algebra(rs)
    n = rs.rank
    E, H, F = {}, {}, {}
    for k in range(len(rs.positive_roots)):
        E[k] = _lift(ch.left[("e", k)])
    for i in range(n):
        H[i] = h_generator(rs, i)
        norm = inner_product(rs, rs.simple(i), rs.simple(i))
        F[i] = (_lift(ch.left[("f", i)]) + ring.u(i) * ring.q(i)
                + ring.d(ring.q(i)).scale(Fraction(2, norm)))
    # non-simple F by brackets: [f_i, f_b] = k f_{b + a_i}
    roots = rs.positive_roots
    for h in range(2, max(rs.height(r) for r in roots) + 1):
        for k, r in enumerate(roots):
            if rs.height(r) != h:
                continue
            for i in range(n):
                b = tuple(x - y for x, y in zip(r, rs.simple(i)))
                if b in rs.index and rs.index[b] in F:
                    kb = rs.index[b]
                    br = g.bracket({("f", i): 1}, {("f", kb): 1})
                    coef = br[("f", k)]
                    F[k] = _bracket_density(F[i], F[kb], ring).scale(1 / Fraction(coef))
                    break
    kg = KernelGenerators(rs, E, H, F)
    if check:
        for lab, X in kg.items():
            for i in range(n):
                if classical_screening(rs, i)(X):
                    raise AssertionError(f"G_{i + 1} does not kill generator {lab}")
    _KERNEL[rs.name] = kg
    return kg


def kk_check(rs, modes=3):
    """Mode brackets of kernel generators against the affine algebra."""
    ring = w0(rs)
    g = lie_algebra(rs)
    kg = kernel_generators(rs)
    items = list(kg.items())
    failures = []
    count = 0
    for la, X in items:
        for lb, Y in items:
            br = g.bracket({la: 1}, {lb: 1})
            Z = kg.element(br)
            form = g.form({la: 1}, {lb: 1})
            for n in range(-modes, modes + 1):
                for m in range(-modes, modes + 1):
                    count += 1
                    dens, central = mode_bracket(X, n, Y, m, ring)
                    expect_c = n * form if n == -m else 0
                    # [X,Y](n+m) = Int Z t^(n+m) (all generators have spin 1)
                    diff = dens.density - Z * tpow(n + m)
                    ok = functional_is_zero(diff, ring) and central == expect_c
                    if not ok:
                        failures.append({"pair": (la, lb), "n": n, "m": m,
                                         "central": central, "expected_central": expect_c})
    return {"ok": not failures, "checked": count, "failures": failures[:10]}


# -- nonlocal equations --------------------------------------------------------


@dataclass
class Equation:
    lhs: str
    rhs: DiffElem
    nonlocal_symbols: tuple = ()


def _var_name(rs, kind, idx):
    return f"{kind}_{idx + 1}"


def nonlocal_system(rs, include_zero=False):
    """d_tau of p_a, q_a and d_z phi_i under the sum of the screenings."""
    nodes = list(range(1, rs.rank + 1)) + ([0] if include_zero else [])
    gens = [screening(rs, j) for j in nodes]
    ring = w0(rs)
    eqs = []
    for kind, idx in ring.generators:
        rhs = DiffElem()
        for G in gens:
            rhs = rhs + G.var_image((kind, idx, 0))
        lhs = f"d_tau {kind}_{idx + 1}" if kind != "u" else f"d_tau d_z phi_{idx + 1}"
        eqs.append(Equation(lhs, rhs))
    return eqs


def reduced_sl2_system():
    """sl2 with u = 2pq: phi = 2 Int^z pq, flows of p and q."""
    sym = "phi = 2 int^z p q"
    return [
        Equation("d_tau p", DiffElem.expo([1]), (sym,)),
        Equation("d_tau q", DiffElem.expo([-1]), (sym,)),
    ]


def equation_json(eq, rank):
    from .diffalg import to_json
    return {"lhs": eq.lhs, "rhs": to_json(eq.rhs, rank),
            "nonlocal_symbols": list(eq.nonlocal_symbols)}


# -- characters -----------------------------------------------------------------


def series_mul(a, b, order):
    out = {}
    for (qa, ua), ca in a.items():
        for (qb, ub), cb in b.items():
            qq = qa + qb
            if qq > order:
                continue
            k = (qq, tuple(x + y for x, y in zip(ua, ub)))
            out[k] = out.get(k, 0) + ca * cb
    return {k: v for k, v in out.items() if v}


def geometric(qdeg, w, order, rank):
    """1 / (1 - q^qdeg u^w) truncated."""
    out = {}
    k = 0
    while k * qdeg <= order:
        out[(k * qdeg, tuple(k * x for x in w))] = 1
        k += 1
    return out


def product_character(rs, order):
    """prod_n (1-q^n)^-rank prod_{a in Delta} (1-q^n u^a)^-1."""
    rank = rs.rank
    zero = tuple([0] * rank)
    ser = {(0, zero): 1}
    roots = list(rs.positive_roots) + [tuple(-x for x in r) for r in rs.positive_roots]
    for n in range(1, order + 1):
        for _ in range(rank):
            ser = series_mul(ser, geometric(n, zero, order, rank), order)
        for r in roots:
            ser = series_mul(ser, geometric(n, r, order, rank), order)
    return ser


def generator_character(gens, hweight, order, rank):
    """Character of the free differential algebra on the given generators.

    gens: list of DiffElems; each contributes derivatives of spin s+n.
    """
    zero = tuple([0] * rank)
    ser = {(0, zero): 1}
    for X in gens:
        s = spin_of(X)
        (m, _w) = next(iter(X.terms))
        wt = hweight(m)
        for n in range(0, order):
            if s + n > order:
                break
            ser = series_mul(ser, geometric(s + n, wt, order, rank), order)
    return ser


def invert_u(ser):
    return {(qd, tuple(-x for x in u)): c for (qd, u), c in ser.items()}


def compare_series(a, b):
    keys = sorted(set(a) | set(b))
    for k in keys:
        if a.get(k, 0) != b.get(k, 0):
            return k
    return None


def character_check(rs, order=6):
    ring = w0(rs)
    kg = kernel_generators(rs)
    gens = [X for _lab, X in kg.items()]
    for X in gens:
        # homogeneity of spin and weight is part of the claim
        if spin_of(X) != 1:
            raise AssertionError("generator is not of spin 1")
        wts = {ring.hweight(m) for (m, _w) in X.terms}
        if len(wts) != 1:
            raise AssertionError("generator is not weight-homogeneous")
    lhs = generator_character(gens, ring.hweight, order, rs.rank)
    rhs = product_character(rs, order)
    bad = compare_series(lhs, rhs)
    if bad is None:
        return {"ok": True, "involution": False, "first_mismatch": None}
    bad2 = compare_series(invert_u(lhs), rhs)
    if bad2 is None:
        return {"ok": True, "involution": True, "first_mismatch": None}
    return {"ok": False, "involution": None, "first_mismatch": bad}
