"""Local integrals of motion in the tilde ring.

A density X of h_0-weight 0 is an integral of motion when every tilde
screening maps it to a twisted total derivative, G_i X = d~(Y_i e^{w_i}).
The search is one exact linear solve per graded component; the image of
d~ from the component below is quotiented out.

Spin convention: an integral of spin s has a density of spin grading s + 1
(the grading is lowered by one, so spin s pairs with the flow tau_s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .diffalg import DiffElem, LocalFunctional, poisson_bracket, w0, xi
from .errors import ConsistencyError
from .linalg import Echelon, nullspace
from .rootsys import parse_algebra
from .screening import classical_screening, screening_zero
from .sepvar import tilde_screenings, tilde_transform


def _monomial(vars_exps):
    x = DiffElem.const(1)
    for v, e in vars_exps:
        x = x * DiffElem.var(*v) ** e
    (key,) = x.terms
    return key[0]


def hweight(rs, mono):
    """h-weight of a tilde monomial in simple-root coordinates."""
    w = [0] * rs.rank
    for (kind, a, _k), e in mono:
        sg = 1 if kind == "pt" else -1
        w = [x + sg * e * y for x, y in zip(w, rs.positive_roots[a])]
    return tuple(w)


def graded_basis(ring, spin, weight, max_order=None):
    """Monomials of the tilde ring with the given spin grading and h-weight.

    Deterministic order: sorted canonical monomial keys.  max_order caps the
    derivative order of the variables (default: no cap beyond the spin).
    """
    rs = ring.rs
    if spin < 0:
        return []
    weight = tuple(weight)
    top = spin if max_order is None else min(spin, max_order)
    vars_ = []
    for a, r in enumerate(rs.positive_roots):
        for k in range(top + 1):
            if 1 + k <= spin:
                vars_.append((("pt", a, k), 1 + k, r))
            vars_.append((("qt", a, k), k, tuple(-x for x in r)))
    # total height of the q-part is bounded by ht(theta) * spin - ht(weight)
    qbudget = rs.height(rs.highest_root) * spin - sum(weight)
    out = []

    def rec(i, s, qb, mono, w):
        if i == len(vars_):
            if s == 0 and tuple(w) == weight:
                out.append(_monomial(mono))
            return
        v, sp, r = vars_[i]
        e = 0
        while sp * e <= s:
            qh = -sum(r) * e if v[0] == "qt" else 0
            if qh > qb:
                break
            rec(i + 1, s - sp * e, qb - qh, mono + ([(v, e)] if e else []),
                [x + y * e for x, y in zip(w, r)])
            e += 1

    rec(0, spin, qbudget, [], [0] * rs.rank)
    return sorted(out)


@dataclass
class IomCandidate:
    algebra: str
    spin: int
    density: DiffElem
    normalization: tuple = field(default=())  # (monomial, coefficient) fixed to 1

    def to_dict(self):
        from .diffalg import to_json
        return {"spin": self.spin, "density": to_json(self.density)}


def _elem(m, w=()):
    return DiffElem({(m, w): Fraction(1)})


def _dimage(ring, basis, w=()):
    return [ring.d(_elem(m, w)) for m in basis]


def iom_search(rs, spin, max_order=None):
    """Basis of integrals of motion of the given spin, modulo d~ and normalized."""
    if spin < 1:
        return []
    ring = tilde_transform(rs)
    G = tilde_screenings(rs)
    grading = spin + 1
    zero = (0,) * rs.rank
    X = graded_basis(ring, grading, zero, max_order)
    xs = [_elem(m) for m in X]
    cols = [dict() for _ in X]
    ycols = []
    for j in sorted(G):
        D = G[j].derivation()
        imgs = [D(x) for x in xs]
        wts = set()
        for k, im in enumerate(imgs):
            for key, c in im.terms.items():
                cols[k][(j, key)] = c
                wts.add(hweight(rs, key[0]))
        for wt in sorted(wts):
            for n in graded_basis(ring, grading - 1, wt, max_order):
                y = ring.d(_elem(n, G[j].shift))
                ycols.append({(j, key): -c for key, c in y.terms.items()})
    ns = nullspace(cols + ycols)
    nx = len(X)
    sols = [{k: v for k, v in vec.items() if k < nx} for vec in ns]
    sols = [v for v in sols if v]
    # quotient by d~ of the weight-0 component below
    ech = Echelon()
    index = {m: i for i, m in enumerate(X)}
    for dz in _dimage(ring, graded_basis(ring, grading - 1, zero, max_order)):
        try:
            ech.add({index[m]: c for (m, w), c in dz.terms.items()})
        except KeyError:
            # a derivative escaping the capped basis; not part of this component
            continue
    new = Echelon()
    for v in sols:
        r, _ = ech.reduce(v)
        if r:
            new.add(r)
    out = []
    for piv in sorted(new.rows):
        row, _ = new.rows[piv]
        r, _ = ech.reduce(row)
        # normalize on the smallest monomial present
        lead = min(r)
        c = r[lead]
        dens = DiffElem()
        for k, v in r.items():
            dens = dens + _elem(X[k]).scale(v / c)
        out.append(IomCandidate(rs.name, spin, dens, (X[lead], Fraction(1))))
    return out


@lru_cache(maxsize=None)
def _iom_cached(name, spin):
    return tuple(iom_search(parse_algebra(name), spin))


def iom_candidates(name, spin):
    return list(_iom_cached(name, spin))


def is_integral(rs, density):
    """Direct check: every tilde screening maps density to a twisted d~-image."""
    from .diffalg import integrate
    ring = tilde_transform(rs)
    for j, G in tilde_screenings(rs).items():
        img = G.derivation()(density)
        if img.is_zero():
            continue
        if integrate(img, ring, allow_t=False) is None:
            return False
    return True


def saturation_check(rs, spin):
    """Candidate count with derivative orders capped at grading-1 versus uncapped."""
    capped = len(iom_search(rs, spin, max_order=spin))
    full = len(iom_candidates(rs.name, spin))
    return {"capped": capped, "full": full, "stable": capped == full}


# -- commutativity ---------------------------------------------------------------


def lift_density(rs, density):
    return tilde_transform(rs).lift(density)


def commutativity_check(candidates, rs=None):
    """Matrix of {Int X_a, Int X_b} == 0 for the lifted densities."""
    if not candidates:
        return {"ok": True, "matrix": [], "failures": []}
    rs = rs or parse_algebra(candidates[0].algebra)
    ring = w0(rs)
    lifted = [lift_density(rs, c.density) for c in candidates]
    n = len(candidates)
    mat = [[True] * n for _ in range(n)]
    fails = []
    for a in range(n):
        for b in range(a + 1, n):
            br = poisson_bracket(lifted[a], lifted[b], ring)
            ok = br.is_zero()
            mat[a][b] = mat[b][a] = ok
            if not ok:
                fails.append((candidates[a].spin, candidates[b].spin))
    return {"ok": not fails, "matrix": mat, "failures": fails}


# -- hamiltonian flows versus zero-curvature flows ---------------------------------


def hamiltonian_flow_on_tilde(rs, density):
    """xi(lift X) on p, q, projected to the tilde ring."""
    ring = w0(rs)
    T = tilde_transform(rs)
    D = xi(lift_density(rs, density), ring)
    imgs = {}
    for a in range(len(rs.positive_roots)):
        imgs[("pt", a)] = T.project(D.var_image(("p", a, 0)))
        imgs[("qt", a)] = T.project(D.var_image(("q", a, 0)))
    return imgs


def _ratio(x, y):
    """Scalar c with x = c y, or None."""
    if y.is_zero():
        return Fraction(0) if x.is_zero() else None
    key = min(y.terms)
    c = x.terms.get(key, Fraction(0)) / y.terms[key]
    return c if x == y.scale(c) else None


def flow_match(density, n, rs=None):
    """alpha with xi(density) = alpha d_{tau_n} on p~, q~ (sl2 uses the mAKNS flows)."""
    from .zerocurv import makns_flow, rho_flow
    rs = rs or parse_algebra("A1")
    imgs = hamiltonian_flow_on_tilde(rs, density)
    flow = makns_flow(n) if rs.name == "A1" else rho_flow(rs, n)
    alpha = None
    for key, img in sorted(imgs.items()):
        c = _ratio(img, flow.images[key])
        if c is None or (alpha is not None and c != alpha):
            raise ConsistencyError("no scalar matches the flows on %s" % (key,))
        if not flow.images[key].is_zero():
            alpha = c
    if alpha is None or alpha == 0:
        raise ConsistencyError("hamiltonian flow is zero")
    return alpha


def twisted_commutation(rs, density):
    """[G_i, xi] = f_i G_i on the W_0 generators; returns {i: f_i} or raises."""
    ring = w0(rs)
    D = xi(lift_density(rs, density), ring)
    out = {}
    screens = {i + 1: classical_screening(rs, i) for i in range(rs.rank)}
    screens[0] = screening_zero(rs)
    gens = ([("p", a, 0) for a in range(ring.npos)] + [("q", a, 0) for a in range(ring.npos)]
            + [("u", i, 0) for i in range(rs.rank)])
    for j, G in screens.items():
        f = None
        for v in gens:
            x = DiffElem.var(*v)
            lhs = G(D(x)) - D(G(x))
            gx = G(x)
            if gx.is_zero():
                if not lhs.is_zero():
                    raise ConsistencyError("[G_%d, xi] nonzero on %s where G_%d vanishes" % (j, v, j))
                continue
            if f is None:
                f = _quotient(lhs, gx)
                if f is None:
                    raise ConsistencyError("[G_%d, xi] is not a multiple of G_%d" % (j, j))
            elif not (lhs == f * gx):
                raise ConsistencyError("[G_%d, xi] is not f G_%d on %s" % (j, j, v))
        out[j] = f if f is not None else DiffElem()
    return out


def _quotient(x, y):
    """x / y when y is a single term (coefficient times monomial times e^w)."""
    if len(y.terms) != 1:
        return None
    ((m, w), c), = y.terms.items()
    out = DiffElem()
    for (mx, wx), cx in x.terms.items():
        if wx != w:
            return None
        rest = dict(mx)
        for v, e in m:
            if rest.get(v, 0) < e:
                return None
            rest[v] -= e
        mono = tuple(sorted((v, e) for v, e in rest.items() if e))
        out = out + DiffElem({(mono, ()): cx / c})
    return out if out * y == x else None


def gauge_density(n, frame="conjugated"):
    """(1,1) t^0 entry of the depth-n projection for sl2.

    frame="conjugated" uses K0^{-1} M K0, whose diagonal is gauge covariant;
    frame="raw" uses M itself (not conserved in this gauge).
    """
    from .zerocurv import _resolvent
    R = _resolvent("A1", n)
    series = R.N if frame == "conjugated" else R.M
    return series.shift(-n + 1)[0][0][0]


def gauge_consistency(n, frame="conjugated"):
    """The t^0 h-entry of the depth-n projection is, modulo d~, the spin n-1 density."""
    rs = parse_algebra("A1")
    ring = tilde_transform(rs)
    g = gauge_density(n, frame)
    cands = iom_candidates("A1", n - 1)
    if len(cands) != 1:
        return {"ok": False, "scale": None}
    X = cands[0].density
    grading = n
    zero = (0,)
    basis = graded_basis(ring, grading, zero)
    index = {m: i for i, m in enumerate(basis)}
    ech = Echelon()
    for dz in _dimage(ring, graded_basis(ring, grading - 1, zero)):
        ech.add({index[m]: c for (m, w), c in dz.terms.items()})
    rg, _ = ech.reduce({index[m]: c for (m, w), c in g.terms.items()})
    rx, _ = ech.reduce({index[m]: c for (m, w), c in X.terms.items()})
    if not rx:
        return {"ok": False, "scale": None}
    k = min(rx)
    s = rg.get(k, Fraction(0)) / rx[k]
    ok = {a: v * s for a, v in rx.items() if v * s} == rg
    return {"ok": ok, "scale": s}
