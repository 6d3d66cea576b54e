"""Differential polynomials with exponential weights.

A DiffElem is a finite sum  c * (monomial) * e^{lambda},  stored as a dict
keyed by (mono, weight).  A monomial is a sorted tuple of (var, exponent)
pairs, a var is (kind, index, order) and a weight is a sorted tuple of
(simple index, coefficient) pairs with nonzero coefficients.  The special
var ('t', 0, 0) is the loop coordinate, with derivative 1.

The total derivative depends on how e^{lambda} differentiates, so it lives
on a ring object.  The default ring uses  d e^{lambda} = (sum lambda_i u_i)
e^{lambda}.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .linalg import solve

T = ("t", 0, 0)

# kind -> (base spin, rank of derivative grading)
BASE_SPIN = {"p": 1, "q": 0, "u": 1, "t": -1, "pt": 1, "qt": 0,
             "E": 1, "F": 1, "x": 0}


def _frac(c):
    if isinstance(c, int):
        return Fraction(c)
    return c


def _wadd(w1, w2):
    if not w1:
        return w2
    if not w2:
        return w1
    d = dict(w1)
    for i, c in w2:
        nc = d.get(i, 0) + c
        if nc == 0:
            d.pop(i, None)
        else:
            d[i] = nc
    return tuple(sorted(d.items()))


def make_weight(lam):
    """Normalize a dense sequence or dict into the sparse weight tuple."""
    if isinstance(lam, dict):
        items = lam.items()
    elif lam and isinstance(lam[0], tuple):
        items = lam
    else:
        items = enumerate(lam)
    return tuple(sorted((i, Fraction(c)) for i, c in items if c != 0))


def dense_weight(w, rank):
    out = [Fraction(0)] * rank
    for i, c in w:
        out[i] = c
    return tuple(out)


@lru_cache(maxsize=1 << 20)
def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for v, e in m2:
        ne = d.get(v, 0) + e
        if ne:
            d[v] = ne
        else:
            del d[v]
    return tuple(sorted(d.items()))


class DiffElem:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = terms if terms is not None else {}

    # construction
    @staticmethod
    def const(c):
        c = _frac(c)
        return DiffElem({((), ()): c} if c != 0 else {})

    @staticmethod
    def var(kind, index=0, order=0):
        return DiffElem({((((kind, index, order), 1),), ()): Fraction(1)})

    @staticmethod
    def expo(lam, coeff=1):
        return DiffElem({((), make_weight(lam)): _frac(coeff)})

    @staticmethod
    def monomial(mono, weight=(), coeff=1):
        return DiffElem({(mono, weight): _frac(coeff)})

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, DiffElem):
            return other
        return DiffElem.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            nc = out.get(k, 0) + c
            if nc == 0:
                out.pop(k, None)
            else:
                out[k] = nc
        return DiffElem(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffElem({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c):
        c = _frac(c)
        if c == 0:
            return DiffElem()
        return DiffElem({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, DiffElem):
            return self.scale(other)
        out = {}
        for (m1, w1), c1 in self.terms.items():
            for (m2, w2), c2 in other.terms.items():
                k = (_mono_mul(m1, m2), _wadd(w1, w2))
                nc = out.get(k, 0) + c1 * c2
                if nc == 0:
                    out.pop(k, None)
                else:
                    out[k] = nc
        return DiffElem(out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n):
        out = DiffElem.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, DiffElem):
            other = DiffElem.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    # inspection
    def weights(self):
        return {w for (_, w) in self.terms}

    @property
    def weight(self):
        ws = self.weights()
        if len(ws) > 1:
            raise ValueError("element is not weight-homogeneous")
        return next(iter(ws)) if ws else ()

    def component(self, w):
        return DiffElem({k: c for k, c in self.terms.items() if k[1] == w})

    def strip_weight(self):
        out = DiffElem()
        for (m, _), c in self.terms.items():
            out = out + DiffElem({(m, ()): c})
        return out

    def with_weight(self, w):
        return self * DiffElem({((), make_weight(w)): Fraction(1)})

    def variables(self):
        out = set()
        for (m, _) in self.terms:
            for v, _e in m:
                out.add(v)
        return out

    def constant_term(self):
        return self.terms.get(((), ()), Fraction(0))

    def has_t(self):
        return any(v[0] == "t" for v in self.variables())

    def partial(self, v):
        out = {}
        for (m, w), c in self.terms.items():
            for j, (x, e) in enumerate(m):
                if x == v:
                    nm = m[:j] + (((x, e - 1),) if e != 1 else ()) + m[j + 1:]
                    k = (nm, w)
                    nc = out.get(k, 0) + c * e
                    if nc == 0:
                        out.pop(k, None)
                    else:
                        out[k] = nc
                    break
        return DiffElem(out)

    def degree_in(self, v):
        d = 0
        for (m, _) in self.terms:
            for x, e in m:
                if x == v:
                    d = max(d, e)
        return d

    def coefficient(self, v, e):
        """Coefficient of v**e, as an element free of v."""
        out = {}
        for (m, w), c in self.terms.items():
            got = 0
            rest = []
            for x, ex in m:
                if x == v:
                    got = ex
                else:
                    rest.append((x, ex))
            if got == e:
                out[(tuple(rest), w)] = c
        return DiffElem(out)

    def map_coeffs(self, f):
        out = {}
        for k, c in self.terms.items():
            nc = f(c)
            if nc != 0:
                out[k] = nc
        return DiffElem(out)

    def substitute(self, mapping):
        """Replace vars by DiffElems (vars not in mapping are kept)."""
        out = DiffElem()
        cache = {}
        for (m, w), c in self.terms.items():
            term = DiffElem({((), w): c})
            kept = []
            for x, e in m:
                if x in mapping:
                    key = (x, e)
                    if key not in cache:
                        cache[key] = mapping[x] ** e
                    term = term * cache[key]
                else:
                    kept.append((x, e))
            if kept:
                term = term * DiffElem({(tuple(kept), ()): Fraction(1)})
            out = out + term
        return out

    def t_coefficients(self):
        """Split into {power of t: t-free element}; negative powers allowed."""
        out = {}
        for (m, w), c in self.terms.items():
            k = 0
            rest = []
            for x, e in m:
                if x == T:
                    k = e
                else:
                    rest.append((x, e))
            d = out.setdefault(k, {})
            d[(tuple(rest), w)] = c
        return {k: DiffElem(v) for k, v in out.items()}

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kc: _term_key(kc[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(_repr_term(k, c) for k, c in self.sorted_terms())


def tpow(n):
    """t**n for any integer n (negative powers allowed)."""
    if n == 0:
        return DiffElem.const(1)
    return DiffElem({(((T, n),), ()): Fraction(1)})


def var_spin(v):
    kind, _i, n = v
    if kind == "t":
        return -1
    return BASE_SPIN.get(kind, 1) + n


def mono_spin(m):
    return sum(var_spin(v) * e for v, e in m)


def _var_key(v):
    return (var_spin(v), v)


def _term_key(k):
    m, w = k
    return (mono_spin(m), tuple((_var_key(v), e) for v, e in m), w)


def _var_str(v):
    kind, i, n = v
    if kind == "t":
        return "t"
    s = f"{kind}{i}" if n == 0 else f"{kind}{i}^({n})"
    return s


def _repr_term(k, c):
    m, w = k
    parts = [str(c)] if (c != 1 or not m) else []
    for v, e in m:
        parts.append(_var_str(v) + (f"^{e}" if e != 1 else ""))
    if w:
        parts.append("e^{" + ",".join(f"{i}:{x}" for i, x in w) + "}")
    return "*".join(parts)


def spin_of(x):
    """Spin degree of a homogeneous element (None if inhomogeneous)."""
    spins = {mono_spin(m) for (m, _) in x.terms}
    if len(spins) == 1:
        return spins.pop()
    return None if spins else 0


class DiffRing:
    """Total derivative with a chosen rule for exponential factors.

    multiplier(weight) returns the DiffElem M with d e^{w} = M e^{w}.
    """

    def __init__(self, multiplier=None, name="W"):
        self.name = name
        self._mult = multiplier or _u_multiplier
        self._mcache = {}
        self._dcache = {}

    def multiplier(self, w):
        if w not in self._mcache:
            self._mcache[w] = self._mult(w)
        return self._mcache[w]

    def _dmono(self, m):
        if m in self._dcache:
            return self._dcache[m]
        out = {}
        for j, (v, e) in enumerate(m):
            rest = m[:j] + (((v, e - 1),) if e != 1 else ()) + m[j + 1:]
            if v == T:
                nm = rest
            else:
                nm = _mono_mul(rest, (((v[0], v[1], v[2] + 1), 1),))
            out[nm] = out.get(nm, 0) + e
        res = tuple((k, c) for k, c in out.items() if c != 0)
        self._dcache[m] = res
        return res

    def d(self, x, times=1):
        for _ in range(times):
            x = self._d1(x)
        return x

    def _d1(self, x):
        out = {}

        def acc(k, c):
            nc = out.get(k, 0) + c
            if nc == 0:
                out.pop(k, None)
            else:
                out[k] = nc

        for (m, w), c in x.terms.items():
            for nm, e in self._dmono(m):
                acc((nm, w), c * e)
            if w:
                for (mm, ww), cc in self.multiplier(w).terms.items():
                    acc((_mono_mul(m, mm), _wadd(w, ww)), c * cc)
        return DiffElem(out)


def _u_multiplier(w):
    out = DiffElem()
    for i, c in w:
        out = out + DiffElem.var("u", i).scale(c)
    return out


W = DiffRing()


def total_derivative(x, ring=W):
    return ring.d(x)


def _max_order(x, kinds=None):
    n = -1
    for v in x.variables():
        if v != T and (kinds is None or v[0] in kinds):
            n = max(n, v[2])
    return n


def _vd(x, kind, index, ring=W):
    """Variational derivative sum_n (-d)^n d x / d v^(n); any weight."""
    top = -1
    for v in x.variables():
        if v[0] == kind and v[1] == index:
            top = max(top, v[2])
    out = DiffElem()
    for n in range(top, -1, -1):
        # Horner: out = partial_n - d(out)
        out = x.partial((kind, index, n)) - ring.d(out)
    return out


class UnsupportedError(ValueError):
    pass


def variational_derivative(x, v, ring=W):
    """delta x / delta v for v = (kind, index) on weight-0 input."""
    if any(w for w in x.weights()):
        raise UnsupportedError("variational derivative of a weighted element")
    kind, index = v[0], v[1]
    return _vd(x, kind, index, ring)


def phi_derivative(x, j, ring=W):
    """delta/delta phi_j on a weighted element: lambda_j x - d(delta x/delta u_j)."""
    out = DiffElem()
    for w in x.weights():
        comp = x.component(w)
        lj = dict(w).get(j, 0)
        if lj:
            out = out + comp.scale(lj)
    return out - ring.d(_vd(x, "u", j, ring))


def _integrate_in(a, v):
    """Formal antiderivative of a with respect to var v (a polynomial in v)."""
    out = {}
    for (m, w), c in a.terms.items():
        d = dict(m)
        e = d.get(v, 0)
        if e + 1:
            d[v] = e + 1
        else:
            d.pop(v)
        out[(tuple(sorted(d.items())), w)] = c / (e + 1)
    return DiffElem(out)


def integrate(x, ring=W, allow_t=True):
    """Deterministic antiderivative: returns y with d y = x, or None.

    Sweeps derivative orders from the top; at each order the highest var
    is integrated first.  The remaining order-0 piece must be a function
    of t alone (weight 0) or of the form d Y(t) + M Y(t) (weight w).
    """
    y = DiffElem()
    for w in sorted(x.weights()):
        comp = x.component(w)
        r = _integrate_weight(comp, w, ring, allow_t)
        if r is None:
            return None
        y = y + r
    return y


def _integrate_weight(x, w, ring, allow_t):
    y = DiffElem()
    while True:
        vs = [v for v in x.variables() if v != T and v[2] >= 1]
        if not vs:
            break
        n = max(v[2] for v in vs)
        top = max((v for v in vs if v[2] == n), key=_var_key)
        if x.degree_in(top) != 1:
            return None
        a = x.coefficient(top, 1)
        if any(v != T and v[2] >= n for v in a.variables()):
            return None
        lower = (top[0], top[1], top[2] - 1)
        y1 = _integrate_in(a.strip_weight(), lower)
        if w:
            y1 = y1 * DiffElem.expo(w)
        nx = x - ring.d(y1)
        # must have eliminated top without creating anything above it
        for v in nx.variables():
            if v != T and (v[2] > n or (v[2] == n and _var_key(v) >= _var_key(top))):
                return None
        x = nx
        y = y + y1
    if x.is_zero():
        return y
    if not w:
        # pure function of t required
        if any(v != T for v in x.variables()):
            return None
        if not allow_t and x.constant_term() != 0:
            return None
        for k, c in x.t_coefficients().items():
            if k == -1:
                return None
            c0 = c.constant_term()
            y = y + tpow(k + 1).scale(c0 / (k + 1))
        return y
    # weighted: x = dY + M Y with Y = Y(t)
    mult = ring.multiplier(w)
    if mult.is_zero():
        return None
    (mk, _mw), mc = mult.sorted_terms()[0]
    pure = x.strip_weight()
    ycand = DiffElem()
    for (m, _), c in pure.terms.items():
        d = dict(m)
        tp = d.pop(T, 0)
        if tuple(sorted(d.items())) == mk:
            ycand = ycand + tpow(tp).scale(c / mc)
    yw = ycand * DiffElem.expo(w) if ycand else DiffElem()
    if (x - ring.d(yw)).is_zero():
        if not allow_t and ycand.has_t():
            return None
        return y + yw
    return None


def is_total_derivative(x, ring=W):
    """Return (flag, witness).  Constants count as non-exact for t-free input."""
    y = integrate(x, ring, allow_t=x.has_t())
    if y is None:
        return False, None
    return True, y


# -- rings attached to a root system -----------------------------------


class W0Ring(DiffRing):
    """W_0 for a given root system: p_a, q_a (a positive root index), u_i."""

    def __init__(self, rs):
        super().__init__(_u_multiplier, name="W0")
        self.rs = rs
        self.rank = rs.rank
        self.npos = len(rs.positive_roots)
        self.gram = [[Fraction(x) for x in row] for row in rs.cartan]
        self.generators = ([("p", a) for a in range(self.npos)]
                           + [("q", a) for a in range(self.npos)]
                           + [("u", i) for i in range(self.rank)])

    def hweight(self, m):
        out = [0] * self.rank
        for (kind, idx, _n), e in m:
            if kind in ("p", "pt"):
                for i, c in enumerate(self.rs.positive_roots[idx]):
                    out[i] += c * e
            elif kind in ("q", "qt"):
                for i, c in enumerate(self.rs.positive_roots[idx]):
                    out[i] -= c * e
        return tuple(out)

    def p(self, a, n=0):
        return DiffElem.var("p", a, n)

    def q(self, a, n=0):
        return DiffElem.var("q", a, n)

    def u(self, i, n=0):
        return DiffElem.var("u", i, n)


_RINGS = {}


def w0(rs):
    if rs.name not in _RINGS:
        _RINGS[rs.name] = W0Ring(rs)
    return _RINGS[rs.name]


# -- local functionals ----------------------------------------------------


class LocalFunctional:
    """Class of a density modulo total derivatives and constants."""

    __slots__ = ("density", "ring")

    def __init__(self, density, t_power=0, ring=W):
        if t_power:
            density = density * tpow(t_power)
        self.density = density
        self.ring = ring

    def __add__(self, other):
        return LocalFunctional(self.density + other.density, ring=self.ring)

    def __sub__(self, other):
        return LocalFunctional(self.density - other.density, ring=self.ring)

    def __neg__(self):
        return LocalFunctional(-self.density, ring=self.ring)

    def scale(self, c):
        return LocalFunctional(self.density.scale(c), ring=self.ring)

    def is_zero(self):
        return functional_is_zero(self.density, self.ring)

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            if other == 0:
                return self.is_zero()
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"Int[{self.density!r}]"


def functional_is_zero(x, ring=W):
    """Exactness modulo constants: constants and t-free scalars are zero."""
    x = x - DiffElem.const(x.constant_term())
    return integrate(x, ring, allow_t=True) is not None


def residue(x):
    """Coefficient of t^-1 in the pure-t part of x."""
    tc = x.t_coefficients()
    if -1 not in tc:
        return Fraction(0)
    return tc[-1].constant_term()


# -- brackets ---------------------------------------------------------------


def _gens(ring):
    return ring.generators


def poisson_bracket(P, Q, ring):
    """Density of {Int P, Int Q} on W_0 (weight-0 densities, t allowed)."""
    P = P.density if isinstance(P, LocalFunctional) else P
    Q = Q.density if isinstance(Q, LocalFunctional) else Q
    out = DiffElem()
    dPu = [variational_derivative(P, ("u", i), ring) for i in range(ring.rank)]
    dQu = [variational_derivative(Q, ("u", i), ring) for i in range(ring.rank)]
    for i in range(ring.rank):
        if dPu[i].is_zero():
            continue
        for j in range(ring.rank):
            g = ring.gram[i][j]
            if g and not dQu[j].is_zero():
                out = out - (dPu[i] * ring.d(dQu[j])).scale(g)
    for a in range(ring.npos):
        pp = variational_derivative(P, ("p", a), ring)
        pq = variational_derivative(P, ("q", a), ring)
        if pp:
            out = out + pp * variational_derivative(Q, ("q", a), ring)
        if pq:
            out = out - pq * variational_derivative(Q, ("p", a), ring)
    return LocalFunctional(out, ring=ring)


def poisson_bracket_weighted(P, Qe, ring):
    """{Int P, Int Q e^lambda} by the explicit weighted formula.

    Variational derivatives of Q e^lambda are taken with the twisted
    derivative (d + sum lambda_j u_j), i.e. of the full product.
    """
    P = P.density if isinstance(P, LocalFunctional) else P
    Qe = Qe.density if isinstance(Qe, LocalFunctional) else Qe
    out = DiffElem()
    for i in range(ring.rank):
        dPi = variational_derivative(P, ("u", i), ring)
        if dPi.is_zero():
            continue
        for j in range(ring.rank):
            g = ring.gram[i][j]
            if g:
                out = out + (dPi * phi_derivative(Qe, j, ring)).scale(g)
    for a in range(ring.npos):
        pp = variational_derivative(P, ("p", a), ring)
        pq = variational_derivative(P, ("q", a), ring)
        if pp:
            out = out + pp * _vd(Qe, "q", a, ring)
        if pq:
            out = out - pq * _vd(Qe, "p", a, ring)
    return LocalFunctional(out, ring=ring)


# -- derivations ------------------------------------------------------------


class Derivation:
    """A derivation given by images of individual vars (with t killed).

    exp_image(w) gives X with D(e^w) = X e^w (default: zero).
    """

    def __init__(self, image, exp_image=None, shift=()):
        self._image = image
        self._exp = exp_image
        self.shift = shift
        self._cache = {}

    def var_image(self, v):
        if v == T:
            return DiffElem()
        if v not in self._cache:
            self._cache[v] = self._image(v)
        return self._cache[v]

    def __call__(self, x):
        out = DiffElem()
        for (m, w), c in x.terms.items():
            base = DiffElem({((), w): c})
            for j, (v, e) in enumerate(m):
                img = self.var_image(v)
                if img.is_zero():
                    continue
                rest = m[:j] + (((v, e - 1),) if e != 1 else ()) + m[j + 1:]
                out = out + DiffElem({(rest, w): c * e}) * img
            if w and self._exp is not None:
                xi = self._exp(w)
                if xi:
                    out = out + DiffElem({(m, ()): Fraction(1)}) * base * xi
        return out

    def commutator(self, other):
        def img(v):
            return self(other.var_image(v)) - other(self.var_image(v))
        return Derivation(img, shift=_wadd(self.shift, other.shift))

    def scale(self, c):
        return Derivation(lambda v: self.var_image(v).scale(c),
                          (lambda w: self._exp(w).scale(c)) if self._exp else None,
                          self.shift)

    def __add__(self, other):
        e1, e2 = self._exp, other._exp
        exp = None
        if e1 or e2:
            def exp(w):
                r = DiffElem()
                if e1:
                    r = r + e1(w)
                if e2:
                    r = r + e2(w)
                return r
        return Derivation(lambda v: self.var_image(v) + other.var_image(v), exp, self.shift)


class TwistedDerivation(Derivation):
    """Evolutionary derivation fixed by images of order-0 generators.

    Images of v^(n) are d^n of the image of v, so the map commutes with d
    (on weight-0 inputs; with exp images it also commutes on W_lambda).
    """

    def __init__(self, gen_images, ring, shift=(), exp_image=None):
        self.gen_images = dict(gen_images)
        self.ring = ring
        super().__init__(self._img, exp_image, shift)

    def _img(self, v):
        kind, idx, n = v
        base = self.gen_images.get((kind, idx))
        if base is None:
            return DiffElem()
        if n == 0:
            return base
        return self.ring.d(self.var_image((kind, idx, n - 1)))


def xi(P, ring):
    """Hamiltonian derivation of Int P (weight 0): Int xi(P) Q = {Int P, Int Q}."""
    P = P.density if isinstance(P, LocalFunctional) else P
    imgs = {}
    dU = [variational_derivative(P, ("u", i), ring) for i in range(ring.rank)]
    for a in range(ring.npos):
        imgs[("q", a)] = variational_derivative(P, ("p", a), ring)
        imgs[("p", a)] = -variational_derivative(P, ("q", a), ring)
    xphi = []
    for j in range(ring.rank):
        s = DiffElem()
        for i in range(ring.rank):
            g = ring.gram[i][j]
            if g:
                s = s + dU[i].scale(g)
        xphi.append(s)
        imgs[("u", j)] = ring.d(s)

    def exp_image(w):
        r = DiffElem()
        for j, c in w:
            r = r + xphi[j].scale(c)
        return r

    return TwistedDerivation(imgs, ring, (), exp_image)


def xi_weighted(Pe, ring):
    """Derivation W_0 -> W_lambda with Int xi(Pe) Q = -{Int Q, Int Pe}."""
    Pe = Pe.density if isinstance(Pe, LocalFunctional) else Pe
    shift = Pe.weight
    imgs = {}
    for a in range(ring.npos):
        imgs[("q", a)] = _vd(Pe, "p", a, ring)
        imgs[("p", a)] = -_vd(Pe, "q", a, ring)
    dphi = [phi_derivative(Pe, j, ring) for j in range(ring.rank)]
    for i in range(ring.rank):
        s = DiffElem()
        for j in range(ring.rank):
            g = ring.gram[i][j]
            if g:
                s = s - dphi[j].scale(g)
        imgs[("u", i)] = s
    return TwistedDerivation(imgs, ring, shift)


def mode_power(A, n):
    """t-power carrying the n-th mode of a spin-homogeneous density A."""
    s = spin_of(A)
    if s is None:
        raise ValueError("mode of an inhomogeneous density")
    return n + s - 1


def mode_bracket(A, n, B, m, ring):
    """{A(n), B(m)} where X(n) = Int X t^(n + spin X - 1).

    Returns (density functional, central scalar): the central part is the
    residue of the pure-t part, the rest is the t-dependent density.
    """
    P = A * tpow(mode_power(A, n))
    Q = B * tpow(mode_power(B, m))
    res = poisson_bracket(P, Q, ring).density
    tc = res.t_coefficients()
    central = Fraction(0)
    rest = DiffElem()
    for k, c in tc.items():
        pure = c.constant_term()
        if k == -1:
            central = pure
        rest = rest + (c - DiffElem.const(pure)) * tpow(k)
    return LocalFunctional(rest, ring=ring), central


# -- serialization -----------------------------------------------------------


def to_json(x, rank=None):
    out = []
    for (m, w), c in x.sorted_terms():
        c = Fraction(c)
        mono = [[v[0], v[1], v[2], e] for v, e in m]
        if rank is not None:
            lam = [str(z) for z in dense_weight(w, rank)]
        else:
            lam = [[i, str(z)] for i, z in w]
        out.append([c.numerator, c.denominator, mono, lam])
    return out


def from_json(data, rank=None):
    x = DiffElem()
    for num, den, mono, lam in data:
        m = tuple(sorted(((k, i, n), e) for k, i, n, e in mono))
        if rank is not None:
            w = make_weight([Fraction(z) for z in lam])
        else:
            w = make_weight({i: Fraction(z) for i, z in lam})
        x = x + DiffElem({(m, w): Fraction(num, den)})
    return x


def _latex_var(v, labels):
    kind, i, n = v
    if kind == "t":
        return "t"
    base = labels(kind, i)
    if n == 0:
        return base
    if n <= 2:
        return base + "'" * n
    return base + "^{(%d)}" % n


def default_labels(kind, i):
    names = {"pt": r"\tilde p", "qt": r"\tilde q"}
    return names.get(kind, kind) + "_{%d}" % (i + 1)


def _display_key(kc):
    (m, w), _c = kc
    top = max((v[2] for v, _ in m if v != T), default=-1)
    return (-top, w, tuple((v, -e) for v, e in m))


def to_latex(x, labels=default_labels, exp_label=None):
    if x.is_zero():
        return "0"
    pieces = []
    for (m, w), c in sorted(x.terms.items(), key=_display_key):
        c = Fraction(c)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        factors = []
        for v, e in m:
            s = _latex_var(v, labels)
            if e != 1:
                s = s + "^{%d}" % e if "'" not in s and "^" not in s else "(" + s + ")^{%d}" % e
            factors.append(s)
        if w:
            if exp_label is not None:
                factors.append(exp_label(w))
            else:
                lam = " + ".join(f"{z}\\phi_{{{i + 1}}}" for i, z in w)
                factors.append("e^{" + lam.replace("+ -", "- ") + "}")
        body = " ".join(factors)
        if a != 1 or not body:
            coef = str(a.numerator) if a.denominator == 1 else r"\frac{%d}{%d}" % (a.numerator, a.denominator)
            body = (coef + " " + body).strip()
        pieces.append((sign, body))
    s = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        s += f" {sign} {body}"
    return s
