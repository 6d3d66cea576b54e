"""Randomized property checks over W_0 (seeded, exact).

Each check draws low-degree differential polynomials from a seeded
random.Random, so a run is reproducible from (seed, caps).
"""

from __future__ import annotations

import random
from fractions import Fraction

from .diffalg import DiffElem, TwistedDerivation, poisson_bracket, variational_derivative, w0
from .rootsys import parse_algebra


def random_density(rng, ring, degree=3, order=2, terms=3):
    """Sum of a few random monomials in p, q, u of bounded degree and order."""
    gens = list(ring.generators)
    out = DiffElem()
    for _ in range(terms):
        x = DiffElem.const(Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 2])))
        for _ in range(rng.randint(1, degree)):
            kind, idx = rng.choice(gens)
            x = x * DiffElem.var(kind, idx, rng.randint(0, order))
        out = out + x
    return out


def jacobi_property(rs, rng, trials=5, degree=2, order=1):
    """Jacobi identity for the local Poisson bracket on random triples."""
    ring = w0(rs)
    fails = []
    for k in range(trials):
        P, Q, R = (random_density(rng, ring, degree, order) for _ in range(3))
        s = DiffElem()
        for A, B, C in ((P, Q, R), (Q, R, P), (R, P, Q)):
            inner = poisson_bracket(B, C, ring).density
            s = s + poisson_bracket(A, inner, ring).density
        if not _class_zero(s, ring):
            fails.append(k)
    return {"ok": not fails, "trials": trials, "failures": fails}


def _class_zero(x, ring):
    from .diffalg import functional_is_zero
    return functional_is_zero(x, ring)


def euler_property(rs, rng, trials=10, degree=3, order=2):
    """delta/delta v of a total derivative vanishes, for every generator."""
    ring = w0(rs)
    fails = []
    for k in range(trials):
        x = random_density(rng, ring, degree, order)
        dx = ring.d(x)
        for g in ring.generators:
            if not variational_derivative(dx, g, ring).is_zero():
                fails.append((k, g))
    return {"ok": not fails, "trials": trials, "failures": fails}


def evolutionary_property(rs, rng, trials=10, degree=2, order=2):
    """An evolutionary derivation commutes with d."""
    ring = w0(rs)
    fails = []
    for k in range(trials):
        imgs = {g: random_density(rng, ring, degree, order, terms=2) for g in ring.generators}
        D = TwistedDerivation(imgs, ring)
        x = random_density(rng, ring, degree + 1, order)
        if D(ring.d(x)) != ring.d(D(x)):
            fails.append(k)
    return {"ok": not fails, "trials": trials, "failures": fails}


def property_suite(seed=0, algebra="A1", trials=5, flows=4):
    from .zerocurv import flow_commutativity
    rs = parse_algebra(algebra)
    rng = random.Random(seed)
    out = {
        "jacobi": jacobi_property(rs, rng, trials),
        "euler": euler_property(rs, rng, 2 * trials),
        "evolutionary": evolutionary_property(rs, rng, 2 * trials),
    }
    fc = flow_commutativity(flows)
    out["flow_commutativity"] = {"ok": fc["ok"] if isinstance(fc, dict) else bool(fc), "n_max": flows}
    return out
