"""Command-line front end: verification runner and emitters.

Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 bad
configuration (unsupported algebra, invalid cap, unknown target).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from importlib import resources

from .errors import ConfigError, ConsistencyError

SUPPORTED_SERIES = ("A",)
MAX_RANK = 3
SUITES = ("screening", "sepvar", "zerocurv", "conserved", "freefield", "properties")
TARGETS = ("hierarchy", "nonlocal", "kernel", "b-polys", "ope", "character", "conserved")
OUT_ENV = "SCREENALG_OUT"


@dataclass
class RunConfig:
    algebra: str = "A1"
    max_order: int = 6      # derivative order cap
    degree: int = 8         # polynomial degree cap (bigraded characters)
    order: int = 6          # q-series order
    t_window: int = 6       # spectral window of loop matrices
    flows: int = 4          # flow depth
    modes: int = 3          # mode range |n|, |m|
    max_spin: int = 4
    format: str = ""        # empty: the target's default
    suite: str = "all"
    seed: int = 0
    out: str = ""

    CAPS = ("max_order", "degree", "order", "t_window", "flows", "modes", "max_spin")

    def validate(self):
        from .rootsys import parse_algebra
        rs = parse_algebra(self.algebra)
        if rs.series not in SUPPORTED_SERIES or rs.rank > MAX_RANK:
            raise ConfigError("unsupported algebra %s (supported: A1..A%d)" % (self.algebra, MAX_RANK))
        for name in self.CAPS:
            v = getattr(self, name)
            # character order 0 is the trivial truncation and is allowed
            low = 0 if name == "order" else 1
            if not isinstance(v, int) or v < low:
                raise ConfigError("cap %s must be an integer >= %d, got %r" % (name, low, v))
        if self.suite != "all":
            bad = [s for s in self.suite.split(",") if s not in SUITES]
            if bad:
                raise ConfigError("unknown suite(s): %s" % ",".join(bad))
        if self.format not in ("", "json", "latex", "text"):
            raise ConfigError("unknown format %r" % self.format)
        return rs

    def suites(self):
        return list(SUITES) if self.suite == "all" else self.suite.split(",")

    def caps(self):
        return {k: getattr(self, k) for k in self.CAPS}

    def to_text(self):
        return "".join("%s = %s\n" % (f.name, getattr(self, f.name)) for f in fields(self))

    @classmethod
    def from_text(cls, text):
        kinds = {f.name: f.type for f in fields(cls)}
        vals = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("config line %d is not key = value" % lineno)
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            if k not in kinds:
                raise ConfigError("unknown config key %r" % k)
            vals[k] = _convert(k, v, kinds[k])
        return cls(**vals)


def _convert(key, value, kind):
    if kind in (int, "int"):
        try:
            return int(value)
        except ValueError:
            raise ConfigError("config key %s needs an integer, got %r" % (key, value)) from None
    return value


# -- suites ---------------------------------------------------------------------


def _check(name, ok, **info):
    out = {"name": name, "ok": bool(ok)}
    out.update(info)
    return out


def _note(name, **info):
    """A reported comparison that does not count as pass or fail."""
    out = {"name": name, "ok": None}
    out.update(info)
    return out


def _golden(name):
    return json.loads(resources.files("screenalg").joinpath("golden", name).read_text())


def suite_screening(rs, cfg):
    from .screening import (character_check, kernel_generators, kk_check, nested_commutator,
                            generator_vars, serre_check)
    out = []
    try:
        kernel_generators(rs)
        out.append(_check("kernel_generators", True))
    except AssertionError as e:
        out.append(_check("kernel_generators", False, error=str(e)))
    n = rs.rank
    nodes = range(n + 1) if n == 1 else range(1, n + 1)
    for i in nodes:
        for j in nodes:
            if i != j:
                r = serre_check(rs, i, j, min(cfg.max_order, 6))
                out.append(_check("serre_%d_%d" % (i, j), r["ok"], depth=r["depth"]))
    if n == 1:
        vars_ = generator_vars(rs, 2)
        for i, j in ((1, 0), (0, 1)):
            D = nested_commutator(rs, i, j, 2)
            out.append(_check("serre_control_%d_%d" % (i, j), any(D.var_image(v) for v in vars_)))
        r = kk_check(rs, cfg.modes)
        out.append(_check("kirillov_kostant", r["ok"], checked=r["checked"]))
    r = character_check(rs, cfg.order)
    out.append(_check("character", r["ok"], involution=r["involution"]))
    return out


def suite_sepvar(rs, cfg):
    from .sepvar import (bigraded_character, compare_routes, f_alpha_normalization_sl2,
                         recursion_identity, round_trip_check)
    k = min(cfg.max_order, 5)
    # rank 3 lifts and monomial counts grow fast; these caps keep a run in minutes
    rt = min(k, 4 if rs.rank < 3 else 2)
    deg = min(cfg.degree, 8 if rs.rank < 3 else 5)
    out = [
        _check("routes_agree", compare_routes(rs, k)["ok"], order=k),
        _check("recursion_identity", recursion_identity(rs, k)["ok"], order=k),
        _check("round_trip", round_trip_check(rs, rt)["ok"], order=rt),
        _check("bigraded_character", bigraded_character(rs, cfg.order, deg)["ok"],
               order=cfg.order, degree=deg),
    ]
    if rs.rank == 1:
        out.append(_check("f_alpha_normalization", f_alpha_normalization_sl2()["ok"]))
    return out


def suite_zerocurv(rs, cfg):
    from . import zerocurv as zc
    from .diffalg import from_json
    out = []
    if rs.rank == 1:
        out.append(_check("dressed_connection", zc.dressing("A1").A == zc.dressed_connection_sl2()))
        for order in (2, 4):
            R = zc._resolvent("A1", order)
            out.append(_check("resolvent_%d" % order,
                              R.commutator_defect().is_zero() and R.casimir_defect().is_zero()))
        cmp = zc.depth2_comparison()
        out.append(_note("depth2_printed_display", match=cmp["match"], known_deviation=not cmp["match"]))
        if cfg.flows >= 2:
            g1, g2 = _golden("makns2.json"), _golden("akns2.json")
            D = zc.makns_flow(2)
            out.append(_check("makns2_p_golden", D.images[("pt", 0)] == from_json(g1["p"])))
            out.append(_check("makns2_q_golden", D.images[("qt", 0)] == from_json(g1["q"])))
            rep = zc.makns2_report()
            out.append(_note("makns2_q_printed", match=rep["q_matches"],
                             q2p1_coefficient=str(rep["q2p1_coefficient"])))
            A = zc.akns_flow(2)
            out.append(_check("akns2_golden", A.gen_images[("E", 0)] == from_json(g2["E"])
                              and A.gen_images[("F", 0)] == from_json(g2["F"])))
            out.append(_check("nls_text", zc.nls_reduction(A, 2)["text"] == g2["nls"]))
        fc = zc.flow_commutativity(cfg.flows)
        out.append(_check("flow_commutativity", fc["ok"], n_max=cfg.flows))
        for n in range(1, min(cfg.flows, 4) + 1):
            out.append(_check("screening_commutation_%d" % n, zc.screening_commutation(rs, n, 1)["ok"]))
        out.append(_check("nonlocal_commutation", not zc.nonlocal_commutation(2, 1)))
        out.append(_note("nonlocal_residual_printed_sign", vanishes=zc.nonlocal_residual(1).is_zero()))
        out.append(_check("nonlocal_residual_reversed_sign", zc.nonlocal_residual(-1).is_zero()))
    else:
        depth = min(cfg.flows, 2)
        for n in range(1, depth + 1):
            out.append(_check("screening_commutation_%d" % n, zc.screening_commutation(rs, n, 0)["ok"]))
    return out


def suite_conserved(rs, cfg):
    from .conserved import commutativity_check, flow_match, iom_search, twisted_commutation
    out = []
    top = cfg.max_spin if rs.rank == 1 else min(cfg.max_spin, 2)
    cands = []
    for s in range(1, top + 1):
        found = iom_search(rs, s)
        cands += found
        out.append(_check("iom_count_spin_%d" % s, len(found) == rs.rank, found=len(found)))
    c = commutativity_check(cands, rs)
    out.append(_check("iom_commute", c["ok"]))
    for x in cands:
        try:
            twisted_commutation(rs, x.density)
            ok = True
        except ConsistencyError:
            ok = False
        out.append(_check("twisted_commutation_spin_%d" % x.spin, ok))
    if rs.rank == 1 and top >= 2:
        x = [c for c in cands if c.spin == 2][0]
        try:
            out.append(_note("flow_match_spin_2", alpha=str(flow_match(x.density, 2))))
        except ConsistencyError as e:
            out.append(_check("flow_match_spin_2", False, error=str(e)))
    return out


def suite_freefield(rs, cfg):
    from . import freefield as ff
    if rs.rank != 1:
        return [_note("freefield", skipped="quantum checks cover sl2 only")]
    cur = ff.wakimoto_currents_sl2()
    out = [
        _check("affine_relations", ff.affine_relation_check()["ok"], level=str(ff.level())),
        _check("skew_symmetry", ff.skew_symmetry_check()["ok"]),
        _check("level_consistency", ff.level_consistency()["ok"]),
    ]
    for t in (("e", "e", "f"), ("e", "f", "f"), ("h", "e", "f")):
        out.append(_check("jacobi_" + "".join(t), ff.jacobi_check(*[cur[x] for x in t])["ok"]))
    for k, v in ff.screening_suite().items():
        out.append(_check("screening_" + k, v))
    out.append(_check("classical_limit", ff.classical_limit_bridge()["ok"]))
    return out


def suite_properties(rs, cfg):
    from .properties import property_suite
    r = property_suite(cfg.seed, rs.name, flows=cfg.flows)
    return [_check(k, v["ok"]) for k, v in r.items()]


RUNNERS = {
    "screening": suite_screening,
    "sepvar": suite_sepvar,
    "zerocurv": suite_zerocurv,
    "conserved": suite_conserved,
    "freefield": suite_freefield,
    "properties": suite_properties,
}


def run_verify(cfg):
    """(exit status, report)."""
    try:
        rs = cfg.validate()
    except ConfigError as e:
        return 2, {"ok": False, "error": str(e)}
    report = {"algebra": cfg.algebra, "caps": cfg.caps(), "seed": cfg.seed, "suites": {}}
    failed = False
    for name in cfg.suites():
        try:
            checks = RUNNERS[name](rs, cfg)
        except ConfigError as e:
            return 2, {"ok": False, "error": str(e)}
        except ConsistencyError as e:
            checks = [_check(name, False, error=str(e))]
        ok = all(c["ok"] is not False for c in checks)
        failed = failed or not ok
        report["suites"][name] = {"ok": ok, "checks": checks}
    report["ok"] = not failed
    return (1 if failed else 0), report


# -- emitters --------------------------------------------------------------------


def _latex_ef(kind, i):
    return {"E": "E", "F": "F"}.get(kind, {"pt": r"\tilde p", "qt": r"\tilde q"}.get(kind, kind) + "_{%d}" % (i + 1))


def emit_hierarchy(rs, cfg, fmt):
    from . import zerocurv as zc
    from .diffalg import to_json, to_latex
    flows = {}
    for n in range(1, cfg.flows + 1):
        D = zc.makns_flow(n) if rs.rank == 1 else zc.rho_flow(rs, n)
        flows[n] = {"%s_%d" % k: D.images[k] for k in sorted(D.images)}
    akns = {}
    if rs.rank == 1:
        for n in range(1, cfg.flows + 1):
            A = zc.akns_flow(n)
            akns[n] = {"E": A.gen_images[("E", 0)], "F": A.gen_images[("F", 0)]}
    if fmt == "json":
        doc = {"algebra": rs.name, "flows": {str(n): {k: to_json(v, rs.rank) for k, v in f.items()}
                                             for n, f in flows.items()}}
        if akns:
            doc["akns"] = {str(n): {k: to_json(v) for k, v in f.items()} for n, f in akns.items()}
            doc["nls"] = zc.nls_reduction(zc.akns_flow(2), 2)["text"] if cfg.flows >= 2 else None
        return _dumps(doc)
    lines = []
    for n, f in flows.items():
        for k, v in f.items():
            kind, a = k.rsplit("_", 1)
            lines.append(r"\partial_{\tau_{%d}} %s = %s" % (n, _latex_ef(kind, int(a)), to_latex(v, _latex_ef)))
    for n, f in akns.items():
        for k, v in f.items():
            lines.append(r"\partial_{\tau_{%d}} %s = %s" % (n, k, to_latex(v, _latex_ef)))
    if akns and cfg.flows >= 2:
        lines.append(zc.nls_reduction(zc.akns_flow(2), 2)["text"])
    return "\n".join(lines) + "\n"


def emit_nonlocal(rs, cfg, fmt):
    from .diffalg import to_latex
    from .screening import equation_json, nonlocal_system
    eqs = nonlocal_system(rs, include_zero=True)
    if fmt == "json":
        return _dumps({"algebra": rs.name, "equations": [equation_json(e, rs.rank) for e in eqs]})
    return "\n".join("%s = %s" % (e.lhs, to_latex(e.rhs, _plain_labels)) for e in eqs) + "\n"


def _plain_labels(kind, i):
    return "%s_{%d}" % (kind, i + 1)


def emit_kernel(rs, cfg, fmt):
    from .diffalg import to_json, to_latex
    from .screening import kernel_generators
    kg = kernel_generators(rs)
    items = [("%s_%d" % (lab[0], lab[1] + 1), X) for lab, X in kg.items()]
    if fmt == "json":
        return _dumps({"algebra": rs.name, "generators": {k: to_json(X, rs.rank) for k, X in items}})
    return "\n".join("%s = %s" % (k, to_latex(X, _plain_labels)) for k, X in items) + "\n"


def emit_bpolys(rs, cfg, fmt):
    from .diffalg import to_json, to_latex
    from .sepvar import b_polys_sl2
    if rs.rank != 1:
        raise ConfigError("b-polys are emitted for A1 only")
    b = b_polys_sl2(cfg.max_order)
    if fmt == "json":
        return _dumps({k: [to_json(x) for x in v] for k, v in b.items()})
    lines = []
    for k, sign in (("minus", "-"), ("plus", "+")):
        for n, x in enumerate(b[k]):
            lines.append("B^{%s}_{%d} = %s" % (sign, n, to_latex(x)))
    return "\n".join(lines) + "\n"


def emit_ope(rs, cfg, fmt):
    from . import freefield as ff
    if rs.rank != 1:
        raise ConfigError("OPE tables are emitted for A1 only")
    cur = ff.wakimoto_currents_sl2()
    table = {}
    for x in ("e", "h", "f"):
        for y in ("e", "h", "f"):
            table[x + y] = ff.wick_ope(cur[x], cur[y])
    if fmt == "json":
        return _dumps({"level": str(ff.level()), "ope": {k: v.to_json() for k, v in table.items()}})
    lines = []
    for k, ope in table.items():
        parts = ["\\frac{%s}{(z-w)^{%d}}" % (ff.to_text(v), p) for p, v in sorted(ope.items(), reverse=True)]
        lines.append("%s(z) %s(w) \\sim %s" % (k[0], k[1], " + ".join(parts) if parts else "0"))
    return "\n".join(lines) + "\n"


def series_text(ser, rank):
    """q-series {(qdeg, u-weight): c} as text, constant term first."""
    parts = []
    for (qd, u), c in sorted(ser.items()):
        if not c:
            continue
        fs = []
        if qd:
            fs.append("q" if qd == 1 else "q^%d" % qd)
        for i, e in enumerate(u):
            if e:
                name = "u" if rank == 1 else "u%d" % (i + 1)
                fs.append(name if e == 1 else "%s^%d" % (name, e))
        body = "*".join(fs)
        if not body:
            parts.append(str(c))
        else:
            parts.append(body if c == 1 else "%d*%s" % (c, body))
    return " + ".join(parts) if parts else "0"


def emit_character(rs, cfg, fmt):
    from .screening import product_character
    ser = product_character(rs, cfg.order)
    if fmt == "json":
        return _dumps({"algebra": rs.name, "order": cfg.order,
                       "terms": [[qd, list(u), c] for (qd, u), c in sorted(ser.items()) if c]})
    return series_text(ser, rs.rank) + "\n"


def emit_conserved(rs, cfg, fmt):
    from .conserved import iom_candidates
    from .diffalg import to_json, to_latex
    out = []
    for s in range(1, cfg.max_spin + 1):
        for c in iom_candidates(rs.name, s):
            out.append(c)
    if fmt == "json":
        return _dumps({"algebra": rs.name, "candidates": [
            {"spin": c.spin, "density": to_json(c.density, rs.rank)} for c in out]})
    return "\n".join("I_{%d} = \\int %s" % (c.spin, to_latex(c.density)) for c in out) + "\n"


EMITTERS = {
    "hierarchy": (emit_hierarchy, "json"),
    "nonlocal": (emit_nonlocal, "json"),
    "kernel": (emit_kernel, "json"),
    "b-polys": (emit_bpolys, "json"),
    "ope": (emit_ope, "json"),
    "character": (emit_character, "text"),
    "conserved": (emit_conserved, "json"),
}


def emit(cfg, target):
    """(exit status, document text)."""
    if target not in EMITTERS:
        return 2, "unknown target %r (choose from %s)" % (target, ", ".join(TARGETS))
    try:
        rs = cfg.validate()
        fn, default = EMITTERS[target]
        fmt = cfg.format or default
        return 0, fn(rs, cfg, "text" if fmt == "text" else fmt)
    except ConfigError as e:
        return 2, str(e)


def wakimoto(check, fmt):
    from . import freefield as ff
    if check == "relations":
        rep = ff.affine_relation_check()
        rep["skew_symmetry"] = ff.skew_symmetry_check()["ok"]
        rep["level_consistency"] = ff.level_consistency()["ok"]
        rep["classical_limit"] = ff.classical_limit_bridge()["ok"]
        ok = rep["ok"] and rep["skew_symmetry"] and rep["level_consistency"] and rep["classical_limit"]
        rep["ok"] = ok
    else:
        res = ff.screening_suite()
        rep = {"ok": all(res.values()), "pairs": res}
    if fmt == "json":
        text = _dumps(rep)
    else:
        lines = ["%s: %s" % (k, "ok" if (v["ok"] if isinstance(v, dict) else v) else "FAIL")
                 for k, v in sorted(rep.get("pairs", {}).items())]
        for k in ("level", "skew_symmetry", "level_consistency", "classical_limit"):
            if k in rep:
                lines.append("%s: %s" % (k, rep[k]))
        lines.append("overall: %s" % ("ok" if rep["ok"] else "FAIL"))
        text = "\n".join(lines) + "\n"
    return (0 if rep["ok"] else 1), text


# -- argument handling ---------------------------------------------------------------


def _dumps(doc):
    return json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n"


def _parser():
    p = argparse.ArgumentParser(prog="screenalg", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra")
    common.add_argument("--flows", type=int)
    common.add_argument("--max-spin", dest="max_spin", type=int)
    common.add_argument("--order", type=int)
    common.add_argument("--max-order", dest="max_order", type=int)
    common.add_argument("--degree", type=int)
    common.add_argument("--modes", type=int)
    common.add_argument("--format", choices=("json", "latex", "text"))
    common.add_argument("--config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--suite")
    e = sub.add_parser("emit", parents=[common])
    e.add_argument("target")
    sub.add_parser("hierarchy", parents=[common])
    sub.add_parser("conserved", parents=[common])
    w = sub.add_parser("wakimoto", parents=[common])
    w.add_argument("--check", choices=("relations", "screening"), default="relations")
    return p


def build_config(ns):
    cfg = RunConfig()
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                cfg = RunConfig.from_text(fh.read())
        except OSError as e:
            raise ConfigError("cannot read config: %s" % e) from None
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    if not cfg.out and os.environ.get(OUT_ENV):
        cfg.out = os.environ[OUT_ENV]
    return cfg


def _write(cfg, name, text):
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, name), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def main(argv=None):
    ns = _parser().parse_args(argv)
    try:
        cfg = build_config(ns)
    except ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    if ns.command == "verify":
        status, report = run_verify(cfg)
        if status == 2:
            print("error: %s" % report["error"], file=sys.stderr)
        _write(cfg, "verify.json", _dumps(report))
        return status
    if ns.command in ("emit", "hierarchy", "conserved"):
        target = ns.target if ns.command == "emit" else ns.command
        status, text = emit(cfg, target)
        if status:
            print("error: %s" % text, file=sys.stderr)
            return status
        ext = {"json": "json", "latex": "tex"}.get(cfg.format or EMITTERS[target][1], "txt")
        _write(cfg, "%s.%s" % (target, ext), text)
        return 0
    try:
        cfg.validate()
    except ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    status, text = wakimoto(ns.check, cfg.format or "text")
    _write(cfg, "wakimoto-%s.%s" % (ns.check, "json" if cfg.format == "json" else "txt"), text)
    return status


if __name__ == "__main__":
    sys.exit(main())
