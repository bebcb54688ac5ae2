"""Command-line front end.

All results go to stdout (or ``--report``) as JSON; a short human summary goes
to stderr.  Exit status: 0 success, 1 verification failure, 2 usage error or
missing weights.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import CacheError, JacobiViolation, KontraError, LimitExceeded, MissingWeights, NotNilpotent
from .graphs import (
    count_graphs,
    enumerate_graphs,
    graph_key,
    has_aerial_cycle,
    is_union,
    parse_key,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# option defaults; argparse uses None so config-file values can fill gaps
DEFAULTS = {
    "n": 1,
    "samples": 100000,
    "seed": 0,
    "cache": None,
    "jobs": 1,
    "backend": None,
    "order": 1,
    "mode": "symbolic",
    "weights": "symbolic",
    "pairs": 10,
    "c": "1/2",
    "assume": "unimodular,nilpotent",
    "strategy": "pivot",
    "report": None,
    "basis": "given",
}


class UsageError(Exception):
    pass


def _emit(obj, report_path=None):
    text = json.dumps(obj, indent=1, sort_keys=False) + "\n"
    if report_path:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        Path(report_path).write_text(text)
    else:
        sys.stdout.write(text)


def _say(msg):
    print(msg, file=sys.stderr)


def _run_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "config", "report") and v is not None}
    return cfg


def _envelope(args, body: dict) -> dict:
    return {"tool": "kontra", "version": __version__, "config": _run_config(args), **body}


def _algebra(name: str, basis: str = "varadarajan"):
    from . import lie

    try:
        C = lie.algebra(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if basis == "varadarajan" and lie.nilpotency_class(C) is not None:
        C = lie.in_varadarajan_basis(C)
    return C


def _cache_path(args) -> Path:
    from .weights import default_cache_path

    return Path(args.cache) if args.cache else default_cache_path()


def _load_weights(source):
    from .weights import WeightCache

    if source == "symbolic":
        return "symbolic"
    try:
        return WeightCache.load(source)
    except CacheError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# graphs


def cmd_graphs_enumerate(args):
    graphs = enumerate_graphs(args.n)
    _emit([g.to_json() for g in graphs], args.report)
    _say(f"|G_{args.n}| = {len(graphs)}")
    return EXIT_OK


def cmd_graphs_stats(args):
    graphs = enumerate_graphs(args.n)
    loops = sum(has_aerial_cycle(g) for g in graphs)
    unions = sum(is_union(g) for g in graphs) if args.n else 0
    twice = sum(any(g.in_degree(v) >= 2 for v in range(1, g.n + 1)) for g in graphs)
    body = {
        "n": args.n,
        "count": len(graphs),
        "expected": count_graphs(args.n),
        "aerial_cycles": loops,
        "unions": unions,
        "vertex_hit_twice": twice,
    }
    _emit(_envelope(args, body), args.report)
    return EXIT_OK if body["count"] == body["expected"] else EXIT_FAIL


# --------------------------------------------------------------------------
# weights


def cmd_weights_compute(args):
    from .weights import WeightCache, compute_weight_table

    path = _cache_path(args)
    try:
        cache = WeightCache.load(path)
    except CacheError as exc:
        raise UsageError(str(exc)) from None
    before = len(cache)
    cache = compute_weight_table(args.n, args.samples, args.seed, cache, backend=args.backend, jobs=args.jobs)
    cache.save(path)
    body = {"cache": str(path), "entries": len(cache), "added": len(cache) - before}
    _emit(_envelope(args, body), args.report)
    _say(f"wrote {len(cache)} entries to {path}")
    return EXIT_OK


def cmd_weights_show(args):
    from .weights import WeightCache

    path = _cache_path(args)
    try:
        cache = WeightCache.load(path)
    except CacheError as exc:
        raise UsageError(str(exc)) from None
    obj = cache.to_json()
    if args.n is not None:
        prefix = f"n{args.n}:"
        obj["entries"] = {k: v for k, v in obj["entries"].items() if k.startswith(prefix)}
    _emit(obj, args.report)
    return EXIT_OK


# --------------------------------------------------------------------------
# lie


def cmd_lie_check(args):
    from . import lie

    try:
        C = lie.algebra(args.algebra)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    except JacobiViolation as exc:
        _emit(_envelope(args, {"jacobi": False, "witness": list(exc.triple), "defect": [str(x) for x in exc.defect]}),
              args.report)
        return EXIT_FAIL
    cls = lie.nilpotency_class(C)
    uni = lie.is_unimodular(C)
    try:
        lie.varadarajan_basis(C)
        adapted = True
    except NotNilpotent:
        adapted = False
    body = {"jacobi": True, "nilpotency": cls, "unimodular": uni.unimodular, "varadarajan": adapted}
    if not uni.unimodular:
        body["unimodular_witness"] = {"j": uni.j, "value": str(uni.value)}
    out = dict(body)
    out.update({"tool": "kontra", "version": __version__, "config": _run_config(args)})
    _emit(out, args.report)
    return EXIT_OK


def cmd_lie_basis(args):
    from . import lie

    try:
        C = lie.algebra(args.algebra)
        P = lie.varadarajan_basis(C)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    except NotNilpotent as exc:
        _emit(_envelope(args, {"error": str(exc)}), args.report)
        return EXIT_FAIL
    D = C.transform(P)
    body = {"matrix": [[str(x) for x in row] for row in P], "constants": D.to_json(), "adapted": lie.is_adapted(D)}
    _emit(_envelope(args, body), args.report)
    return EXIT_OK if body["adapted"] else EXIT_FAIL


# --------------------------------------------------------------------------
# star


def cmd_star_eval(args):
    from .star import star, weight_values
    from .symbolic import GaussianPolynomial, PolynomialSyntaxError

    C = _algebra(args.algebra, args.basis)
    try:
        f = GaussianPolynomial.parse(args.f, args.c, C.dim)
        g = GaussianPolynomial.parse(args.g, args.c, C.dim)
    except PolynomialSyntaxError as exc:
        raise UsageError(str(exc)) from None
    source = str(_cache_path(args)) if args.weights == "numeric" else args.weights
    weights = _load_weights(source)
    series = star(f, g, args.order, C, weights)
    body = series.to_json()
    if weights != "symbolic":
        numeric = series.evaluate(weight_values(weights))
        for coeff, values in zip(body["coeffs"], numeric):
            for term, e in zip(coeff["terms"], sorted(values)):
                term["value"], term["error"] = values[e]
    _emit(_envelope(args, body), args.report)
    return EXIT_OK


# --------------------------------------------------------------------------
# trace


def cmd_trace_defect(args):
    from . import lie
    from .trace import test_pairs, trace_defect

    C = _algebra(args.algebra, args.basis)
    weights = "symbolic"
    if args.mode == "numeric":
        path = args.weights if args.weights not in (None, "symbolic") else str(_cache_path(args))
        weights = _load_weights(path)
    results = []
    ok = True
    for idx, (f, g) in enumerate(test_pairs(C.dim, args.pairs, args.seed)):
        orders = trace_defect(C, f, g, args.order, weights)
        passed = all(o.is_zero if args.mode == "symbolic" else o.within(3.0) for o in orders)
        ok &= passed
        results.append({"pair": idx, "f": f.to_json(), "g": g.to_json(),
                        "orders": [o.to_json() for o in orders], "pass": passed})
    body = {
        "algebra": args.algebra,
        "nilpotent": lie.nilpotency_class(C) is not None,
        "mode": args.mode,
        "seed": args.seed,
        "pairs": results,
        "verdict": "pass" if ok else "fail",
    }
    _emit(_envelope(args, body), args.report)
    _say(f"trace defect {args.algebra} order<={args.order}: {body['verdict']}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_trace_prop1(args):
    from .trace import prop1_check

    C = _algebra(args.algebra, "given")
    res = prop1_check(C, args.pairs, args.seed)
    body = res.to_json()
    body["seed"] = args.seed
    body["verdict"] = "pass" if res.consistent else "fail"
    _emit(_envelope(args, body), args.report)
    _say(f"prop1 {args.algebra}: unimodular={res.unimodular} zero={res.zero_defects}/{res.pairs}")
    return EXIT_OK if res.consistent else EXIT_FAIL


# --------------------------------------------------------------------------
# reduce


def cmd_reduce_ibp(args):
    from .graphs import GraphError
    from .ibp import certify_step, evaluate_term, from_graph, ibp_reduce
    from .trace import test_pairs

    if args.graph:
        try:
            graphs = [parse_key(k) for k in args.graph]
        except GraphError as exc:
            raise UsageError(str(exc)) from None
    else:
        graphs = enumerate_graphs(args.order)
    assume = {a.strip() for a in args.assume.split(",") if a.strip()}
    unknown = assume - {"unimodular", "nilpotent", "none"}
    if unknown:
        raise UsageError(f"unknown assumptions {sorted(unknown)}")
    C = _algebra(args.algebra, args.basis) if args.algebra else None
    pairs = test_pairs(C.dim, args.pairs, args.seed) if C is not None else []
    items = []
    ok = True
    for g in graphs:
        t = from_graph(g)
        if t is None:
            items.append({"graph": graph_key(g), "verdict": "vanishes", "note": "vertex hit twice"})
            continue
        rep = ibp_reduce([t], "unimodular" in assume, "nilpotent" in assume, args.strategy)
        item = {"graph": graph_key(g), "verdict": rep.verdict, "counts": rep.to_json()["counts"],
                "steps": len(rep.steps)}
        if C is not None:
            sound = all(certify_step(s, C, f, h) for s in rep.steps for f, h in pairs)
            residual_zero = all(evaluate_term(r, C, f, h).is_zero()
                                for r in rep.residual["irreducible"] for f, h in pairs)
            item["steps_sound"] = sound
            item["residual_zero"] = residual_zero
            ok &= sound and residual_zero
        if args.graph:
            item["report"] = rep.to_json()
        items.append(item)
    body = {"graphs": items, "vanishing": sum(i["verdict"] == "vanishes" for i in items), "total": len(items),
            "verdict": "pass" if ok else "fail"}
    _emit(_envelope(args, body), args.report)
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags (flags take precedence)")
    common.add_argument("--report", help="write the JSON report here instead of stdout")
    common.add_argument("--jobs", type=int, help="worker threads for Monte-Carlo sampling")

    p = argparse.ArgumentParser(prog="kontra", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kontra {__version__}")
    sub = p.add_subparsers(dest="group", required=True)

    def verb(group, name, func, help_):
        sp = group.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    g = sub.add_parser("graphs", help="admissible graph enumeration").add_subparsers(dest="verb", required=True)
    sp = verb(g, "enumerate", cmd_graphs_enumerate, "list G_n as JSON")
    sp.add_argument("--n", type=int)
    sp = verb(g, "stats", cmd_graphs_stats, "counts and structure of G_n")
    sp.add_argument("--n", type=int)

    w = sub.add_parser("weights", help="Monte-Carlo weight tables").add_subparsers(dest="verb", required=True)
    sp = verb(w, "compute", cmd_weights_compute, "estimate weights of G_n into a cache")
    sp.add_argument("--n", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--cache")
    sp.add_argument("--backend", choices=["compiled", "python"])
    sp = verb(w, "show", cmd_weights_show, "print a weight cache")
    sp.add_argument("--cache")
    sp.add_argument("--n", type=int)

    lg = sub.add_parser("lie", help="Lie algebra checks").add_subparsers(dest="verb", required=True)
    sp = verb(lg, "check", cmd_lie_check, "Jacobi, nilpotency, unimodularity, adapted basis")
    sp.add_argument("algebra")
    sp = verb(lg, "basis", cmd_lie_basis, "adapted (Varadarajan) basis")
    sp.add_argument("algebra")

    st = sub.add_parser("star", help="truncated star products").add_subparsers(dest="verb", required=True)
    sp = verb(st, "eval", cmd_star_eval, "evaluate f * g")
    sp.add_argument("--algebra", required=True)
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--c")
    sp.add_argument("--order", type=int)
    sp.add_argument("--weights", help="'symbolic', 'numeric' (use the cache) or a cache file")
    sp.add_argument("--cache")
    sp.add_argument("--basis", choices=["varadarajan", "given"])

    tr = sub.add_parser("trace", help="trace functional checks").add_subparsers(dest="verb", required=True)
    sp = verb(tr, "defect", cmd_trace_defect, "integrated star commutators per order")
    sp.add_argument("--algebra", required=True)
    sp.add_argument("--order", type=int)
    sp.add_argument("--mode", choices=["symbolic", "numeric"])
    sp.add_argument("--weights")
    sp.add_argument("--cache")
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--basis", choices=["varadarajan", "given"])
    sp = verb(tr, "prop1", cmd_trace_prop1, "integrated Poisson bracket vs unimodularity")
    sp.add_argument("--algebra", required=True)
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--seed", type=int)

    rd = sub.add_parser("reduce", help="integration-by-parts engine").add_subparsers(dest="verb", required=True)
    sp = verb(rd, "ibp", cmd_reduce_ibp, "reduce graph integrands")
    sp.add_argument("--graph", action="append", help="GraphKey, repeatable")
    sp.add_argument("--order", type=int)
    sp.add_argument("--assume", help="comma list of unimodular, nilpotent")
    sp.add_argument("--strategy", choices=["pivot", "exhaustive"])
    sp.add_argument("--algebra", help="certify steps on this algebra")
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--basis", choices=["varadarajan", "given"])
    return p


def _apply_config(args):
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
    for key in vars(args):
        if getattr(args, key) is None:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    return args


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        _apply_config(args)
        return args.func(args)
    except UsageError as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    except MissingWeights as exc:
        _say(f"error: {exc}")
        _emit({"error": "missing weights", "missing": exc.keys})
        return EXIT_USAGE
    except (LimitExceeded, KontraError, ValueError) as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
