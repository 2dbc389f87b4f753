"""Command line interface: ``mixcub <command> [options]``.

Every command accepts ``--config <file.json>``; the JSON object maps option
names (with ``-`` or ``_``) to values and is read before the command line, so
explicit flags win.  Guard violations exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from . import fiblattice, fourier, harness, smolyak, splines
from .cubature import apply_rule
from .errors import GuardError
from .fooling import FoolingConfig, node_set_from_spec, build_witness, check_vanishing


def _write(rows: list[dict], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        for row in rows:
            out.write(json.dumps(row) + "\n")
        return
    if not rows:
        return
    w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _p(text: str) -> float:
    return splines.INF if text.lower() in ("inf", "infinity") else float(text)


def cmd_lattice(a) -> None:
    rows = [{"mu": p.mu, "x_num": p.x.numerator, "x_den": p.x.denominator,
             "y_num": p.y.numerator, "y_den": p.y.denominator} for p in fiblattice.fibonacci_lattice(a.n)]
    _write(rows, a.format)


def cmd_dual(a) -> None:
    _write([{"k1": k.k1, "k2": k.k2} for k in fiblattice.dual_enumerate(a.n, a.box)], a.format)


def cmd_zaremba(a) -> None:
    value, w = fiblattice.zaremba_min_product(a.n)
    b = fiblattice.fibonacci(a.n).b_n
    _write([{"n": a.n, "b_n": b, "min_product": value, "k1": w.k1, "k2": w.k2, "ratio": value / b}], a.format)


def _integrand(spec: str):
    f = harness.parse_integrand(spec)
    if isinstance(f, list):
        raise ValueError("integrate takes a single integrand, not a battery")
    return f


def cmd_integrate(a) -> None:
    rule = harness.parse_rule(a.rule)
    f = _integrand(a.fn)
    if isinstance(f, harness.WitnessSpec):
        w, _ = f.build(None if f.nodes else harness.NodeSet(rule.num, rule.den))
        value = float(np.dot(rule.weights, w(rule.points)))
        exact = w.exact_integral
    elif isinstance(f, harness.KorobovFunction):
        value = f.rule_error(rule) + 1.0
        exact = 1.0
    else:
        value = apply_rule(rule, f)
        exact = f.exact_integral
    row = {"rule": a.rule, "fn": a.fn, "nodes": rule.size, "value": repr(value)}
    if rule.nominal_size is not None:
        row["nominal_nodes"] = rule.nominal_size
    if exact is not None:
        row["exact"] = repr(exact)
        row["error"] = repr(value - exact)
    _write([row], a.format)


def cmd_faber(a) -> None:
    f = _integrand(a.fn)
    if not callable(f):
        raise ValueError("faber needs a function, not a witness spec")
    coeffs = splines.faber_decompose(f, a.levels)
    if a.besov:
        norm = splines.besov_norm_faber(coeffs, splines.BesovParams.parse(a.besov))
        print(f"# besov_norm={norm!r}")
    _write([dict(zip(("j1", "j2", "m1", "m2", "coef"), r)) for r in coeffs.rows()], a.format)


def cmd_chinorm(a) -> None:
    ps = [_p(v) for v in a.p.split(",")]
    rows = []
    for total in range(a.smax + 1):
        for s in smolyak.compositions(total, 2):
            for p, (lhs, rhs) in fourier.chi_norm_checks(a.n, s, ps).items():
                rows.append({"n": a.n, "s1": s[0], "s2": s[1], "p": p, "norm": lhs, "law": rhs,
                             "ratio": lhs / rhs})
    _write(rows, a.format)


def _poly(spec: str) -> fourier.TrigPoly2:
    text = open(spec[1:]).read() if spec.startswith("@") else spec
    data = json.loads(text)
    coeffs = {}
    for key, val in data.items():
        k = tuple(int(v) for v in key.split(","))
        coeffs[k] = complex(*val) if isinstance(val, list) else complex(val)
    return fourier.TrigPoly2.from_dict(coeffs)


def cmd_fnorm(a) -> None:
    system = fourier.SHARP if a.system == "sharp" else fourier.SMOOTH
    poly = _poly(a.fn)
    value = fourier.fourier_besov_norm(poly, splines.BesovParams.parse(a.besov), system)
    _write([{"system": a.system, "besov": a.besov, "norm": repr(value)}], a.format)


def cmd_smolyak(a) -> None:
    grid = smolyak.smolyak_grid(a.d, a.m)
    print(f"# d={a.d} m={a.m} points={grid.size}")
    if a.weights:
        if a.d != 2:
            raise GuardError("cubature weights are implemented for d = 2")
        rule = smolyak.smolyak_cubature(a.m)
        rows = [{"x": str(Fraction(int(n[0]), rule.den)), "y": str(Fraction(int(n[1]), rule.den)),
                 "weight": repr(float(w))} for n, w in zip(rule.num, rule.weights)]
        _write(rows, a.format)
    elif a.dump:
        rows = [{f"x{i + 1}": str(Fraction(int(v), grid.den)) for i, v in enumerate(row)} for row in grid.num]
        _write(rows, a.format)


def cmd_compare(a) -> None:
    budgets = [int(float(v)) for v in (a.budgets or str(a.budget)).split(",")]
    rows = harness.compare_budget(a.fn, budgets)
    sys.stdout.write(harness.budget_report(a.fn, rows, a.format))


def cmd_witness(a) -> None:
    nodes = node_set_from_spec(a.nodes)
    config = FoolingConfig(nodes.d, a.r, splines.BesovParams.parse(a.besov))
    w = build_witness(a.kind, nodes, config)
    worst = check_vanishing(w, nodes)
    _write([{"kind": a.kind, "nodes": a.nodes, "node_count": nodes.size, "m": w.m, "atoms": w.atom_count,
             "C": repr(w.C), "integral": repr(w.exact_integral), "lower_bound": repr(abs(w.exact_integral)),
             "max_on_nodes": worst}], a.format)


def cmd_converge(a) -> None:
    lo, _, hi = a.range.partition(":")
    spec = harness.ExperimentSpec(a.rule, a.fn, int(lo), int(hi or lo), a.besov, a.fit, a.pin_beta, a.format)
    sys.stdout.write(harness.run_experiment(spec))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixcub", description="Fibonacci and Smolyak cubature toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(func=func)
        return p

    p = add("lattice", cmd_lattice, "list the Fibonacci lattice")
    p.add_argument("--n", type=int, required=True)
    p = add("dual", cmd_dual, "enumerate the dual lattice in a box")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--box", type=int, required=True)
    p = add("zaremba", cmd_zaremba, "minimal hyperbolic weight of the dual lattice")
    p.add_argument("--n", type=int, required=True)

    p = add("integrate", cmd_integrate, "apply a rule to a built-in integrand")
    p.add_argument("--rule", required=True)
    p.add_argument("--fn", required=True)
    p = add("faber", cmd_faber, "Faber coefficients of a built-in function")
    p.add_argument("--fn", required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--besov")
    p = add("chinorm", cmd_chinorm, "norms of the chi_s polynomials")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--smax", type=int, required=True)
    p.add_argument("--p", default="1,2,inf")
    p = add("fnorm", cmd_fnorm, "Fourier-side Besov norm of a trig polynomial")
    p.add_argument("--fn", required=True, help='JSON map {"k1,k2": [re, im]} or @file')
    p.add_argument("--besov", required=True)
    p.add_argument("--system", choices=("sharp", "smooth"), default="sharp")

    p = add("smolyak", cmd_smolyak, "Smolyak grid and cubature weights")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--dump", action="store_true")
    p.add_argument("--weights", action="store_true")
    p = add("compare", cmd_compare, "Fibonacci vs Smolyak at matched node budgets")
    p.add_argument("--fn", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--budget", type=int)
    g.add_argument("--budgets")
    p = add("witness", cmd_witness, "fooling function and certified lower bound")
    p.add_argument("--nodes", required=True)
    p.add_argument("--besov", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--kind", choices=("gstar", "gk", "phi1", "phi2", "phi3", "phi4"), default="gstar")
    p = add("converge", cmd_converge, "error sweep with optional rate fit")
    p.add_argument("--rule", choices=("fib", "fibnp", "smolyak"), required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--range", required=True, help="lo:hi")
    p.add_argument("--besov")
    p.add_argument("--fit", action="store_true")
    p.add_argument("--pin-beta", type=float)
    return parser


def _config_tokens(path: str) -> list[str]:
    with open(path) as fh:
        data = json.load(fh)
    tokens = []
    for key, val in data.items():
        if key in ("command", "config"):
            continue
        flag = "--" + key.replace("_", "-")
        if val is True:
            tokens.append(flag)
        elif val is False or val is None:
            continue
        else:
            tokens += [flag, ",".join(map(str, val)) if isinstance(val, list) else str(val)]
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    tokens = _config_tokens(known.config)
    if rest and not rest[0].startswith("-"):
        return rest[:1] + tokens + rest[1:]
    with open(known.config) as fh:
        command = json.load(fh).get("command")
    if not command:
        raise SystemExit("mixcub: config file needs a 'command' entry when none is given")
    return [command] + tokens + rest


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_expand_config(argv))
        args.func(args)
    except GuardError as exc:
        print(f"mixcub: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"mixcub: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
