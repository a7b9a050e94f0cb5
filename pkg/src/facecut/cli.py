"""Command-line front end.

Exit codes: 0 success, 1 a verification found violations, 2 invalid input,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from fractions import Fraction

import numpy as np

from . import classical
from .core import SUPPORT_RTOL, DensityOperator, Kind
from .decomposition import bipartite_decompose, pure_decompose
from .errors import InputError, NumericalFailure, SchemaError
from .faces import face_membership, face_report, face_report_subnormalized, ri_membership, segment_oracle
from .io import Problem, decode_matrix, load_problem
from .optimize import (
    KrausChannel,
    constrained_linear_max,
    enorm_dual,
    enorm_pure_result,
    min_output_entropy,
)
from .verify import SUITES, RunConfig, verify_suite

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# output -----------------------------------------------------------------


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, json.dumps(obj) if isinstance(obj, list) else obj


def emit_plot_data(rows, header=("parameter", "value")) -> str:
    """Two-column CSV with a header line, rows in the given order."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for p, v in rows:
        w.writerow([repr(float(p)), repr(float(v))])
    return buf.getvalue()


def _render(result, fmt: str) -> str:
    if fmt == "csv":
        if isinstance(result, dict) and "table" in result:
            return emit_plot_data(result["table"], tuple(result.get("header", ("parameter", "value"))))
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(result):
            w.writerow([k, v])
        return buf.getvalue()
    return json.dumps(result, indent=2, allow_nan=False) + "\n"


def _write(args, result) -> None:
    text = _render(result, args.format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# helpers ----------------------------------------------------------------


def _problem(args) -> Problem:
    if not args.input:
        raise SchemaError("--input", "this command needs a problem file")
    return load_problem(args.input)


def _state(prob: Problem):
    if prob.state is None:
        raise SchemaError("state", "missing")
    return prob.state


def _support_tol(args) -> float:
    return SUPPORT_RTOL if args.tol is None else args.tol


def _single_constraint(prob: Problem):
    if len(prob.constraints) != 1:
        raise SchemaError("constraints", f"expected exactly one constraint, got {len(prob.constraints)}")
    return prob.constraints[0]


def _fraction_map(text: str) -> dict:
    out = {}
    for item in text.split(","):
        try:
            n, w = item.split(":")
            out[int(n)] = Fraction(w.strip())
        except ValueError:
            raise SchemaError("density", f"cannot parse {item!r}; expected n:weight") from None
    return out


def _fraction_list(text: str) -> tuple:
    try:
        return tuple(Fraction(t.strip()) for t in text.split(","))
    except ValueError:
        raise SchemaError("polynomial", f"cannot parse coefficients {text!r}") from None


# commands ---------------------------------------------------------------


def cmd_face_report(args):
    prob = _problem(args)
    st = _state(prob)
    if prob.options.get("subnormalized"):
        return face_report_subnormalized(st, prob.constraints, _support_tol(args)).to_dict()
    return face_report(st, prob.constraints, _support_tol(args)).to_dict()


def cmd_extreme_check(args):
    rep = cmd_face_report(args)
    return {"extreme": rep["extreme"], "rank": rep["rank"], "constrained_dim": rep["constrained_dim"]}


def cmd_face_member(args):
    prob = _problem(args)
    rho = _state(prob)
    sigma = DensityOperator(prob.option_matrix("sigma"))
    return {
        "face_member": face_membership(sigma, rho),
        "ri_member": ri_membership(sigma, rho),
        "segment_oracle": segment_oracle(sigma, rho),
    }


def cmd_decompose(args):
    prob = _problem(args)
    return pure_decompose(_state(prob), prob.constraints, reduce=bool(prob.options.get("reduce", True))).to_dict()


def cmd_decompose_bipartite(args):
    prob = _problem(args)
    return bipartite_decompose(_state(prob), prob.option_matrix("H_A"), prob.option_matrix("H_B")).to_dict()


def cmd_linmax(args):
    prob = _problem(args)
    c = _single_constraint(prob)
    return constrained_linear_max(prob.option_matrix("M"), c.observable, c.bound).to_dict()


def cmd_enorm(args):
    prob = _problem(args)
    c = _single_constraint(prob)
    a = prob.option_matrix("A", square=False)
    dual = enorm_dual(a, c.observable, c.bound)
    pure = enorm_pure_result(a, c.observable, c.bound, restarts=args.restarts, seed=args.seed)
    pure_val = float(np.sqrt(max(pure.value, 0.0)))
    h = c.observable.matrix
    shift = min(0.0, float(c.observable.spectrum[0]))
    lin = constrained_linear_max(a.conj().T @ a, h - shift * np.eye(h.shape[0]), c.bound - shift)
    return {
        "dual": dual,
        "pure": pure_val,
        "difference": abs(dual - pure_val),
        "multiplier": lin.multiplier,
        "status": pure.status.value,
        "restarts": pure.restarts,
    }


def _channel(prob: Problem) -> KrausChannel:
    raw = prob.options.get("kraus")
    if not isinstance(raw, list) or not raw:
        raise SchemaError("options.kraus", "expected a non-empty list of matrices")
    return KrausChannel(tuple(decode_matrix(k, f"options.kraus[{i}]", square=False) for i, k in enumerate(raw)))


def cmd_min_entropy(args):
    prob = _problem(args)
    c = _single_constraint(prob)
    kind = Kind(args.kind) if args.kind else c.kind
    res = min_output_entropy(_channel(prob), c.observable, c.bound, kind, restarts=args.restarts, seed=args.seed)
    out = res.to_dict()
    out["kind"] = kind.value
    return out


def cmd_sweep(args):
    prob = _problem(args)
    c = _single_constraint(prob)
    h = c.observable
    lo = h.spectrum[0] if args.emin is None else args.emin
    hi = h.spectrum[-1] if args.emax is None else args.emax
    es = np.linspace(lo, hi, args.points) if args.points > 0 else np.array([])
    if args.quantity == "enorm":
        a = prob.option_matrix("A", square=False)
        vals = [enorm_dual(a, h, e) for e in es]
    else:
        m = prob.option_matrix("M")
        vals = [constrained_linear_max(m, h, e).value for e in es]
    table = [(float(e), float(v)) for e, v in zip(es, vals)]
    return {"quantity": args.quantity, "header": ["E", args.quantity], "table": table}


def cmd_classical(args):
    sub = args.classical_cmd
    if sub == "simplex-member":
        q = classical.FiniteDensity(_fraction_map(args.q))
        p = classical.FiniteDensity(_fraction_map(args.p))
        wit = classical.simplex_face_witness(q, p)
        return {
            "face_member": classical.simplex_face_membership(q, p),
            "ri_member": classical.simplex_ri_membership(q, p),
            "mu": None if wit is None else str(wit[0]),
            "lambda": None if wit is None else str(wit[1]),
        }
    if sub == "poly-member":
        q = classical.Polynomial(_fraction_list(args.q))
        p = classical.Polynomial(_fraction_list(args.p))
        lam = classical.poly_segment_witness(q, p)
        return {
            "face_member": classical.poly_face_membership(q, p),
            "ri_member": classical.poly_ri_membership(q, p),
            "lambda": None if lam is None else str(lam),
            "degrees": [q.degree, p.degree],
        }
    if sub == "hadamard-chain":
        base = classical.geometric(args.ratio)
        links = []
        for k in range(args.k + 1):
            a, b = classical.hadamard_iterate(base, k), classical.hadamard_iterate(base, k + 1)
            links.append({
                "k": k,
                "forward": classical.ratio_limit_report(a, b, args.N),
                "backward": classical.ratio_limit_report(b, a, args.N),
            })
        ok = all(x["forward"]["verdict"] == "bounded" and x["backward"]["verdict"] == "diverging" for x in links)
        return {"links": links, "strict_chain_signature": ok}
    if sub == "zeta-order":
        rep = classical.ratio_limit_report(classical.zeta_density(args.s), classical.zeta_density(args.t), args.N)
        rep["expected_member"] = args.t <= args.s
        return rep
    if sub == "triangle-demo":
        return classical.triangle_counterexample()
    raise SchemaError("classical", f"unknown subcommand {sub}")


def cmd_verify(args):
    dims = tuple(int(x) for x in args.dims.split(",")) if args.dims else None
    cfg = RunConfig(seed=args.seed, samples=args.samples, dims=dims, ell=args.ell,
                    restarts=args.restarts, timing=args.timing)
    rep = verify_suite(args.suite, cfg)
    return rep.to_dict(timing=args.timing), (EXIT_OK if rep.passed else EXIT_VIOLATION)


# parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="JSON problem file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="relative support cutoff for rank decisions")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write the report here instead of stdout")

    parser = _Parser(prog="facecut", description="Faces, pure decompositions and energy-constrained optimization "
                     "for finite-dimensional quantum states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        return p

    add("face-report", cmd_face_report, "face dimensions of the state in --input")
    add("face-member", cmd_face_member, "is options.sigma in the face generated by the state")
    add("extreme-check", cmd_extreme_check, "is the state an extreme point of the constrained set")
    add("decompose", cmd_decompose, "pure-state decomposition preserving constraint values")
    add("decompose-bipartite", cmd_decompose_bipartite, "decomposition preserving local expectations")
    for name, fn, text in (("enorm", cmd_enorm, "operator E-norm by both routes"),
                           ("min-entropy", cmd_min_entropy, "constrained minimal output entropy"),
                           ("linmax", cmd_linmax, "maximize Tr M rho under one constraint")):
        p = add(name, fn, text)
        p.add_argument("--restarts", type=int, default=32 if name == "min-entropy" else 4)
        if name == "min-entropy":
            p.add_argument("--kind", choices=("sublevel", "level"), default=None)

    p = add("sweep", cmd_sweep, "value table over a range of bounds E")
    p.add_argument("--quantity", choices=("enorm", "linmax"), default="enorm")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--emin", type=float, default=None)
    p.add_argument("--emax", type=float, default=None)

    p = sub.add_parser("classical", help="classical simplex and polynomial examples")
    csub = p.add_subparsers(dest="classical_cmd", required=True, parser_class=_Parser)
    for name in ("simplex-member", "poly-member"):
        c = csub.add_parser(name, parents=[common])
        c.add_argument("--q", required=True)
        c.add_argument("--p", required=True)
        c.set_defaults(func=cmd_classical)
    c = csub.add_parser("hadamard-chain", parents=[common])
    c.add_argument("--k", type=int, default=2)
    c.add_argument("--N", type=int, default=1000)
    c.add_argument("--ratio", type=float, default=0.5)
    c.set_defaults(func=cmd_classical)
    c = csub.add_parser("zeta-order", parents=[common])
    c.add_argument("--s", type=float, required=True)
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--N", type=int, default=10000)
    c.set_defaults(func=cmd_classical)
    c = csub.add_parser("triangle-demo", parents=[common])
    c.set_defaults(func=cmd_classical)

    p = add("verify", cmd_verify, "randomized verification suites")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--dims", default=None, help="comma-separated dimensions")
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
        code = EXIT_OK
        if isinstance(result, tuple):
            result, code = result
        elif args.func is cmd_classical and args.classical_cmd == "triangle-demo" and not result["holds"]:
            code = EXIT_VIOLATION
        _write(args, result)
        return code
    except InputError as exc:
        print(f"facecut: input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"facecut: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"facecut: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
