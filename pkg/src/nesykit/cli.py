"""Command line entry point.

Subcommands: compile, check, count, wmc, sl, entropy, grad, gen, train,
can-train, sample.  Exit codes: 0 success, 1 usage, 2 input error,
3 resource cap.  With --json, exactly one JSON document (carrying a
"schema" version field) is emitted; floats are serialized with 17
significant digits.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import constraints as cs
from . import formula as fm
from . import queries as qr
from . import trainer as tn
from .circuit import NodeCapExceeded, check_structure, model_count, read_nnf, write_nnf
from .compiler import compile as compile_formula

SCHEMA = 1
LN2 = math.log(2.0)


class _InputError(Exception):
    """Bad user-supplied data: maps to exit code 2."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# serialization helpers

def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isinf(f):
            return '"inf"' if f > 0 else '"-inf"'
        if math.isnan(f):
            return '"nan"'
        return format(f, ".17g")
    if isinstance(v, str):
        out = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{out}"'
    if isinstance(v, dict):
        items = ", ".join(f'{_json_value(str(k))}: {_json_value(x)}'
                          for k, x in v.items())
        return "{" + items + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)!r}")


def _emit_json(doc: dict, path: str | None):
    doc = {"schema": SCHEMA, **doc}
    text = _json_value(doc) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(float(v), ".12g")


def _wants_json(args) -> bool:
    return bool(args.json) or args.json_path is not None


# ---------------------------------------------------------------------------
# input helpers

def _read_text(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise _InputError(str(exc)) from None


def _formula_from_args(args) -> fm.Formula:
    if getattr(args, "dimacs", None):
        return fm.parse_dimacs(_read_text(args.dimacs))
    spec = args.formula
    if spec is None:
        raise _InputError("one of --formula or --dimacs is required")
    text = _read_text(spec) if os.path.exists(spec) else spec
    return fm.parse_formula(text)


def _load_circuit(path: str):
    return read_nnf(_read_text(path))


def _parse_probs(spec: str, var_count: int) -> np.ndarray:
    """File path (one decimal per line) or inline comma list; file wins."""
    if os.path.exists(spec):
        tokens = _read_text(spec).split()
    else:
        tokens = [t for t in spec.split(",") if t.strip()]
    try:
        vals = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise _InputError(f"bad probability value: {exc}") from None
    if len(vals) != var_count:
        raise _InputError(
            f"expected {var_count} probabilities, got {len(vals)}"
        )
    if np.any((vals < 0) | (vals > 1)):
        raise _InputError("probabilities must lie in [0, 1]")
    return vals


def _write_or_print(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# query-style commands

def cmd_compile(args) -> int:
    f = _formula_from_args(args)
    order = None
    if args.order:
        try:
            order = [int(t) for t in args.order.split(",")]
        except ValueError:
            raise _InputError(f"bad --order list {args.order!r}") from None
    circ, stats = compile_formula(f, order=order, max_nodes=args.max_nodes)
    _write_or_print(write_nnf(circ), args.output)
    if args.stats:
        _emit_json(
            {
                "nodes": stats.nodes,
                "edges": stats.edges,
                "cache_hits": stats.cache_hits,
                "seconds": stats.seconds,
            },
            args.stats,
        )
    return 0


def cmd_check(args) -> int:
    circ = _load_circuit(args.circuit)
    rep = check_structure(circ, determinism_mode=args.determinism)
    det = rep.deterministic
    if _wants_json(args):
        _emit_json(
            {
                "decomposable": rep.decomposable,
                "smooth": rep.smooth,
                "deterministic": det,
                "witness": rep.witness,
            },
            args.json_path,
        )
    else:
        word = {True: "yes", False: "no", None: "unchecked"}
        print(f"decomposable: {word[rep.decomposable]}")
        print(f"smooth: {word[rep.smooth]}")
        print(f"deterministic: {word[det]}")
        if rep.witness is not None:
            print(f"witness: {rep.witness}")
    return 0


def cmd_count(args) -> int:
    circ = _load_circuit(args.circuit)
    n = model_count(circ)
    if _wants_json(args):
        _emit_json({"count": n}, args.json_path)
    else:
        print(n)
    return 0


def _scalar_command(args, what: str) -> int:
    circ = _load_circuit(args.circuit)
    probs = _parse_probs(args.probs, circ.var_count)
    if what == "wmc":
        v = qr.wmc(circ, probs)
    elif what == "sl":
        v = qr.semantic_loss(circ, probs)
    else:
        v = qr.nesy_entropy(circ, probs)
        if args.log_base == "2":
            v /= LN2
    if _wants_json(args):
        _emit_json({what: v}, args.json_path)
    else:
        print(_fmt(v))
    return 0


def cmd_grad(args) -> int:
    circ = _load_circuit(args.circuit)
    probs = _parse_probs(args.probs, circ.var_count)
    batch = probs[None, :]
    if args.of == "entropy":
        g = qr.entropy_gradient(circ, probs)
        if args.log_base == "2":
            g = g / LN2
    else:
        _, grads = qr.batch_query(circ, batch, args.of, with_grad=True)
        g = grads[0]
    if _wants_json(args):
        _emit_json({"of": args.of, "grad": list(g)}, args.json_path)
    else:
        print(",".join(format(float(x), ".17g") for x in g))
    return 0


# ---------------------------------------------------------------------------
# constraint generation

_TILE_NAMES = ["empty", "top-left", "top-right", "body-left", "body-right"]


def _gen_formula(args):
    kind = args.kind
    if kind == "exactly-one":
        f = cs.exactly_one(args.n)
        layout = {"kind": kind, "var_count": f.var_count,
                  "candidates": args.n,
                  "variable": "candidate i is variable i"}
    elif kind == "total-order":
        f = cs.total_order(args.n)
        layout = {"kind": kind, "var_count": f.var_count, "items": args.n,
                  "variable": "item i at position j is variable i*n + j"}
    elif kind in ("path", "path-full"):
        g = cs.GridSpec(args.rows, args.cols)
        if kind == "path":
            f = cs.simple_path(g, args.source, args.dest, cap=args.cap)
            layout = {"kind": kind, "var_count": f.var_count,
                      "rows": args.rows, "cols": args.cols,
                      "source": args.source, "dest": args.dest,
                      "edges": [list(e) for e in g.edges()],
                      "variable": "edge e is variable e"}
        else:
            f = cs.simple_path_full(g, cap=args.cap)
            layout = {"kind": kind, "var_count": f.var_count,
                      "rows": args.rows, "cols": args.cols,
                      "nodes": g.n_nodes,
                      "edges": [list(e) for e in g.edges()],
                      "variable": ("endpoint indicator of node u is variable "
                                   "u; edge e is variable n_nodes + e")}
    elif kind == "tiles":
        f = cs.tile_grid(args.rows, args.cols, 5, cs.PIPES)
        layout = {"kind": kind, "var_count": f.var_count,
                  "rows": args.rows, "cols": args.cols, "vocab": 5,
                  "tiles": _TILE_NAMES,
                  "variable": "cell (r,c) holding tile t is variable "
                              "(r*cols + c)*vocab + t"}
    else:  # conditional
        spec = args.parts
        if spec is None:
            raise _InputError("--parts is required for --kind conditional")
        text = _read_text(spec) if os.path.exists(spec) else spec
        chunks = [c.strip() for c in text.replace("\n", ";").split(";")
                  if c.strip()]
        parts = [fm.parse_formula(c) for c in chunks]
        f = cs.conditional(parts)
        n = f.var_count - len(parts)
        layout = {"kind": kind, "var_count": f.var_count,
                  "content_vars": n, "code_vars": len(parts),
                  "variable": "code bit i is variable content_vars + i"}
    return f, layout


def cmd_gen(args) -> int:
    f, layout = _gen_formula(args)
    _write_or_print(fm.format_formula(f), args.output)
    layout_path = args.layout
    if layout_path is None and args.output not in (None, "-"):
        layout_path = args.output + ".layout.json"
    if layout_path is not None:
        _emit_json(layout, layout_path)
    return 0


# ---------------------------------------------------------------------------
# training commands

def _metrics_doc(m: tn.Metrics) -> dict:
    return {"coherent": m.coherent, "incoherent": m.incoherent,
            "constraint": m.constraint}


def cmd_train(args) -> int:
    if args.task == "grid":
        g = cs.GridSpec(args.rows, args.cols)
        dataset = tn.gen_grid_dataset(g, args.examples, seed=args.seed)
        circ, _ = compile_formula(cs.simple_path_full(g))
    else:
        dataset = tn.gen_preference_dataset(args.items, args.examples,
                                            seed=args.seed)
        m = args.items - (args.items + 1) // 2
        circ, _ = compile_formula(cs.total_order(m))
    cfg = tn.TrainConfig(
        seed=args.seed, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, lambda_sl=args.lambda_sl, lambda_ent=args.lambda_ent,
        entropy=args.entropy, hidden=tuple(
            int(t) for t in args.hidden.split(",") if t
        ),
    )
    result = tn.train_supervised(cfg, dataset, circ)
    test = tn.evaluate_metrics(result.model, dataset, circ, dataset.test_idx)
    if args.json_path is not None:
        _emit_json(
            {
                "task": args.task,
                "epochs": [
                    {"epoch": h["epoch"], **_metrics_doc(h["val"])}
                    for h in result.history
                ],
                "test": _metrics_doc(test),
            },
            args.json_path,
        )
    if args.json_path != "-":
        print(
            "test coherent %.2f incoherent %.2f constraint %.2f"
            % (test.coherent, test.incoherent, test.constraint)
        )
    return 0


def cmd_can_train(args) -> int:
    circ, _ = compile_formula(cs.tile_grid(args.rows, args.cols, 5, cs.PIPES))
    data = tn.uniform_models(circ, args.data, seed=args.seed).astype(np.float64)
    cfg = tn.CanConfig(
        seed=args.seed, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, bootstrap=args.bootstrap, lambda_max=args.lambda_max,
        vocab=5,
    )
    result = tn.train_can(cfg, data, circ)
    last = result.history[-1]
    if args.json_path is not None:
        _emit_json(
            {
                "task": args.task,
                "epochs": [
                    {
                        "epoch": h["epoch"],
                        "validity": h["validity"],
                        "diversity": h["diversity"],
                        "pipe_tiles": h["pipe_tiles"],
                    }
                    for h in result.history
                ],
            },
            args.json_path,
        )
    if args.json_path != "-":
        print(
            "final validity %.2f diversity %.4f pipe_tiles %.2f"
            % (last["validity"], last["diversity"], last["pipe_tiles"])
        )
    return 0


def cmd_sample(args) -> int:
    circ = _load_circuit(args.circuit)
    rows = tn.uniform_models(circ, args.n, seed=args.seed)
    if _wants_json(args):
        _emit_json({"samples": [[int(b) for b in row] for row in rows]},
                   args.json_path)
    else:
        for row in rows:
            print("".join(str(int(b)) for b in row))
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_json_flags(p):
    p.add_argument("--json", action="store_true",
                   help="emit one JSON document instead of text")
    p.add_argument("--json-path", default=None, metavar="FILE",
                   help="write the JSON document here instead of stdout")


def build_parser() -> _ArgumentParser:
    root = _ArgumentParser(prog="nesykit",
                           description="constraint circuits and losses")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a formula to an NNF circuit")
    p.add_argument("--formula", help="s-expression text or file path")
    p.add_argument("--dimacs", help="DIMACS CNF file path")
    p.add_argument("-o", "--output", default=None, help="NNF output path")
    p.add_argument("--order", default=None,
                   help="comma-separated variable order")
    p.add_argument("--max-nodes", type=int, default=5_000_000)
    p.add_argument("--stats", default=None, metavar="FILE",
                   help="write compile stats JSON here")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("check", help="report circuit structure properties")
    p.add_argument("--circuit", required=True)
    p.add_argument("--determinism", choices=("skip", "brute-force"),
                   default="brute-force",
                   help="determinism check mode (brute force is guarded)")
    _add_json_flags(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("count", help="exact model count")
    p.add_argument("--circuit", required=True)
    _add_json_flags(p)
    p.set_defaults(fn=cmd_count)

    for name, help_text in (("wmc", "weighted model count"),
                            ("sl", "semantic loss"),
                            ("entropy", "constraint-conditioned entropy")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--circuit", required=True)
        p.add_argument("--probs", required=True,
                       help="comma list or file with one value per line")
        if name == "entropy":
            p.add_argument("--log-base", choices=("e", "2"), default="e")
        _add_json_flags(p)
        p.set_defaults(fn=lambda a, w=name: _scalar_command(a, w))

    p = sub.add_parser("grad", help="gradient of a query w.r.t. the probs")
    p.add_argument("--circuit", required=True)
    p.add_argument("--probs", required=True)
    p.add_argument("--of", choices=("wmc", "sl", "entropy"), default="wmc")
    p.add_argument("--log-base", choices=("e", "2"), default="e")
    _add_json_flags(p)
    p.set_defaults(fn=cmd_grad)

    p = sub.add_parser("gen", help="generate a constraint formula")
    p.add_argument("--kind", required=True,
                   choices=("exactly-one", "total-order", "path",
                            "path-full", "tiles", "conditional"))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--rows", type=int, default=2)
    p.add_argument("--cols", type=int, default=2)
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--dest", type=int, default=1)
    p.add_argument("--cap", type=int, default=cs.PATH_CAP)
    p.add_argument("--parts", default=None,
                   help="semicolon-separated s-expressions or a file")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--layout", default=None, metavar="FILE",
                   help="variable-layout JSON sidecar path")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("train", help="supervised run with constraint losses")
    p.add_argument("--task", choices=("grid", "pref"), default="grid")
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=3)
    p.add_argument("--items", type=int, default=5)
    p.add_argument("--examples", type=int, default=400)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lambda-sl", type=float, default=0.0)
    p.add_argument("--lambda-ent", type=float, default=0.0)
    p.add_argument("--entropy", choices=tn.ENTROPY_MODES, default="none")
    p.add_argument("--hidden", default="128,128")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", dest="json_path", default=None, metavar="FILE",
                   help="write metrics JSON here ('-' for stdout)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("can-train", help="constrained GAN on tile grids")
    p.add_argument("--task", choices=("pipes",), default="pipes")
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=3)
    p.add_argument("--data", type=int, default=500,
                   help="number of uniformly sampled training structures")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--bootstrap", type=int, default=5)
    p.add_argument("--lambda-max", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", dest="json_path", default=None, metavar="FILE")
    p.set_defaults(fn=cmd_can_train)

    p = sub.add_parser("sample", help="draw uniform models of a circuit")
    p.add_argument("--circuit", required=True)
    p.add_argument("-n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_json_flags(p)
    p.set_defaults(fn=cmd_sample)

    return root


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (NodeCapExceeded, cs.PathCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (_InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
