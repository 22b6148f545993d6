"""Command-line front end.

Exit codes: 0 success, 1 negative verdict, 2 input error, 3 solver indeterminate.
Graph, system and piece arguments are JSON files, or ``builtin:NAME`` for a
bundled fixture (``pathcomplete list`` shows them).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import fixtures
from .certify import DEFAULT_GAMMA_CAP, DEFAULT_GAMMA_TOL, gamma_star, solve_lmi, valid_inequality_graph
from .experiments import casestudy_netcon, run_experiment
from .graph import GraphError, LabeledGraph, expand
from .lyapunov import PieceError, Pieces, check_decrease, check_feasible_numeric, induced_clf, induced_dual_clf
from .observer import CoreUniquenessError, build_observer, dual_core, extract_core, path_completeness, subset_name
from .ordering import compare
from .systems import SwitchedLinearSystem, SystemDataError

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INDETERMINATE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _load(kind: str, ref: str):
    loaders = {
        "graph": (LabeledGraph.load, fixtures.load_graph),
        "system": (SwitchedLinearSystem.load, fixtures.load_system),
        "pieces": (Pieces.load, fixtures.load_pieces),
    }
    from_file, from_fixture = loaders[kind]
    try:
        if ref.startswith("builtin:"):
            return from_fixture(ref[len("builtin:"):])
        return from_file(ref)
    except FileNotFoundError as exc:
        raise InputError(f"{kind} file not found: {ref}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{kind} {ref}: invalid JSON: {exc}") from exc
    except (GraphError, SystemDataError, PieceError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{kind} {ref}: {exc}") from exc


def _emit(doc, out: str | None = None) -> None:
    text = json.dumps(doc, indent=2, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, frozenset):
        return sorted(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _status_code(status: str) -> int:
    return {"feasible": EXIT_OK, "infeasible": EXIT_NEGATIVE}.get(status, EXIT_INDETERMINATE)


# -- subcommands ----------------------------------------------------------
def cmd_check(args) -> int:
    g = _load("graph", args.graph)
    pc = path_completeness(g)
    print(f"path-complete: {'true' if pc else 'false'}")
    if not pc:
        print("uncovered word: " + " ".join(map(str, pc.witness)))
    return EXIT_OK if pc else EXIT_NEGATIVE


def cmd_observer(args) -> int:
    g = _load("graph", args.graph)
    if not g.is_unit_labeled:
        g = expand(g)
    og = build_observer(g)
    if args.format == "dot":
        _write_text(og.to_labeled_graph().to_dot("observer"), args.out)
        return EXIT_OK
    doc = {"observer": og.to_labeled_graph().to_dict(), "root": subset_name(og.root)}
    try:
        core = dual_core(g) if args.dual else extract_core(og)
        doc["dual" if args.dual else "core"] = [sorted(p) for p in core.subsets]
    except GraphError:
        doc["core"] = None
    _emit(doc, args.out)
    return EXIT_OK if doc.get("core", True) is not None else EXIT_NEGATIVE


def cmd_expand(args) -> int:
    g = expand(_load("graph", args.graph))
    if args.format == "dot":
        _write_text(g.to_dot(), args.out)
    else:
        _emit(g.to_dict(), args.out)
    return EXIT_OK


def cmd_lmi(args) -> int:
    g, s = _load("graph", args.graph), _load("system", args.system)
    r = solve_lmi(g, s, strict_eps=args.strict_eps, gamma=args.gamma)
    print(f"status: {r.status}  margin: {r.margin:.3e}", file=sys.stderr)
    _emit(r.to_dict(), args.out)
    return _status_code(r.status)


def cmd_gamma(args) -> int:
    g, s = _load("graph", args.graph), _load("system", args.system)
    r = gamma_star(g, s, tol=args.gamma_tol, cap=args.gamma_cap)
    _emit(r.to_dict(), args.out)
    return EXIT_INDETERMINATE if r.indeterminate else EXIT_OK


def cmd_clf(args) -> int:
    g = _load("graph", args.graph)
    system = _load("system", args.system) if args.system else None
    if args.pieces:
        pieces = _load("pieces", args.pieces)
    elif system is not None:
        r = solve_lmi(g, system, strict_eps=args.strict_eps)
        if not r.feasible:
            print(f"LMIs are {r.status}; no function to emit", file=sys.stderr)
            return _status_code(r.status)
        pieces = r.pieces
    else:
        raise InputError("clf needs --pieces or --system")
    f = induced_dual_clf(g, pieces) if args.dual else induced_clf(g, pieces)
    doc = {"function": f.describe(), **f.to_dict()}
    code = EXIT_OK
    if system is not None:
        dec = check_decrease(f, system, args.samples)
        doc["decrease"] = dec.to_dict()
        code = EXIT_OK if dec.ok else EXIT_NEGATIVE
    _emit(doc, args.out)
    return code


def cmd_eval(args) -> int:
    pieces = _load("pieces", args.pieces)
    doc: dict = {}
    code = EXIT_OK
    if args.system:
        system = _load("system", args.system)
        vg = valid_inequality_graph(pieces, system, tol=args.tol)
        pc = path_completeness(vg)
        doc["valid_inequality_graph"] = vg.to_dict()
        doc["path_complete"] = bool(pc)
        doc["uncovered_word"] = None if pc else list(pc.witness)
        if args.graph:
            rep = check_feasible_numeric(_load("graph", args.graph), pieces, system)
            doc["feasibility"] = rep.to_dict()
            code = EXIT_OK if rep.feasible else EXIT_NEGATIVE
    if args.graph and args.point:
        f = induced_clf(_load("graph", args.graph), pieces)
        doc["function"] = f.describe()
        doc["values"] = [f(np.array(p, dtype=float)) for p in args.point]
    _emit(doc, args.out)
    return code


def cmd_compare(args) -> int:
    g1, g2 = _load("graph", args.g1), _load("graph", args.g2)
    _emit(compare(g1, g2), args.out)
    return EXIT_OK


def cmd_casestudy(args) -> int:
    if not args.netcon:
        raise InputError("only the networked-control case study (--netcon) is available")
    rep = casestudy_netcon(args.M)
    _emit(rep.to_dict(), args.out)
    print(f"verdict: {rep.verdict}", file=sys.stderr)
    return EXIT_OK if rep.verdict in ("stable", "unstable mode product") else EXIT_NEGATIVE


def cmd_experiment(args) -> int:
    rep = run_experiment(args.trials, base_seed=args.seed, tol=args.gamma_tol, cap=args.gamma_cap, workers=args.workers)
    if args.csv:
        rep.write_csv(args.csv)
    if args.venn_csv:
        rep.write_venn_csv(args.venn_csv)
    print(rep.summary())
    if args.out:
        _emit(rep.to_dict(), args.out)
    return EXIT_OK if rep.violations() == 0 else EXIT_NEGATIVE


def cmd_list(args) -> int:
    for name in fixtures.available():
        print(name)
    return EXIT_OK


# -- parser ---------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathcomplete", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("check", cmd_check, "decide path-completeness")
    sp.add_argument("--graph", required=True)

    sp = add("observer", cmd_observer, "observer graph and its core")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--dual", action="store_true", help="core of the transposed graph")
    sp.add_argument("--format", choices=("json", "dot"), default="json")
    sp.add_argument("--out")

    sp = add("expand", cmd_expand, "expanded (unit-labeled) form")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--format", choices=("json", "dot"), default="json")
    sp.add_argument("--out")

    sp = add("lmi", cmd_lmi, "solve the quadratic-piece LMIs")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--system", required=True)
    sp.add_argument("--strict-eps", type=float, default=0.0)
    sp.add_argument("--gamma", type=float, default=1.0, help="scale all modes by gamma")
    sp.add_argument("--out")

    sp = add("gamma", cmd_gamma, "largest certified scaling by bisection")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--system", required=True)
    sp.add_argument("--gamma-tol", type=float, default=DEFAULT_GAMMA_TOL)
    sp.add_argument("--gamma-cap", type=float, default=DEFAULT_GAMMA_CAP)
    sp.add_argument("--out")

    sp = add("clf", cmd_clf, "induced common Lyapunov function")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--pieces")
    sp.add_argument("--system")
    sp.add_argument("--dual", action="store_true", help="max-of-min form from the dual core")
    sp.add_argument("--strict-eps", type=float, default=0.0)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--out")

    sp = add("eval", cmd_eval, "valid inequalities of fixed pieces, feasibility, values")
    sp.add_argument("--pieces", required=True)
    sp.add_argument("--system")
    sp.add_argument("--graph")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--point", type=float, nargs="+", action="append", help="evaluation point (repeatable)")
    sp.add_argument("--out")

    sp = add("compare", cmd_compare, "simulation map and isomorphism between two graphs")
    sp.add_argument("--g1", required=True, help="candidate simulating graph")
    sp.add_argument("--g2", required=True, help="candidate simulated graph")
    sp.add_argument("--out")

    sp = add("casestudy", cmd_casestudy, "networked-control case study")
    sp.add_argument("--netcon", action="store_true")
    sp.add_argument("--M", type=int, required=True, choices=(1, 2, 3, 4))
    sp.add_argument("--out")

    sp = add("experiment", cmd_experiment, "random-triplet comparison of the three graphs")
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0, help="base seed; trial i uses seed + i")
    sp.add_argument("--gamma-tol", type=float, default=DEFAULT_GAMMA_TOL)
    sp.add_argument("--gamma-cap", type=float, default=DEFAULT_GAMMA_CAP)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--csv")
    sp.add_argument("--venn-csv", help="write the 8 region counts")
    sp.add_argument("--out")

    add("list", cmd_list, "bundled fixtures")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:  # malformed documents, mode-count mismatches
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CoreUniquenessError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE


if __name__ == "__main__":
    sys.exit(main())
