"""Command-line front end.  Exit status: 0 success, 1 verdict no/disagree, 2 usage or input error."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import dichotomy, lattice, oracle
from .defset import DefSet, affine_op, boolean_op, is_group_definable, member
from .formula import FormulaSyntaxError, ScopeError, format_formula, free_vars, parse_formula, quantifier_depth
from .model import GroundModel, ModelError, format_ext, parse_ext
from .qe import eliminate_quantifiers, formula_to_defset


class UsageError(Exception):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


# ---------------------------------------------------------------- input helpers


def _read_json(text: str):
    """Inline JSON, or the path of a JSON file."""
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON: {exc}") from None


def _model(args) -> GroundModel:
    return GroundModel.parse(args.model)


def _formula_text(args, which="formula"):
    text = getattr(args, which, None)
    path = getattr(args, "file", None) if which == "formula" else None
    if text is None and path:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    if text is None:
        raise UsageError(f"--{which} (or --file) is required")
    return text


def _formula(args, which="formula"):
    return parse_formula(_formula_text(args, which), _model(args))


def _params(args) -> dict:
    out = {}
    if not args.params:
        return out
    for part in args.params.split(","):
        if "=" not in part:
            raise UsageError(f"bad parameter binding {part!r}; expected name=value")
        k, v = part.split("=", 1)
        out[k.strip()] = Fraction(v.strip())
    return out


def _var(args, f) -> str:
    if args.var:
        return args.var
    fv = free_vars(f) - set(_params(args))
    if len(fv) > 1:
        raise UsageError(f"several free variables {sorted(fv)}; pick one with --var")
    return next(iter(fv), "x")


def _set(args, which="formula", set_which="set") -> DefSet:
    src = getattr(args, set_which, None)
    if src:
        return DefSet.from_dict(_read_json(src))
    f = _formula(args, which)
    return formula_to_defset(f, _var(args, f), _params(args), _model(args))


def _window(args) -> oracle.Window:
    model = _model(args)
    if model.is_discrete:
        return oracle.Window.discrete(args.window or 1000, args.margin if args.margin is not None else 200)
    return oracle.Window.dense(
        model,
        H=args.height or 64,
        B=args.window or 100,
        margin=args.margin if args.margin is not None else 200,
    )


def _group(args) -> lattice.LatticeGroup:
    if not args.gens:
        raise UsageError("--gens is required")
    return lattice.LatticeGroup.from_json(_read_json(args.gens))


# ---------------------------------------------------------------- commands


def cmd_parse(args):
    f = _formula(args)
    return 0, {"formula": format_formula(f), "free": sorted(free_vars(f)), "quantifier_depth": quantifier_depth(f)}


def cmd_qe(args):
    f = _formula(args)
    g = eliminate_quantifiers(f, _model(args))
    return 0, {"input": format_formula(f), "output": format_formula(g)}


def cmd_normalize(args):
    if args.pieces:
        from .defset import normalize

        raw = []
        for p in _read_json(args.pieces):
            if isinstance(p, list) and len(p) == 4:
                raw.append((parse_ext(p[0]), parse_ext(p[1]), Fraction(p[2]), int(p[3])))
            else:
                raw.append(Fraction(p[0] if isinstance(p, list) else p))
        D = normalize(raw, _model(args))
    else:
        D = _set(args)
    return 0, D.to_dict()


def cmd_member(args):
    if args.at is None:
        raise UsageError("--at is required")
    D = _set(args)
    ok = member(D, Fraction(args.at))
    return (0 if ok else 1), {"member": ok, "g": str(Fraction(args.at))}


def cmd_bool(args):
    D1 = _set(args)
    if args.op == "complement":
        out = boolean_op("complement", D1)
    else:
        D2 = _set(args, "formula2", "set2")
        out = boolean_op(args.op, D1, D2)
    return 0, out.to_dict()


def cmd_affine(args):
    D = _set(args)
    arg = None if args.op == "reflect" else (Fraction(args.arg) if args.op == "translate" else int(args.arg))
    if args.op != "reflect" and args.arg is None:
        raise UsageError(f"{args.op} needs --arg")
    return 0, affine_op(args.op, D, arg).to_dict()


def cmd_group_definable(args):
    v = is_group_definable(_set(args))
    return (0 if v else 1), v.to_dict()


def cmd_extract_order(args):
    D = _set(args)
    try:
        res = dichotomy.extract_interval(D)
    except dichotomy.GroupDefinableInput as exc:
        return 1, {"error": str(exc), "group_definable": True}
    return 0, res.to_dict()


def cmd_order_check(args):
    D = _set(args)
    try:
        res = dichotomy.extract_interval(D)
    except dichotomy.GroupDefinableInput as exc:
        return 1, {"error": str(exc), "group_definable": True}
    W = _window(args)
    pts = [g for g in W.points() if g in res.interval]
    if args.limit:
        pts = pts[: args.limit]
    R = dichotomy.order_relation(res)
    tab = oracle.brute_table(R.formula("a", "b"), {"a": pts, "b": pts}, W)
    lt = np.array([[a < b for b in pts] for a in pts], dtype=bool) if pts else np.zeros((0, 0), bool)
    bad = np.argwhere(tab != lt)
    cex = None
    if len(bad):
        i, j = bad[0]
        cex = {"x": str(pts[i]), "y": str(pts[j])}
    rep = oracle.Report(not len(bad), cex, {"interval_points": len(pts), "pairs": len(pts) ** 2,
                                            "mismatches": int(len(bad))}, window=W.to_dict())
    out = rep.to_dict()
    out["b"] = format_ext(res.b)
    return (0 if rep.agree else 1), out


def cmd_chi_check(args):
    model = _model(args)
    phi = _formula(args)
    x = args.var or "x"
    z = args.param_var
    if z is None:
        rest = sorted(free_vars(phi) - {x})
        if len(rest) != 1:
            raise UsageError(f"phi needs exactly one parameter variable besides {x!r}; got {rest}")
        z = rest[0]
    chi = dichotomy.build_chi(phi, x, model=model)
    y = sorted(free_vars(chi) - {z})[0]
    n = args.window or 50
    grid = list(range(-n, n + 1))
    W = oracle.Window.discrete(max(4 * n, 200), args.margin if args.margin is not None else 60)
    lhs = oracle.brute_table(eliminate_quantifiers(chi, model), {y: grid, z: grid}, W)
    rhs = oracle.chi_truth(phi, x, z, grid, grid, W)
    bad = np.argwhere(lhs != rhs)
    cex = None
    if len(bad):
        i, j = bad[0]
        cex = {"b": grid[i], "c": grid[j], "chi": bool(lhs[i, j]), "interval": bool(rhs[i, j])}
    rep = oracle.Report(not len(bad), cex, {"pairs": int(lhs.size), "true_pairs": int(rhs.sum()),
                                            "mismatches": int(len(bad))}, window=W.to_dict())
    return (0 if rep.agree else 1), rep.to_dict()


def cmd_classify(args):
    f = _formula(args)
    res = dichotomy.classify(f, _var(args, f), _params(args), _model(args))
    return 0, res.to_dict()


def cmd_snf(args):
    if not args.matrix:
        raise UsageError("--matrix is required")
    M = _read_json(args.matrix)
    return 0, lattice.smith_normal_form(M).to_dict()


def cmd_quotient(args):
    if args.m is None:
        raise UsageError("--m is required")
    return 0, {"card": lattice.quotient_card(_group(args), args.m), "m": args.m}


def cmd_small_quotients(args):
    G = _group(args)
    table = lattice.has_small_quotients(G, args.up_to)
    ok = all(r["within_bound"] for r in table)
    return (0 if ok else 1), {"dim": G.dim, "table": table}


def cmd_rank(args):
    return 0, {"rank": lattice.rank(_group(args))}


def cmd_acl(args):
    G = _group(args)
    A = _read_json(args.subset) if args.subset else []
    discrete = args.discrete or _model(args).is_discrete and args.model_given
    return 0, lattice.acl_closure(G, A, discrete=discrete).to_json()


def cmd_oracle(args):
    f = _formula(args)
    res = oracle.brute_window(f, _window(args), args.var, _params(args))
    return 0, {"members": [str(g) for g in res.members()], "points": len(res.points),
               "window": _window(args).to_dict(), "note": oracle.WINDOW_NOTE}


def cmd_compare(args):
    f = _formula(args)
    x = _var(args, f)
    if args.set:
        D = DefSet.from_dict(_read_json(args.set))
    else:
        D = formula_to_defset(f, x, _params(args), _model(args))
    rep = oracle.compare_report(f, D, _window(args), x, _params(args))
    return (0 if rep.agree else 1), rep.to_dict()


COMMANDS = {
    "parse": cmd_parse,
    "qe": cmd_qe,
    "normalize": cmd_normalize,
    "member": cmd_member,
    "bool": cmd_bool,
    "affine": cmd_affine,
    "group-definable": cmd_group_definable,
    "extract-order": cmd_extract_order,
    "order-check": cmd_order_check,
    "chi-check": cmd_chi_check,
    "classify": cmd_classify,
    "snf": cmd_snf,
    "quotient": cmd_quotient,
    "small-quotients": cmd_small_quotients,
    "rank": cmd_rank,
    "acl": cmd_acl,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default=None, help="z, q or zp:<p> (default z)")
    common.add_argument("--formula")
    common.add_argument("--file", help="read the formula from a file")
    common.add_argument("--params", help="parameter bindings name=value,...")
    common.add_argument("--var", help="the distinguished free variable")
    common.add_argument("--window", type=int, help="window half-width")
    common.add_argument("--height", type=int, help="height bound of a dense window")
    common.add_argument("--margin", type=int, help="quantifier margin")
    common.add_argument("--json", action="store_true", help="print canonical JSON")
    common.add_argument("--set", help="a normal form as JSON (inline or path)")

    p = argparse.ArgumentParser(prog="oagdef", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "normalize":
            sp.add_argument("--pieces", help='raw pieces: ["g"] or ["lo", "hi", "g", m]')
        if name == "member":
            sp.add_argument("--at")
        if name == "bool":
            sp.add_argument("--op", required=True, choices=["union", "intersect", "difference", "xor", "complement"])
            sp.add_argument("--formula2")
            sp.add_argument("--set2")
        if name == "affine":
            sp.add_argument("--op", required=True, choices=["translate", "reflect", "divide", "scale"])
            sp.add_argument("--arg")
        if name == "order-check":
            sp.add_argument("--limit", type=int, default=400, help="interval points to pair up")
        if name == "chi-check":
            sp.add_argument("--param-var", help="the parameter variable z")
        if name == "snf":
            sp.add_argument("--matrix")
        if name in ("quotient", "small-quotients", "rank", "acl"):
            sp.add_argument("--gens", help="generators as JSON (inline or path)")
        if name == "quotient":
            sp.add_argument("--m", type=int)
        if name == "small-quotients":
            sp.add_argument("--up-to", type=int, default=10)
        if name == "acl":
            sp.add_argument("--subset", help="the finite set A as JSON")
            sp.add_argument("--discrete", action="store_true")
    return p


def _human(obj) -> str:
    if isinstance(obj, dict) and set(obj) >= {"modulus", "singletons", "components"}:
        return DefSet.from_dict(obj).describe()
    if isinstance(obj, dict) and "output" in obj:
        return obj["output"]
    if isinstance(obj, dict) and set(obj) == {"formula", "free", "quantifier_depth"}:
        return obj["formula"]
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)


def run_cli(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.model_given = args.model is not None
    args.model = args.model or "z"
    try:
        status, obj = COMMANDS[args.command](args)
    except (UsageError, FormulaSyntaxError, ModelError, ScopeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ZeroDivisionError, oracle.OracleBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out.write((dumps(obj) if args.json else _human(obj)) + "\n")
    return status


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
