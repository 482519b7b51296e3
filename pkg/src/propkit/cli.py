"""``prop-kit`` command-line frontend.

Every command prints ``#``-prefixed header lines echoing the effective
configuration (table and csv formats) or a ``config`` object (json), then
the result.  Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from importlib import resources
from typing import Callable

from . import finitep, goodbasis, niplab, padic, termlang
from .errors import ParseError, PropKitError, RepresentationError
from .uniform import UniformGroupModel, parse_group_spec

DEFAULTS = {"precision": 6, "p": 3, "budget": 4096, "seed": 0, "cap": 20}


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(self.prog, message)


# ------------------------------------------------------------ flag parsing


def _group(args) -> UniformGroupModel:
    if args.group is None:
        raise UsageError("--group", "this command needs --group kind:p:d")
    try:
        return parse_group_spec(args.group, args.precision)
    except (ValueError, PropKitError) as e:
        raise UsageError("--group", str(e)) from None


def _element(G: UniformGroupModel, text: str, flag: str):
    try:
        return G.parse_element(text)
    except (ValueError, RepresentationError) as e:
        raise UsageError(flag, str(e)) from None


def _elements(G, texts, flag):
    if not texts:
        raise UsageError(flag, "at least one element is required")
    out = []
    for t in texts:
        for piece in t.split(";"):
            if piece.strip():
                out.append(_element(G, piece, flag))
    return out


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(flag, f"expected comma-separated integers, got {text!r}") from None


def _finite(args) -> finitep.FiniteGroupTable:
    """The finite group named by --table, or G/P_{n+1} from --group and --n."""
    spec = args.table
    b = args.budget
    if spec is None:
        if args.n is None:
            raise UsageError("--table", "give --table SPEC or --group with --n")
        return finitep.build_quotient(_group(args), args.n, budget=b)
    kind, _, rest = spec.partition(":")
    parts = rest.split(":")
    try:
        if kind == "wreath":
            p, n = int(parts[0]), int(parts[1])
        elif kind == "g2":
            p, qs = int(parts[0]), _int_list(parts[1], "--table")
        elif kind == "cyclic":
            orders = _int_list(parts[0], "--table")
        else:
            raise UsageError("--table", f"unknown table kind {kind!r} (wreath:p:n, g2:p:q1,q2, cyclic:n1,n2)")
    except (IndexError, ValueError):
        raise UsageError("--table", f"bad table spec {spec!r}") from None
    if kind == "wreath":
        return finitep.build_wreath(p, n, budget=b)
    if kind == "g2":
        return finitep.build_metacyclic_G2(p, qs, len(qs), budget=b)
    return finitep.abelian_group(orders, budget=b)


def _scalar(text: str, p: int, N: int, flag: str) -> padic.PadicScalar:
    try:
        if ":" in text:
            a = padic.parse_scalar(text)
            if a.prime != p:
                raise ValueError(f"prime {a.prime} differs from {p}")
            return a
        return padic.PadicScalar.of(int(text), p, N)
    except ValueError as e:
        raise UsageError(flag, str(e)) from None


# ---------------------------------------------------------------- results


class Result:
    """A command result: a JSON-ready dict plus table and optional CSV renderings."""

    def __init__(self, data: dict, lines: list[str], rows: list[list] | None = None):
        self.data = data
        self.lines = lines
        self.rows = rows


def _scalar_json(a: padic.PadicScalar) -> dict:
    return {"prime": a.prime, "precision": a.precision, "residue": a.residue, "text": str(a)}


# ----------------------------------------------------------------- commands


def cmd_elt_mul(args):
    G = _group(args)
    xs = _elements(G, args.elt, "--elt")
    if len(xs) < 2:
        raise UsageError("--elt", "mul needs at least two elements")
    g = G.product(xs)
    coords = G.decode_ints(g)
    return Result({"element": G.format_element(g), "coordinates": list(coords)},
                  [G.format_element(g)], [[*coords]])


def cmd_elt_pow(args):
    G = _group(args)
    (g,) = _elements(G, args.elt, "--elt")[:1]
    if args.exp is None:
        raise UsageError("--exp", "pow needs --exp")
    lam = _scalar(args.exp, G.p, G.precision, "--exp")
    h = G.power(g, lam)
    coords = G.decode_ints(h)
    return Result({"element": G.format_element(h), "coordinates": list(coords), "exponent": str(lam)},
                  [G.format_element(h)], [[*coords]])


def cmd_elt_omega(args):
    G = _group(args)
    (g,) = _elements(G, args.elt, "--elt")[:1]
    w = G.omega(g)
    return Result({"omega": str(w), "exact": w.exact, "value": w.value}, [str(w)], [[str(w)]])


def cmd_elt_coords(args):
    G = _group(args)
    (g,) = _elements(G, args.elt, "--elt")[:1]
    lam = G.decode(g)
    return Result({"coordinates": [x.residue for x in lam], "scalars": [str(x) for x in lam],
                   "element": G.format_element(g) if G.is_matrix else G.format_coordinates(lam)},
                  [G.format_coordinates(lam)], [[x.residue for x in lam]])


def cmd_term_eval(args):
    if args.expr is None:
        raise UsageError("--expr", "term eval needs --expr")
    try:
        node = termlang.parse(args.expr)
    except ParseError as e:
        raise UsageError("--expr", str(e)) from None
    binds = {}
    for b in args.bind or []:
        name, eq, value = b.partition("=")
        if not eq:
            raise UsageError("--bind", f"expected name=value, got {b!r}")
        binds[name.strip()] = _scalar(value.strip(), args.p, args.precision, "--bind")
    env = termlang.Environment(args.p, args.precision, binds)
    out = termlang.evaluate(node, env)
    if isinstance(out, bool):
        text = "true" if out else "false"
        return Result({"kind": "formula", "value": out, "text": text, "canonical": termlang.to_text(node)},
                      [text], [[text]])
    return Result({"kind": "term", "value": _scalar_json(out), "canonical": termlang.to_text(node)},
                  [str(out)], [[out.prime, out.precision, out.residue]])


def _handle_json(h: goodbasis.OpenSubgroupHandle) -> dict:
    return {"levels": list(h.levels), "coordinates": [list(c) for c in h.coordinates],
            "index": goodbasis.index(h), "text": h.to_text()}


def _basis(args):
    G = _group(args)
    return G, goodbasis.good_basis_from_generators(G, _elements(G, args.gens, "--gens"))


def cmd_sub_basis(args):
    G, h = _basis(args)
    rep = goodbasis.is_good_basis(G, h.elements, samples=args.samples, seed=args.seed)
    data = _handle_json(h) | {"good_basis": rep.ok}
    lines = [f"levels: {' '.join(map(str, h.levels))}", f"basis: {h.to_text()}",
             f"index: {goodbasis.index(h)}", f"verified: {str(rep.ok).lower()}"]
    return Result(data, lines, [[n, G.format_coordinates(c)] for n, c in h.key])


def cmd_sub_member(args):
    G, h = _basis(args)
    (g,) = _elements(G, args.elt, "--elt")[:1]
    m = goodbasis.contains(h, g)
    return Result({"member": m, "subgroup": h.to_text()}, [str(m).lower()], [[str(m).lower()]])


def cmd_sub_index(args):
    G, h = _basis(args)
    i = goodbasis.index(h)
    return Result({"index": i, "levels": list(h.levels)}, [str(i)], [[i]])


def _k(args) -> int:
    if args.max_index_exp is None:
        raise UsageError("--max-index-exp", "this command needs --max-index-exp")
    if args.max_index_exp < 0:
        raise UsageError("--max-index-exp", "must be nonnegative")
    return args.max_index_exp


def cmd_sub_enumerate(args):
    G = _group(args)
    hs = goodbasis.enumerate_open_subgroups(G, _k(args), method=args.method, budget=args.budget)
    items = [_handle_json(h) for h in hs]
    return Result({"count": len(hs), "subgroups": items},
                  [f"{it['index']} {it['text']}" for it in items],
                  [[it["index"], it["text"]] for it in items])


def cmd_sub_count(args):
    G = _group(args)
    counts = goodbasis.subgroup_counts(G, _k(args), method=args.method, budget=args.budget)
    rows = [[j, a] for j, a in counts.items()]
    return Result({"counts": [{"k": j, "a": a} for j, a in rows]}, [f"{j},{a}" for j, a in rows], rows)


def cmd_quotient_build(args):
    F = _finite(args)
    data = {"name": F.name, "order": F.order, "provenance": F.provenance, "abelian": F.is_abelian(),
            "exponent": F.exponent()}
    lines = [f"{k}: {str(v).lower() if isinstance(v, bool) else v}" for k, v in data.items()]
    return Result(data, lines, F.multiplication_table(args.budget))


def _prime_of(F, args) -> int:
    if F.prime is None:
        raise finitep.NotAPGroup(f"{F.name} is not a p-group")
    return F.prime


def cmd_quotient_series(args):
    F = _finite(args)
    chain = finitep.lower_p_series(F, _prime_of(F, args))
    orders = [H.order for H in chain]
    return Result({"name": F.name, "orders": orders}, [" ".join(map(str, orders))],
                  [[i + 1, o] for i, o in enumerate(orders)])


def cmd_quotient_frattini(args):
    F = _finite(args)
    Phi = finitep.frattini(F, args.budget)
    d = finitep.min_generators(F, args.budget)
    data = {"name": F.name, "order": Phi.order, "elements": Phi.labels(), "d": d}
    return Result(data, [f"order: {Phi.order}", f"d: {d}", "elements: " + " ".join(Phi.labels())],
                  [[x] for x in Phi.labels()])


def cmd_quotient_rank(args):
    F = _finite(args)
    d, r = finitep.min_generators(F, args.budget), finitep.rank_of(F, args.budget)
    return Result({"name": F.name, "d": d, "rank": r}, [f"d: {d}", f"rank: {r}"], [[d, r]])


def cmd_build_wreath(args):
    if args.n is None:
        raise UsageError("--n", "build wreath needs --n")
    args.table = f"wreath:{args.p}:{args.n}"
    return cmd_quotient_build(args)


def cmd_build_g2(args):
    if args.q is None:
        raise UsageError("--q", "build g2 needs --q q1,q2,...")
    qs = _int_list(args.q, "--q")
    F = finitep.build_metacyclic_G2(args.p, qs, len(qs), budget=args.budget)
    data = {"name": F.name, "order": F.order, "provenance": F.provenance, "abelian": F.is_abelian(),
            "exponent": F.exponent(), "action_units": F.action_units}
    lines = [f"{k}: {str(v).lower() if isinstance(v, bool) else v}" for k, v in data.items()]
    return Result(data, lines, F.multiplication_table(args.budget))


def _family(args, F):
    if args.family == "wreath-base":
        return niplab.coset_family(F, "wreath-base")
    if args.max_index is None:
        raise UsageError("--max-index", "family 'index' needs --max-index")
    return niplab.coset_family(F, "index", args.max_index)


def _shatter(fn: Callable):
    def run(args):
        F = _finite(args)
        fam = _family(args, F)
        rep = fn(fam, args.cap)
        data = rep.to_json() | {"group": F.name, "family": fam.descriptor, "sets": len(fam)}
        lines = [f"dimension: {rep.dimension}", f"capped: {str(rep.capped).lower()}",
                 "witness: " + " ".join(rep.witness_labels)]
        return Result(data, lines, [[F.name, fam.descriptor, args.n if args.n is not None else "", rep.dimension]])
    return run


def cmd_lab_tp2(args):
    F = _finite(args)
    arr = niplab.tp2_array(F, args.rows, args.cols)
    data = arr.to_json()
    lines = [f"rows inconsistent: {str(arr.rows_inconsistent).lower()}",
             f"paths consistent: {str(arr.paths_consistent).lower()}"]
    lines += [f"path {' '.join(map(str, p['path']))}: {p['witness']}" for p in arr.paths]
    return Result(data, lines, [[" ".join(map(str, p["path"])), p["witness"], str(p["consistent"]).lower()]
                                for p in arr.paths])


def cmd_lab_bswidth(args):
    F = _finite(args)
    fam = _family(args, F)
    subs = list(dict.fromkeys(fam.subgroups))
    w = niplab.baldwin_saxl_width(subs)
    return Result({"group": F.name, "family": fam.descriptor, "subgroups": len(subs), "width": w},
                  [str(w)], [[F.name, fam.descriptor, len(subs), w]])


COMMANDS = {
    ("elt", "mul"): cmd_elt_mul,
    ("elt", "pow"): cmd_elt_pow,
    ("elt", "omega"): cmd_elt_omega,
    ("elt", "coords"): cmd_elt_coords,
    ("term", "eval"): cmd_term_eval,
    ("sub", "basis"): cmd_sub_basis,
    ("sub", "member"): cmd_sub_member,
    ("sub", "index"): cmd_sub_index,
    ("sub", "enumerate"): cmd_sub_enumerate,
    ("sub", "count"): cmd_sub_count,
    ("quotient", "build"): cmd_quotient_build,
    ("quotient", "series"): cmd_quotient_series,
    ("quotient", "frattini"): cmd_quotient_frattini,
    ("quotient", "rank"): cmd_quotient_rank,
    ("build", "wreath"): cmd_build_wreath,
    ("build", "g2"): cmd_build_g2,
    ("lab", "indep"): _shatter(niplab.independence_dimension),
    ("lab", "vc"): _shatter(niplab.vc_dimension),
    ("lab", "tp2"): cmd_lab_tp2,
    ("lab", "bswidth"): cmd_lab_bswidth,
}

# commands whose natural output is a list of rows
CSV_DEFAULT = {("sub", "count")}


def load_schema(area: str, command: str) -> dict:
    """The JSON schema shipped for ``prop-kit AREA COMMAND --format json``."""
    return json.loads((resources.files("propkit") / "schemas" / f"{area}_{command}.json").read_text())


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", help="uniform group spec kind:p:d, kind in abelian, gl, sl2")
    common.add_argument("--precision", type=_positive, default=DEFAULTS["precision"])
    common.add_argument("--p", type=_positive, default=DEFAULTS["p"], help="prime for term and build commands")
    common.add_argument("--format", choices=["table", "json", "csv"], default=None)
    common.add_argument("--budget", type=_positive, default=DEFAULTS["budget"])
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    common.add_argument("--cap", type=int, default=DEFAULTS["cap"])
    common.add_argument("--samples", type=int, default=goodbasis.DEFAULT_SAMPLES)
    common.add_argument("--elt", action="append", help="element: x(l1,...,ld), matrix rows, or integer (gl:p:1)")
    common.add_argument("--exp", help="exponent: integer or p^N:r")
    common.add_argument("--gens", action="append", help="generators, repeated or ';'-separated")
    common.add_argument("--expr", help="term or formula in s-expression syntax")
    common.add_argument("--bind", action="append", help="variable binding name=value")
    common.add_argument("--max-index-exp", type=int)
    common.add_argument("--method", choices=["quotient", "canonical"], default="quotient")
    common.add_argument("--n", type=int, help="quotient level (G/P_{n+1}) or wreath exponent")
    common.add_argument("--table", help="finite group: wreath:p:n, g2:p:q1,q2,..., cyclic:n1,n2,...")
    common.add_argument("--q", help="primes for build g2")
    common.add_argument("--family", choices=["index", "wreath-base"], default="index")
    common.add_argument("--max-index", type=int)
    common.add_argument("--rows", type=int, default=1)
    common.add_argument("--cols", type=int, default=1)

    parser = _Parser(prog="prop-kit", description="Uniform pro-p groups at finite precision.")
    top = parser.add_subparsers(dest="area", required=True, parser_class=_Parser)
    areas: dict[str, argparse._SubParsersAction] = {}
    for area, cmd in COMMANDS:
        if area not in areas:
            areas[area] = top.add_parser(area).add_subparsers(dest="command", required=True, parser_class=_Parser)
        areas[area].add_parser(cmd, parents=[common])
    return parser


def _header(args, fmt: str) -> dict:
    cfg = {"command": f"{args.area} {args.command}", "format": fmt}
    for key in ("group", "precision", "p", "budget", "seed", "cap"):
        cfg[key] = getattr(args, key)
    return cfg


def render(args, result: Result, fmt: str) -> str:
    cfg = _header(args, fmt)
    if fmt == "json":
        return json.dumps({"config": cfg, "result": result.data}, sort_keys=True, indent=2) + "\n"
    head = "".join(f"# {k}={v}\n" for k, v in cfg.items())
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for r in result.rows or []:
            w.writerow(r)
        return head + buf.getvalue()
    return head + "".join(line + "\n" for line in result.lines)


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        fmt = args.format or ("csv" if (args.area, args.command) in CSV_DEFAULT else "table")
        if args.cap < 0 or args.cap > niplab.MAX_CAP:
            raise UsageError("--cap", f"must lie in 0..{niplab.MAX_CAP}")
        random.seed(args.seed)
        result = COMMANDS[(args.area, args.command)](args)
    except UsageError as e:
        print(f"prop-kit: usage error: {e}", file=err)
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (PropKitError, ValueError, NameError) as e:
        print(f"prop-kit: error: {type(e).__name__}: {e}", file=err)
        return 1
    out.write(render(args, result, fmt))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
