"""Command-line interface.

Exit codes: 0 every check passed, 1 the input failed validation (schema or
math), 2 a checked property was violated, 3 an I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import serialize
from .bundle import Bundle, constant_bundle, total_sheaf, validate_bundle
from .decomp import DecompositionError, verify_main_theorem
from .fixtures import GenerationError, cube_bundle, i1_bundle, random_admissible_base, random_bundle
from .linalg import INTEGER, RATIONAL
from .poset import (
    Poset,
    antichain,
    boolean_lattice,
    chain_poset,
    find_admissible_witness,
    is_recursively_admissible,
)
from .sheaf import Sheaf, cohomology, constant_sheaf, validate_sheaf
from .spectral import build_bicomplex, convergence_check, e2_check, spectral_pages
from .traversal import phi_chain_map_check

EXIT_OK, EXIT_INVALID, EXIT_VIOLATED, EXIT_IO = 0, 1, 2, 3


class Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# input / output helpers


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise Failure(EXIT_IO, f"cannot read {path}: {exc.strerror}") from exc


def _load(args, kinds: tuple) -> tuple[object, str]:
    text = _read(args.input)
    try:
        obj = serialize.loads(text, strict=args.strict)
    except serialize.DocumentError as exc:
        raise Failure(EXIT_INVALID, str(exc)) from exc
    kind = {Poset: "poset", Sheaf: "sheaf", Bundle: "bundle"}[type(obj)]
    if kind not in kinds:
        raise Failure(EXIT_INVALID, f"expected a {' or '.join(kinds)} document, got {kind}")
    if kind == "sheaf":
        bad = validate_sheaf(obj)
        if bad is not None:
            raise Failure(EXIT_INVALID, f"sheaf is not functorial: {bad}")
    elif kind == "bundle":
        bad = validate_bundle(obj)
        if bad is not None:
            raise Failure(EXIT_INVALID, f"bundle is not valid: {bad}")
    return obj, serialize.digest(text)


def _emit(args, text: str):
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise Failure(EXIT_IO, f"cannot write {args.out}: {exc.strerror}") from exc
    else:
        sys.stdout.write(text)


def _render_text(rep: dict, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for k, v in rep.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.extend(_render_text(v, indent + 1))
        elif isinstance(v, list) and v and all(isinstance(e, dict) for e in v):
            lines.append(f"{pad}{k}:")
            for e in v:
                lines.append(f"{pad}  - " + ", ".join(f"{a}={_flat(b)}" for a, b in e.items()))
        else:
            lines.append(f"{pad}{k}: {_flat(v)}")
    return lines


def _flat(v) -> str:
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def _report(args, command: str, digest: str | None, body: dict, passed: bool, started: float) -> int:
    code = EXIT_OK if passed else EXIT_VIOLATED
    rep = {"command": command}
    if digest is not None:
        rep["inputs_sha256"] = digest
    rep["verdict"] = "pass" if passed else "fail"
    rep.update(body)
    if getattr(args, "timings", False):
        rep["seconds"] = round(time.perf_counter() - started, 6)
    rep["exit_code"] = code
    if args.format == "json":
        _emit(args, serialize.dumps(rep))
    else:
        _emit(args, "\n".join(_render_text(rep)) + "\n")
    return code


def _rational_only(args):
    if args.ring != RATIONAL:
        raise Failure(EXIT_INVALID, f"{args.command} supports only the rational ring")


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args, t0) -> int:
    text = _read(args.input)
    try:
        obj = serialize.loads(text, strict=args.strict)
    except serialize.DocumentError as exc:
        rep = {"kind": None, "violation": str(exc)}
        _report(args, "validate", serialize.digest(text), rep, False, t0)
        return EXIT_INVALID
    if isinstance(obj, Poset):
        kind, bad = "poset", None
    elif isinstance(obj, Sheaf):
        kind, bad = "sheaf", validate_sheaf(obj)
    else:
        kind, bad = "bundle", validate_bundle(obj)
    body = {"kind": kind}
    if bad is not None:
        body["violation"] = str(bad)
        _report(args, "validate", serialize.digest(text), body, False, t0)
        return EXIT_INVALID
    return _report(args, "validate", serialize.digest(text), body, True, t0)


def cmd_cohomology(args, t0) -> int:
    obj, dg = _load(args, ("sheaf", "bundle", "poset"))
    if isinstance(obj, Bundle):
        F = total_sheaf(obj).sheaf
    elif isinstance(obj, Poset):
        F = constant_sheaf(obj, 1)
    else:
        F = obj
    ring = INTEGER if args.ring == INTEGER else RATIONAL
    rows = cohomology(F, ring)
    if args.max_degree is not None:
        rows = [r for r in rows if r.degree <= args.max_degree]
    body = {"ring": ring, "cohomology": [r.to_dict() for r in rows]}
    return _report(args, "cohomology", dg, body, True, t0)


def cmd_total_sheaf(args, t0) -> int:
    obj, _ = _load(args, ("bundle",))
    _emit(args, serialize.dumps(serialize.total_sheaf_document(total_sheaf(obj))))
    return EXIT_OK


def cmd_pages(args, t0) -> int:
    _rational_only(args)
    xi, dg = _load(args, ("bundle",))
    K = build_bicomplex(xi)
    pages = spectral_pages(K)
    e2 = e2_check(xi, pages)
    conv = convergence_check(xi, pages)
    table = [{"r": r, "p": p, "q": q, "dim": d} for r, p, q, d in pages.table()
             if args.max_degree is None or p + q <= args.max_degree]
    body = {"columns": K.p_max + 1, "rows": K.q_max + 1, "stable_from": pages.r_stab,
            "pages": table, "e2_check": e2.to_dict(), "convergence_check": conv.to_dict()}
    return _report(args, "pages", dg, body, e2.passed and conv.passed, t0)


def cmd_phi_check(args, t0) -> int:
    _rational_only(args)
    xi, dg = _load(args, ("bundle",))
    rep = phi_chain_map_check(xi, args.trials, args.seed)
    return _report(args, "phi-check", dg, {"phi": rep.to_dict()}, rep.passed, t0)


def cmd_admissible(args, t0) -> int:
    obj, dg = _load(args, ("poset", "bundle"))
    P = obj.base if isinstance(obj, Bundle) else obj
    body = {}
    if P.bottom() is None:
        body.update({"has_minimum": False, "witness": None, "recursively_admissible": False, "tree": None})
        return _report(args, "admissible", dg, body, False, t0)
    w = find_admissible_witness(P)
    ok, tree = is_recursively_admissible(P)
    body.update({"has_minimum": True, "witness": None if w is None else P.names[w],
                 "recursively_admissible": ok, "tree": tree.to_dict(P) if tree else None})
    return _report(args, "admissible", dg, body, ok, t0)


def cmd_verify_main(args, t0) -> int:
    _rational_only(args)
    xi, dg = _load(args, ("bundle",))
    try:
        tree = verify_main_theorem(xi, jobs=args.jobs, timings=args.timings)
    except DecompositionError as exc:
        raise Failure(EXIT_INVALID, str(exc)) from exc
    return _report(args, "verify-main", dg, {"certificate": tree}, tree["verdict"] == "pass", t0)


def _poset_spec(spec: str) -> Poset:
    kind, _, arg = spec.partition(":")
    try:
        n = int(arg)
    except ValueError:
        raise Failure(EXIT_INVALID, f"bad poset spec {spec!r} (use boolean:N, chain:N or antichain:N)") from None
    makers = {"boolean": boolean_lattice, "chain": chain_poset, "antichain": antichain}
    if kind not in makers or n < 0:
        raise Failure(EXIT_INVALID, f"bad poset spec {spec!r} (use boolean:N, chain:N or antichain:N)")
    return makers[kind](n)


def cmd_gen(args, t0) -> int:
    what = args.what
    try:
        if what == "boolean":
            obj = boolean_lattice(args.n)
        elif what == "chain":
            obj = chain_poset(args.n)
        elif what == "antichain":
            obj = antichain(args.n)
        elif what == "constant-bundle":
            obj = constant_bundle(_poset_spec(args.base), constant_sheaf(_poset_spec(args.fiber), args.dim))
        elif what == "random":
            base = random_admissible_base(args.base_size, args.seed) if args.base_size else None
            obj = random_bundle(args.seed, base=base)
        elif what == "random-sheaf":
            from .fixtures import random_sheaf
            from .poset import random_poset
            obj = random_sheaf(random_poset(args.n or 4, 0.5, args.seed), args.seed)
        elif what == "i1":
            obj = i1_bundle(args.length, args.dim, args.scale)
        elif what == "cube":
            obj = cube_bundle()
        else:  # argparse restricts choices
            raise Failure(EXIT_INVALID, f"unknown generator {what!r}")
    except GenerationError as exc:
        raise Failure(EXIT_VIOLATED, str(exc)) from exc
    _emit(args, serialize.dumps(serialize.to_document(obj)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ring", choices=(RATIONAL, INTEGER), default=RATIONAL)
    common.add_argument("--max-degree", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--strict", action="store_true", help="reject non-canonical scalars such as 2/4")
    common.add_argument("--timings", action="store_true", help="include wall-clock seconds in reports")

    parser = argparse.ArgumentParser(prog="bundlecoh", description="Sheaf cohomology of bundles over finite posets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("input", nargs="?", default="-", help="document path, '-' for stdin")
        return p

    with_input("validate", "check a poset, sheaf or bundle document")
    with_input("cohomology", "cohomology of a sheaf (or of a bundle's total sheaf)")
    with_input("total-sheaf", "emit the glued total sheaf of a bundle")
    with_input("pages", "spectral sequence pages with E2 and convergence checks")
    p = with_input("phi-check", "check that the traversal map is a chain map")
    p.add_argument("--trials", type=int, default=3, help="extra random-cochain spot checks")
    with_input("admissible", "admissible witness and decomposition tree of a poset")
    p = with_input("verify-main", "certificate tree for a bundle over a recursively admissible base")
    p.add_argument("--jobs", type=int, default=1)

    g = sub.add_parser("gen", parents=[common], help="generate fixture documents")
    g.add_argument("what", choices=("boolean", "chain", "antichain", "constant-bundle", "random",
                                    "random-sheaf", "i1", "cube"))
    g.add_argument("n", nargs="?", type=int, default=None, help="size for boolean/chain/antichain")
    g.add_argument("--base", default="boolean:2", help="constant-bundle base, e.g. boolean:2 or chain:3")
    g.add_argument("--fiber", default="chain:2", help="constant-bundle fiber, e.g. chain:2")
    g.add_argument("--dim", type=int, default=1)
    g.add_argument("--length", type=int, default=2)
    g.add_argument("--scale", type=int, default=1)
    g.add_argument("--base-size", type=int, default=None, help="random: size of the random base")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "cohomology": cmd_cohomology,
    "total-sheaf": cmd_total_sheaf,
    "pages": cmd_pages,
    "phi-check": cmd_phi_check,
    "admissible": cmd_admissible,
    "verify-main": cmd_verify_main,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and args.what in ("boolean", "chain", "antichain") and args.n is None:
        parser.error(f"gen {args.what} needs a size")
    t0 = time.perf_counter()
    try:
        return COMMANDS[args.command](args, t0)
    except Failure as exc:
        print(f"bundlecoh: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
