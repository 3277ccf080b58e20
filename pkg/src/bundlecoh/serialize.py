"""JSON documents for posets, sheaves and bundles.

Documents are canonical: fixed key order, two-space indentation, a trailing
newline and scalars written as reduced fraction strings ("3", "-1/2").  A
canonical document therefore survives load/dump byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .bundle import Bundle, BundleError, TotalSheaf
from .linalg import RATIONAL, RINGS, LinalgError, Matrix, format_scalar, parse_scalar
from .poset import Poset, PosetError, validate_poset
from .sheaf import Sheaf, SheafError, SheafMorphism

FORMAT = "bundlecoh/1"
KINDS = ("poset", "sheaf", "bundle")


class DocumentError(ValueError):
    """Schema violation, with a JSON path like ``$.fibers[1].dims``."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def digest(text: str | bytes) -> str:
    data = text.encode() if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------------------
# encoding


def _name(x) -> str:
    if isinstance(x, tuple):
        return ":".join(_name(p) for p in x)
    return str(x)


def _matrix_out(m: Matrix) -> list:
    return [[format_scalar(v) for v in row] for row in m.to_rows()]


def poset_block(P: Poset) -> dict:
    return {"elements": [_name(x) for x in P.names],
            "covers": [[_name(P.names[u]), _name(P.names[v])] for u, v in P.sorted_covers]}


def _sheaf_body(F: Sheaf) -> dict:
    P = F.poset
    return {"poset": poset_block(F.poset),
            "dims": list(F.dims),
            "restrictions": [{"cover": [_name(P.names[u]), _name(P.names[v])],
                              "matrix": _matrix_out(F.restrictions[(u, v)])} for u, v in P.sorted_covers]}


def poset_document(P: Poset, metadata: dict | None = None) -> dict:
    doc = {"format": FORMAT, "kind": "poset", **poset_block(P)}
    if metadata:
        doc["metadata"] = metadata
    return doc


def sheaf_document(F: Sheaf, metadata: dict | None = None) -> dict:
    doc = {"format": FORMAT, "kind": "sheaf", "ring": F.ring, **_sheaf_body(F)}
    if metadata:
        doc["metadata"] = metadata
    return doc


def total_sheaf_document(tot: TotalSheaf) -> dict:
    """Glued sheaf; element names are ``base:fiber``."""
    return sheaf_document(tot.sheaf, {"element_names": "base:fiber"})


def bundle_document(xi: Bundle, metadata: dict | None = None) -> dict:
    B = xi.base
    fibers = []
    for x in B.elements:
        fibers.append({"over": _name(B.names[x]), **_sheaf_body(xi.fibers[x])})
    arrows = []
    for x, y in B.sorted_covers:
        a = xi.arrows[(x, y)]
        Ex, Ey = xi.fiber_poset(x), xi.fiber_poset(y)
        arrows.append({
            "cover": [_name(B.names[x]), _name(B.names[y])],
            "vertex_map": [[_name(Ex.names[u]), _name(Ey.names[a.vertex_map[u]])] for u in Ex.elements],
            "matrices": [{"element": _name(Ex.names[u]), "matrix": _matrix_out(a.components[u])}
                         for u in Ex.elements],
        })
    doc = {"format": FORMAT, "kind": "bundle", "ring": xi.ring, "base": poset_block(B),
           "fibers": fibers, "arrows": arrows}
    if metadata:
        doc["metadata"] = metadata
    return doc


def to_document(obj, metadata: dict | None = None) -> dict:
    if isinstance(obj, Bundle):
        return bundle_document(obj, metadata)
    if isinstance(obj, TotalSheaf):
        return total_sheaf_document(obj)
    if isinstance(obj, Sheaf):
        return sheaf_document(obj, metadata)
    if isinstance(obj, Poset):
        return poset_document(obj, metadata)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# decoding


def _expect(cond: bool, path: str, msg: str):
    if not cond:
        raise DocumentError(path, msg)


def _keys(obj, path: str, required: tuple, optional: tuple = ()):
    _expect(isinstance(obj, dict), path, "expected an object")
    missing = [k for k in required if k not in obj]
    _expect(not missing, path, f"missing field {missing[0]!r}" if missing else "")
    extra = sorted(set(obj) - set(required) - set(optional))
    _expect(not extra, path, f"unknown field {extra[0]!r}" if extra else "")


def _str_list(obj, path: str) -> list:
    _expect(isinstance(obj, list), path, "expected a list")
    for i, v in enumerate(obj):
        _expect(isinstance(v, str), f"{path}[{i}]", "expected a string")
    return obj


def _load_poset(obj, path: str) -> Poset:
    _keys(obj, path, ("elements", "covers"), ("format", "kind", "metadata"))
    names = _str_list(obj["elements"], f"{path}.elements")
    covers = obj["covers"]
    _expect(isinstance(covers, list), f"{path}.covers", "expected a list")
    pairs = []
    for i, c in enumerate(covers):
        p = f"{path}.covers[{i}]"
        _expect(isinstance(c, list) and len(c) == 2 and all(isinstance(v, str) for v in c), p,
                "expected a pair of element names")
        pairs.append(tuple(c))
    try:
        return validate_poset(tuple(names), pairs)
    except PosetError as exc:
        raise DocumentError(path, str(exc)) from exc


def _load_matrix(obj, rows: int, cols: int, path: str, strict: bool, ring: str) -> Matrix:
    _expect(isinstance(obj, list) and len(obj) == rows, path, f"expected {rows} rows")
    data = []
    for i, row in enumerate(obj):
        _expect(isinstance(row, list) and len(row) == cols, f"{path}[{i}]", f"expected {cols} entries")
        vals = []
        for j, v in enumerate(row):
            _expect(isinstance(v, str), f"{path}[{i}][{j}]", "scalars are written as strings")
            try:
                x = parse_scalar(v, strict=strict)
            except (ValueError, ZeroDivisionError, LinalgError) as exc:
                raise DocumentError(f"{path}[{i}][{j}]", str(exc)) from exc
            if ring != RATIONAL and isinstance(x, Fraction) and x.denominator != 1:
                raise DocumentError(f"{path}[{i}][{j}]", "non-integer scalar in an integer document")
            vals.append(x)
        data.append(vals)
    return Matrix.from_rows(data, cols=cols, ring=ring)


def _load_sheaf_body(obj, path: str, strict: bool, ring: str, extra_fields=()) -> Sheaf:
    _keys(obj, path, ("poset", "dims", "restrictions"), ("format", "kind", "ring", "metadata") + tuple(extra_fields))
    P = _load_poset(obj["poset"], f"{path}.poset")
    dims = obj["dims"]
    _expect(isinstance(dims, list) and len(dims) == len(P), f"{path}.dims", f"expected {len(P)} dimensions")
    for i, d in enumerate(dims):
        _expect(isinstance(d, int) and not isinstance(d, bool) and d >= 0, f"{path}.dims[{i}]",
                "expected a nonnegative integer")
    res_list = obj["restrictions"]
    _expect(isinstance(res_list, list), f"{path}.restrictions", "expected a list")
    res = {}
    for i, r in enumerate(res_list):
        p = f"{path}.restrictions[{i}]"
        _keys(r, p, ("cover", "matrix"))
        c = r["cover"]
        _expect(isinstance(c, list) and len(c) == 2 and all(isinstance(v, str) for v in c), f"{p}.cover",
                "expected a pair of element names")
        try:
            u, v = P.index(c[0]), P.index(c[1])
        except (KeyError, PosetError) as exc:
            raise DocumentError(f"{p}.cover", f"unknown element in {c!r}") from exc
        _expect((u, v) in P.covers, f"{p}.cover", f"{c!r} is not a cover")
        _expect((u, v) not in res, f"{p}.cover", f"duplicate restriction for {c!r}")
        res[(u, v)] = _load_matrix(r["matrix"], dims[u], dims[v], f"{p}.matrix", strict, ring)
    for u, v in P.sorted_covers:
        _expect((u, v) in res, f"{path}.restrictions",
                f"missing matrix for cover [{P.names[u]!r}, {P.names[v]!r}]")
    try:
        return Sheaf(P, tuple(dims), res, ring)
    except SheafError as exc:
        raise DocumentError(path, str(exc)) from exc


def _ring(obj, path: str) -> str:
    ring = obj.get("ring", RATIONAL)
    _expect(ring in RINGS, f"{path}.ring", f"unknown ring {ring!r}")
    return ring


def _load_bundle(obj, strict: bool) -> Bundle:
    _keys(obj, "$", ("format", "kind", "base", "fibers", "arrows"), ("ring", "metadata"))
    ring = _ring(obj, "$")
    B = _load_poset(obj["base"], "$.base")
    fl = obj["fibers"]
    _expect(isinstance(fl, list) and len(fl) == len(B), "$.fibers", f"expected {len(B)} fibers")
    fibers = [None] * len(B)
    for i, f in enumerate(fl):
        p = f"$.fibers[{i}]"
        _expect(isinstance(f, dict) and isinstance(f.get("over"), str), f"{p}.over", "expected a base element name")
        try:
            x = B.index(f["over"])
        except (KeyError, PosetError) as exc:
            raise DocumentError(f"{p}.over", f"unknown base element {f['over']!r}") from exc
        _expect(fibers[x] is None, f"{p}.over", f"second fiber over {f['over']!r}")
        fibers[x] = _load_sheaf_body(f, p, strict, ring, ("over",))
    al = obj["arrows"]
    _expect(isinstance(al, list), "$.arrows", "expected a list")
    arrows = {}
    for i, a in enumerate(al):
        p = f"$.arrows[{i}]"
        _keys(a, p, ("cover", "vertex_map", "matrices"))
        c = a["cover"]
        _expect(isinstance(c, list) and len(c) == 2 and all(isinstance(v, str) for v in c), f"{p}.cover",
                "expected a pair of base element names")
        try:
            x, y = B.index(c[0]), B.index(c[1])
        except (KeyError, PosetError) as exc:
            raise DocumentError(f"{p}.cover", f"unknown base element in {c!r}") from exc
        _expect((x, y) in B.covers, f"{p}.cover", f"{c!r} is not a base cover")
        _expect((x, y) not in arrows, f"{p}.cover", f"duplicate arrow for {c!r}")
        Fx, Fy = fibers[x], fibers[y]
        Ex, Ey = Fx.poset, Fy.poset
        vm = a["vertex_map"]
        _expect(isinstance(vm, list), f"{p}.vertex_map", "expected a list of pairs")
        vmap = {}
        for k, pair in enumerate(vm):
            q = f"{p}.vertex_map[{k}]"
            _expect(isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, str) for v in pair), q,
                    "expected a pair of fiber element names")
            try:
                u, w = Ex.index(pair[0]), Ey.index(pair[1])
            except (KeyError, PosetError) as exc:
                raise DocumentError(q, f"unknown fiber element in {pair!r}") from exc
            _expect(u not in vmap, q, f"{pair[0]!r} mapped twice")
            vmap[u] = w
        for u in Ex.elements:
            _expect(u in vmap, f"{p}.vertex_map", f"no image for {Ex.names[u]!r}")
        ml = a["matrices"]
        _expect(isinstance(ml, list), f"{p}.matrices", "expected a list")
        comps = {}
        for k, m in enumerate(ml):
            q = f"{p}.matrices[{k}]"
            _keys(m, q, ("element", "matrix"))
            try:
                u = Ex.index(m["element"])
            except (KeyError, PosetError) as exc:
                raise DocumentError(f"{q}.element", f"unknown fiber element {m['element']!r}") from exc
            _expect(u not in comps, f"{q}.element", "duplicate matrix")
            comps[u] = _load_matrix(m["matrix"], Fx.dims[u], Fy.dims[vmap[u]], f"{q}.matrix", strict, ring)
        for u in Ex.elements:
            _expect(u in comps, f"{p}.matrices", f"missing matrix for element {Ex.names[u]!r}")
        try:
            arrows[(x, y)] = SheafMorphism(Fy, Fx, tuple(vmap[u] for u in Ex.elements),
                                           tuple(comps[u] for u in Ex.elements))
        except SheafError as exc:
            raise DocumentError(p, str(exc)) from exc
    for x, y in B.sorted_covers:
        _expect((x, y) in arrows, "$.arrows", f"missing arrow for base cover [{B.names[x]!r}, {B.names[y]!r}]")
    try:
        return Bundle(B, tuple(fibers), arrows, ring)
    except BundleError as exc:
        raise DocumentError("$", str(exc)) from exc


def from_document(obj, strict: bool = False):
    """Decode a parsed document into a Poset, Sheaf or Bundle (schema checks only)."""
    _expect(isinstance(obj, dict), "$", "expected an object")
    _expect(obj.get("format") == FORMAT, "$.format", f"expected {FORMAT!r}")
    kind = obj.get("kind")
    _expect(kind in KINDS, "$.kind", f"expected one of {', '.join(KINDS)}")
    if kind == "poset":
        return _load_poset(obj, "$")
    if kind == "sheaf":
        return _load_sheaf_body(obj, "$", strict, _ring(obj, "$"))
    return _load_bundle(obj, strict)


def loads(text: str, strict: bool = False):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return from_document(obj, strict)


def load(path: str, strict: bool = False):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), strict)


def save(obj, path: str, metadata: dict | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(to_document(obj, metadata)))
