"""Sheaves on finite posets and their normalized cochain complexes.

A sheaf assigns a free module ``Q^dims[x]`` to each element and, to each
cover ``u < v``, a restriction matrix ``F(v) -> F(u)`` of shape
``dims[u] x dims[v]``.  Cochains live on strictly increasing chains; the
coordinate of a chain sits in the stalk of its minimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .complexes import ChainMap, Complex
from .linalg import INTEGER, RATIONAL, CohomologyStep, Matrix, cohomology_step
from .poset import Poset


class SheafError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Sheaf:
    poset: Poset
    dims: tuple
    restrictions: Mapping  # (u, v) cover -> Matrix dims[u] x dims[v]
    ring: str = RATIONAL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        P = self.poset
        if len(self.dims) != len(P):
            raise SheafError(f"{len(self.dims)} stalk dims for {len(P)} elements")
        if any(d < 0 for d in self.dims):
            raise SheafError("negative stalk dimension")
        for cov in P.covers:
            m = self.restrictions.get(cov)
            if m is None:
                raise SheafError(f"missing restriction for cover {P.chain_names(cov)}")
            u, v = cov
            if m.shape != (self.dims[u], self.dims[v]):
                raise SheafError(
                    f"restriction {P.chain_names(cov)} has shape {m.shape}, expected {(self.dims[u], self.dims[v])}")
        extra = set(self.restrictions) - set(P.covers)
        if extra:
            raise SheafError(f"restriction given for non-cover {P.chain_names(sorted(extra)[0])}")

    def restriction_along(self, u: int, v: int) -> Matrix:
        """F(u <= v): F(v) -> F(u), composed along the first cover path."""
        key = (u, v)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        P = self.poset
        if u == v:
            m = Matrix.identity(self.dims[u], self.ring)
        elif not P.leq(u, v):
            raise SheafError(f"{P.names[u]!r} is not below {P.names[v]!r}")
        else:
            w = next(w for w in P.upper_covers[u] if P.leq(w, v))
            m = self.restrictions[(u, w)] @ self.restriction_along(w, v)
        self._cache[key] = m
        return m

    def stalk_total(self) -> int:
        return sum(self.dims)


def constant_sheaf(P: Poset, dim: int, ring: str = RATIONAL) -> Sheaf:
    ident = Matrix.identity(dim, ring)
    return Sheaf(P, tuple([dim] * len(P)), {c: ident for c in P.covers}, ring)


@dataclass(frozen=True)
class SheafViolation:
    bottom: object
    via: tuple
    top: object

    def __str__(self) -> str:
        a, b = self.via
        return f"paths {self.bottom!r}<{a!r}..{self.top!r} and {self.bottom!r}<{b!r}..{self.top!r} disagree"


def validate_sheaf(F: Sheaf) -> SheafViolation | None:
    """Check path independence; return the first failing diamond or None.

    For every ``u < v`` all composites starting with some cover ``u < w <= v``
    must agree.  Shorter intervals ``[u, v]`` are checked first, so the tail
    ``F(w <= v)`` is already known to be path independent.
    """
    P = F.poset
    for v in P.elements:
        below = sorted(P.down(v), key=lambda u: len(P.up(u) & P.down(v)))
        for u in below:
            if u == v:
                continue
            ws = [w for w in P.upper_covers[u] if P.leq(w, v)]
            if len(ws) < 2:
                continue
            first = F.restrictions[(u, ws[0])] @ F.restriction_along(ws[0], v)
            for w in ws[1:]:
                other = F.restrictions[(u, w)] @ F.restriction_along(w, v)
                if other != first:
                    return SheafViolation(P.names[u], (P.names[ws[0]], P.names[w]), P.names[v])
    return None


# ---------------------------------------------------------------------------
# cochains


def cochain_complex(F: Sheaf) -> Complex:
    """Normalized cochain complex; degree-k basis is (k-chain, stalk coordinate)."""
    P = F.poset
    dims: dict[int, int] = {}
    labels: dict[int, tuple] = {}
    offsets: dict[int, dict] = {}
    for k in range(P.height + 1):
        off = {}
        lab = []
        for c in P.chains(k):
            off[c] = len(lab)
            names = P.chain_names(c)
            lab.extend((names, i) for i in range(F.dims[c[0]]))
        dims[k] = len(lab)
        labels[k] = tuple(lab)
        offsets[k] = off
    d = {}
    for k in range(1, P.height + 1):
        data: dict[int, dict] = {}
        prev = offsets[k - 1]
        for c, row0 in offsets[k].items():
            x0 = c[0]
            # j = 0 face, restricted from x1 to x0
            r = F.restriction_along(x0, c[1])
            col0 = prev[c[1:]]
            for i, j, v in r.items():
                data.setdefault(row0 + i, {})[col0 + j] = v
            for j in range(1, k + 1):
                face = c[:j] + c[j + 1:]
                colj = prev[face]
                sign = -1 if j % 2 else 1
                for i in range(F.dims[x0]):
                    row = data.setdefault(row0 + i, {})
                    row[colj + i] = row.get(colj + i, 0) + sign
        d[k] = Matrix(dims[k], dims[k - 1], data, F.ring)
    return Complex(dims, d, labels, F.ring)


@dataclass(frozen=True)
class DegreeCohomology:
    degree: int
    betti: int
    torsion: tuple

    def to_dict(self) -> dict:
        return {"degree": self.degree, "betti": self.betti, "torsion": list(self.torsion)}


def complex_cohomology(cx: Complex, ring: str = RATIONAL) -> list[DegreeCohomology]:
    out = []
    for n in range(0, max(cx.degrees, default=-1) + 1):
        step: CohomologyStep = cohomology_step(cx.diff(n), cx.diff(n + 1), ring)
        out.append(DegreeCohomology(n, step.betti, step.torsion))
    return out


def cohomology(F: Sheaf, ring: str | None = None) -> list[DegreeCohomology]:
    """Per-degree Betti numbers (and torsion over the integers)."""
    ring = ring or F.ring
    if ring == INTEGER:
        F = Sheaf(F.poset, F.dims, {c: m.with_ring(INTEGER) for c, m in F.restrictions.items()}, INTEGER)
    return complex_cohomology(cochain_complex(F), ring)


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True, eq=False)
class SheafMorphism:
    """(P, F) -> (Q, G): vertex map Q -> P and components F(vmap(x)) -> G(x)."""

    source: Sheaf
    target: Sheaf
    vertex_map: tuple
    components: tuple  # per x in Q: Matrix G.dims[x] x F.dims[vmap[x]]

    def __post_init__(self):
        P, Q = self.source.poset, self.target.poset
        if len(self.vertex_map) != len(Q) or len(self.components) != len(Q):
            raise SheafError("vertex map / components must cover every target element")
        for x in Q.elements:
            if not 0 <= self.vertex_map[x] < len(P):
                raise SheafError(f"vertex map sends {Q.names[x]!r} outside the source poset")
            want = (self.target.dims[x], self.source.dims[self.vertex_map[x]])
            if self.components[x].shape != want:
                raise SheafError(f"component at {Q.names[x]!r} has shape {self.components[x].shape}, expected {want}")


@dataclass(frozen=True)
class MorphismViolation:
    kind: str  # "monotone" | "naturality"
    cover: tuple

    def __str__(self) -> str:
        return f"{self.kind} fails on cover {self.cover!r}"


def validate_morphism(g: SheafMorphism) -> MorphismViolation | None:
    F, G = g.source, g.target
    P, Q = F.poset, G.poset
    f = g.vertex_map
    for x, y in Q.sorted_covers:
        if not P.leq(f[x], f[y]):
            return MorphismViolation("monotone", (Q.names[x], Q.names[y]))
        lhs = g.components[x] @ F.restriction_along(f[x], f[y])
        rhs = G.restrictions[(x, y)] @ g.components[y]
        if lhs != rhs:
            return MorphismViolation("naturality", (Q.names[x], Q.names[y]))
    return None


def induced_matrix(g: SheafMorphism, k: int) -> Matrix:
    """Degree-k matrix of the induced map S^k(P,F) -> S^k(Q,G).

    Coordinates at a chain of Q read the chain's image in P through the
    component at its minimum; degenerate images contribute zero.
    """
    P, Q = g.source.poset, g.target.poset
    f = g.vertex_map
    src_off = _offsets(g.source, k)
    tgt_off = _offsets(g.target, k)
    data: dict[int, dict] = {}
    for c, row0 in tgt_off.items():
        img = tuple(f[x] for x in c)
        if any(a == b for a, b in zip(img, img[1:])):
            continue
        col0 = src_off[img]
        for i, j, v in g.components[c[0]].items():
            data.setdefault(row0 + i, {})[col0 + j] = v
    rows = sum(g.target.dims[c[0]] for c in Q.chains(k))
    cols = sum(g.source.dims[c[0]] for c in P.chains(k))
    return Matrix(rows, cols, data, g.target.ring)


def _offsets(F: Sheaf, k: int) -> dict:
    key = ("offsets", k)
    hit = F._cache.get(key)
    if hit is None:
        hit = {}
        pos = 0
        for c in F.poset.chains(k):
            hit[c] = pos
            pos += F.dims[c[0]]
        F._cache[key] = hit
    return hit


def induced_chain_map(g: SheafMorphism) -> ChainMap:
    src = cochain_complex(g.source)
    tgt = cochain_complex(g.target)
    top = max(g.source.poset.height, g.target.poset.height)
    maps = {k: induced_matrix(g, k) for k in range(top + 1)}
    return ChainMap(src, tgt, maps, name="induced")


def compose_morphisms(first: SheafMorphism, second: SheafMorphism) -> SheafMorphism:
    """second o first, for first: (P,F)->(Q,G), second: (Q,G)->(R,H)."""
    f1, f2 = first.vertex_map, second.vertex_map
    vmap = tuple(f1[f2[x]] for x in range(len(second.target.poset)))
    comps = tuple(second.components[x] @ first.components[f2[x]] for x in range(len(second.target.poset)))
    return SheafMorphism(first.source, second.target, vmap, comps)


def identity_morphism(F: Sheaf) -> SheafMorphism:
    return SheafMorphism(F, F, tuple(F.poset.elements), tuple(Matrix.identity(d, F.ring) for d in F.dims))

