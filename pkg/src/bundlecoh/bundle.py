"""Bundles of sheaves over a base poset and the glued total sheaf.

A base cover ``x < y`` carries a sheaf morphism from the fiber over ``y`` to
the fiber over ``x``: a forward vertex map ``f: E_x -> E_y`` and, for each
``u`` in ``E_x``, a matrix ``F_y(f(u)) -> F_x(u)``.  These are stored as
:class:`SheafMorphism` objects with ``source = fiber[y]``,
``target = fiber[x]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .complexes import CohomologyBasis, induced_on_cohomology
from .linalg import RATIONAL, LinalgError, Matrix
from .poset import Poset, SubposetView
from .sheaf import (
    Sheaf,
    SheafError,
    SheafMorphism,
    cochain_complex,
    compose_morphisms,
    identity_morphism,
    induced_chain_map,
    induced_matrix,
    validate_morphism,
    validate_sheaf,
)


class BundleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Bundle:
    base: Poset
    fibers: tuple  # Sheaf per base element
    arrows: Mapping  # base cover (x, y) -> SheafMorphism fibers[y] -> fibers[x]
    ring: str = RATIONAL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        B = self.base
        if len(self.fibers) != len(B):
            raise BundleError(f"{len(self.fibers)} fibers for {len(B)} base elements")
        for cov in B.covers:
            a = self.arrows.get(cov)
            x, y = cov
            if a is None:
                raise BundleError(f"missing arrow for base cover {B.chain_names(cov)}")
            if a.source is not self.fibers[y] or a.target is not self.fibers[x]:
                raise BundleError(f"arrow {B.chain_names(cov)} must map the fiber over "
                                  f"{B.names[y]!r} to the fiber over {B.names[x]!r}")
        extra = set(self.arrows) - set(B.covers)
        if extra:
            raise BundleError(f"arrow given for non-cover {B.chain_names(sorted(extra)[0])}")

    def fiber_poset(self, x: int) -> Poset:
        return self.fibers[x].poset

    def transport(self, x: int, y: int) -> SheafMorphism:
        """Composite bundle arrow for ``x <= y`` along the first cover path."""
        key = ("transport", x, y)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        B = self.base
        if x == y:
            m = identity_morphism(self.fibers[x])
        elif not B.leq(x, y):
            raise BundleError(f"{B.names[x]!r} is not below {B.names[y]!r}")
        else:
            w = next(w for w in B.upper_covers[x] if B.leq(w, y))
            m = compose_morphisms(self.transport(w, y), self.arrows[(x, w)])
        self._cache[key] = m
        return m

    def total_elements(self) -> int:
        return sum(len(F.poset) for F in self.fibers)


@dataclass(frozen=True)
class BundleViolation:
    kind: str  # "fiber" | "arrow" | "diamond"
    where: tuple
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} {self.where!r}: {self.detail}"


def _same_morphism(a: SheafMorphism, b: SheafMorphism) -> bool:
    return a.vertex_map == b.vertex_map and all(p == q for p, q in zip(a.components, b.components))


def validate_bundle(xi: Bundle) -> BundleViolation | None:
    """Check fibers, naturality of every arrow and path independence on the base."""
    B = xi.base
    for x in B.elements:
        bad = validate_sheaf(xi.fibers[x])
        if bad is not None:
            return BundleViolation("fiber", (B.names[x],), str(bad))
    for cov in B.sorted_covers:
        bad = validate_morphism(xi.arrows[cov])
        if bad is not None:
            return BundleViolation("arrow", B.chain_names(cov), str(bad))
    for z in B.elements:
        below = sorted(B.down(z), key=lambda x: len(B.up(x) & B.down(z)))
        for x in below:
            ws = [w for w in B.upper_covers[x] if B.leq(w, z)]
            if len(ws) < 2:
                continue
            first = compose_morphisms(xi.transport(ws[0], z), xi.arrows[(x, ws[0])])
            for w in ws[1:]:
                other = compose_morphisms(xi.transport(w, z), xi.arrows[(x, w)])
                if not _same_morphism(first, other):
                    return BundleViolation(
                        "diamond", (B.names[x], B.names[ws[0]], B.names[w], B.names[z]),
                        "paths disagree")
    return None


def constant_bundle(B: Poset, fiber: Sheaf) -> Bundle:
    ident = identity_morphism(fiber)
    return Bundle(B, tuple([fiber] * len(B)), {c: ident for c in B.covers}, fiber.ring)


# ---------------------------------------------------------------------------
# total sheaf


@dataclass(frozen=True, eq=False)
class TotalSheaf:
    """Glued poset E and sheaf F; element ids are ordered by (base id, fiber id)."""

    bundle: Bundle
    sheaf: Sheaf
    base_of: tuple
    local: tuple
    index: Mapping  # (base id, fiber id) -> total id

    @property
    def poset(self) -> Poset:
        return self.sheaf.poset


def total_order_pairs(xi: Bundle) -> list[tuple[int, int, int, int]]:
    """All (x, u, y, v) with (x, u) <= (y, v) in the total poset."""
    B = xi.base
    out = []
    for x in B.elements:
        for y in sorted(B.up(x)):
            t = xi.transport(x, y)
            Ey = xi.fiber_poset(y)
            for u in xi.fiber_poset(x).elements:
                fu = t.vertex_map[u]
                out.extend((x, u, y, v) for v in sorted(Ey.up(fu)))
    return out


def total_sheaf(xi: Bundle) -> TotalSheaf:
    hit = xi._cache.get("total")
    if hit is not None:
        return hit
    B = xi.base
    names, base_of, local, index = [], [], [], {}
    for x in B.elements:
        Ex = xi.fiber_poset(x)
        for u in Ex.elements:
            index[(x, u)] = len(names)
            names.append((B.names[x], Ex.names[u]))
            base_of.append(x)
            local.append(u)
    rel = [(index[(x, u)], index[(y, v)]) for x, u, y, v in total_order_pairs(xi) if (x, u) != (y, v)]
    E = Poset.from_order(tuple(names), rel)
    dims = tuple(xi.fibers[base_of[i]].dims[local[i]] for i in E.elements)
    res = {}
    for a, b in E.covers:
        x, u, y, v = base_of[a], local[a], base_of[b], local[b]
        t = xi.transport(x, y)
        res[(a, b)] = t.components[u] @ xi.fibers[y].restriction_along(t.vertex_map[u], v)
    F = Sheaf(E, dims, res, xi.ring)
    out = TotalSheaf(xi, F, tuple(base_of), tuple(local), index)
    xi._cache["total"] = out
    return out


def restrict_bundle(xi: Bundle, view: SubposetView) -> Bundle:
    """Bundle over the sub-poset ``view`` (arrows are composite transports)."""
    if view.parent is not xi.base:
        raise BundleError("view is not a sub-poset of this bundle's base")
    pos = {x: i for i, x in enumerate(view.members)}
    fibers = tuple(xi.fibers[x] for x in view.members)
    arrows = {(pos[x], pos[y]): xi.transport(x, y) for x, y in view.covers}
    return Bundle(view.poset, fibers, arrows, xi.ring)


# ---------------------------------------------------------------------------
# sheaves on the base


def q_cochain_sheaf(xi: Bundle, q: int) -> Sheaf:
    """x -> S^q(E_x, F_x), restrictions are the induced maps in degree q."""
    B = xi.base
    dims = tuple(sum(F.dims[c[0]] for c in F.poset.chains(q)) if q >= 0 else 0 for F in xi.fibers)
    res = {}
    for cov in B.covers:
        if q < 0:
            res[cov] = Matrix.zeros(0, 0, xi.ring)
        else:
            res[cov] = induced_matrix(xi.arrows[cov], q)
    return Sheaf(B, dims, res, xi.ring)


def fib_cohomology_sheaf(xi: Bundle, q: int) -> Sheaf:
    """x -> H^q(E_x, F_x) with the maps induced on cohomology (rational)."""
    B = xi.base
    bases = xi._cache.get("fiber-cohomology")
    if bases is None:
        bases = [CohomologyBasis(cochain_complex(F)) for F in xi.fibers]
        xi._cache["fiber-cohomology"] = bases
    dims = tuple(b.dim(q) for b in bases)
    res = {}
    for x, y in B.covers:
        f = induced_chain_map(xi.arrows[(x, y)])
        try:
            res[(x, y)] = induced_on_cohomology(f, bases[y], bases[x], q)
        except LinalgError as exc:
            raise SheafError(f"cover {B.chain_names((x, y))}: induced class is not expressible ({exc})") from exc
    return Sheaf(B, dims, res, RATIONAL)
