"""Deterministic fixture generators: named instances and seeded random data.

Random bundles are valid by construction.  Fibers come from a chain of random
monotone maps ``Q_0 -> Q_1 -> ...`` indexed by a monotone level function on
the base, so transports compose path-independently.  A random sheaf ``G`` is
built on the resulting total poset and the fiber sheaves and arrow matrices
are read off from it, which makes every naturality square commute.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .bundle import Bundle, constant_bundle
from .linalg import RATIONAL, Matrix, solve
from .poset import Poset, boolean_lattice, chain_poset, is_recursively_admissible, random_poset, with_bottom
from .sheaf import Sheaf, SheafMorphism, constant_sheaf


class GenerationError(RuntimeError):
    pass


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


# ---------------------------------------------------------------------------
# named instances


def i1_bundle(length: int = 2, dim: int = 1, scale=1) -> Bundle:
    """A chain fiber over the bottom of a 2-chain base, collapsing to a point above.

    The default parameters give the basic instance: fiber ``a < b`` over base
    element 0, a point ``c`` over 1, one-dimensional stalks, identity maps.
    """
    base = chain_poset(2)
    names = tuple("abcdefgh"[i] for i in range(length))
    E0 = Poset(names, frozenset((i, i + 1) for i in range(length - 1)))
    F0 = constant_sheaf(E0, dim)
    F1 = constant_sheaf(Poset(("c",), frozenset()), dim)
    m = Matrix.scalar_matrix(dim, Fraction(scale))
    arrow = SheafMorphism(F1, F0, tuple([0] * length), tuple([m] * length))
    return Bundle(base, (F0, F1), {(0, 1): arrow})


def i1_family() -> list[tuple[str, Bundle]]:
    params = [(2, 1, 1), (3, 1, 1), (2, 2, 1), (2, 1, 2), (3, 2, 3), (1, 1, 1)]
    return [(f"i1-length{n}-dim{d}-scale{s}", i1_bundle(n, d, s)) for n, d, s in params]


def cube_bundle() -> Bundle:
    """Point fibers over B_2 with stalk Q[x]/(x^2); the two edges at the empty set and at
    {1,2} act by multiplication by x, the other two by the identity."""
    B = boolean_lattice(2)
    pt = Poset(("*",), frozenset())
    F = constant_sheaf(pt, 2)
    mult_x = Matrix.from_rows([[0, 0], [1, 0]])  # basis (1, x): 1 -> x, x -> 0
    ident = Matrix.identity(2)
    mats = {(0, 1): mult_x, (1, 3): ident, (0, 2): ident, (2, 3): mult_x}
    fibers = tuple(F if i == 0 else constant_sheaf(pt, 2) for i in range(4))
    arrows = {(x, y): SheafMorphism(fibers[y], fibers[x], (0,), (m,)) for (x, y), m in mats.items()}
    return Bundle(B, fibers, arrows)


def constant_chain_bundle(base: Poset, fiber_length: int, dim: int = 1) -> Bundle:
    fiber = constant_sheaf(chain_poset(fiber_length), dim)
    return constant_bundle(base, fiber)


# ---------------------------------------------------------------------------
# random sheaves


def _random_convex(P: Poset, rng: random.Random) -> frozenset:
    a = rng.randrange(len(P))
    kind = rng.random()
    if kind < 0.3:
        return P.up(a)
    if kind < 0.6:
        return P.down(a)
    b = rng.choice(sorted(P.up(a)))
    return P.up(a) & P.down(b)


def _random_unimodular(n: int, rng: random.Random) -> Matrix:
    rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(2 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if i == j:
            break
        c = rng.choice((-2, -1, 1, 2))
        rows[i] = [x + c * y for x, y in zip(rows[i], rows[j])]
    return Matrix.from_rows(rows, cols=n)


def random_sheaf(P: Poset, seed, max_dim: int = 3, summands: int | None = None) -> Sheaf:
    """Sum of indicator sheaves on random convex sets, in random bases.

    Stalk dimensions are capped at ``max_dim``.  Each stalk is then re-based
    by a random unimodular integer matrix, so restrictions are dense-ish.
    """
    rng = _rng(seed)
    n = len(P)
    if summands is None:
        summands = rng.randint(1, max_dim + 1)
    supports = []
    load = [0] * n
    for _ in range(summands):
        S = _random_convex(P, rng)
        if any(load[x] >= max_dim for x in S):
            continue
        for x in S:
            load[x] += 1
        supports.append(S)
    dims = tuple(load)
    coord = [[k for k, S in enumerate(supports) if x in S] for x in P.elements]
    change = [_random_unimodular(d, rng) if d else Matrix.zeros(0, 0) for d in dims]
    inverse = [solve(c, Matrix.identity(c.rows)) if c.rows else c for c in change]
    res = {}
    for u, v in P.covers:
        data = {}
        for i, k in enumerate(coord[u]):
            if k in coord[v]:
                data[i] = {coord[v].index(k): 1}
        plain = Matrix(dims[u], dims[v], data)
        res[(u, v)] = change[u] @ plain @ inverse[v]
    return Sheaf(P, dims, res)


# ---------------------------------------------------------------------------
# random bases and bundles


def random_admissible_base(size: int, seed, density: float = 0.5, attempts: int = 500) -> Poset:
    """Random recursively admissible poset with a minimum and ``size`` elements."""
    rng = _rng(seed)
    if size == 1:
        return Poset(("0",), frozenset())
    for _ in range(attempts):
        P = random_poset(size - 1, density, rng)
        Q = with_bottom(P, "b")
        if is_recursively_admissible(Q)[0]:
            return Q
    raise GenerationError(f"no recursively admissible base of size {size} in {attempts} attempts")


def _monotone_map(src: Poset, dst: Poset, rng: random.Random) -> tuple | None:
    """Random monotone map; ids of ``src`` are assumed naturally labelled."""
    out = []
    for u in src.elements:
        allowed = set(dst.elements)
        for w in src.down(u):
            if w != u:
                allowed &= dst.up(out[w])
        if not allowed:
            return None
        out.append(rng.choice(sorted(allowed)))
    return tuple(out)


def _levels(B: Poset, top: int, rng: random.Random) -> tuple:
    lv = [0] * len(B)
    for x in B.elements:  # naturally labelled
        below = [lv[w] for w in B.down(x) if w != x]
        lo = max(below, default=0)
        lv[x] = min(top, lo + rng.randint(0, 1))
    return tuple(lv)


def _natural(P: Poset) -> bool:
    return all(u < v for u, v in P.covers)


def random_bundle(seed, base: Poset | None = None, max_base: int = 4, max_fiber: int = 4,
                  max_dim: int = 2, attempts: int = 200) -> Bundle:
    """Random natural bundle over a (recursively admissible) base."""
    rng = _rng(seed)
    if base is None:
        base = random_admissible_base(rng.randint(1, max_base), rng)
    if not _natural(base):
        raise GenerationError("base ids must be naturally labelled")
    for _ in range(attempts):
        top = rng.randint(0, 2)
        lv = _levels(base, top, rng)
        Qs = []
        for k in range(top + 1):
            Q = random_poset(rng.randint(1, max_fiber), rng.uniform(0.2, 0.8), rng)
            Qs.append(Poset(tuple(f"{k}.{nm}" for nm in Q.names), Q.covers))
        maps = [_monotone_map(Qs[k], Qs[k + 1], rng) for k in range(top)]
        if any(m is None for m in maps):
            continue
        return _bundle_from_levels(base, lv, Qs, maps, rng, max_dim)
    raise GenerationError(f"random bundle: retry budget of {attempts} exceeded")


def _bundle_from_levels(base: Poset, lv: tuple, Qs: list, maps: list, rng: random.Random, max_dim: int) -> Bundle:
    def vmap(x: int, y: int) -> tuple:
        ids = tuple(Qs[lv[x]].elements)
        for k in range(lv[x], lv[y]):
            ids = tuple(maps[k][u] for u in ids)
        return ids

    # skeleton total poset
    index, names = {}, []
    for x in base.elements:
        for u in Qs[lv[x]].elements:
            index[(x, u)] = len(names)
            names.append((x, u))
    rel = []
    for x in base.elements:
        for y in base.up(x):
            f = vmap(x, y)
            Qy = Qs[lv[y]]
            for u in Qs[lv[x]].elements:
                for v in Qy.up(f[u]):
                    if (x, u) != (y, v):
                        rel.append((index[(x, u)], index[(y, v)]))
    E = Poset.from_order(tuple(names), rel)
    G = random_sheaf(E, rng, max_dim=max_dim)

    fibers = []
    for x in base.elements:
        Q = Qs[lv[x]]
        dims = tuple(G.dims[index[(x, u)]] for u in Q.elements)
        res = {(u, v): G.restriction_along(index[(x, u)], index[(x, v)]) for u, v in Q.covers}
        fibers.append(Sheaf(Q, dims, res, RATIONAL))
    arrows = {}
    for x, y in base.covers:
        f = vmap(x, y)
        comps = tuple(G.restriction_along(index[(x, u)], index[(y, f[u])]) for u in Qs[lv[x]].elements)
        arrows[(x, y)] = SheafMorphism(fibers[y], fibers[x], f, comps)
    return Bundle(base, tuple(fibers), arrows)
