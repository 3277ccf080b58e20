"""Grids of (base chain, fiber chain) pairs, their traversals and the map phi.

For a base chain ``x_0 < ... < x_p`` and a chain ``y_0 < ... < y_q`` in the
fiber over ``x_0``, column i of the grid is the fiber chain transported to
``x_i``.  A traversal is a lattice path from the bottom-left to the top-right
corner; right steps move along the base, up steps along a fiber.  The map
phi sends a cochain u on the total sheaf to the element of the total complex
whose (sigma, tau) block is ``(-1)^iota(q) * sum_z (-1)^m(z) u|_z``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from math import comb

from .bundle import Bundle, BundleError, total_sheaf
from .complexes import ChainMap
from .linalg import Matrix
from .sheaf import cochain_complex
from .spectral import build_bicomplex

UP, RIGHT = "a", "b"  # step letters; up steps move inside a fiber, right steps along the base


@dataclass(frozen=True)
class Grid:
    sigma: tuple  # base chain
    tau: tuple  # chain in the fiber over sigma[0]
    vertices: tuple  # vertices[i][j] = fiber id of y_{i,j} in the fiber over sigma[i]

    @property
    def p(self) -> int:
        return len(self.sigma) - 1

    @property
    def q(self) -> int:
        return len(self.tau) - 1


def build_grid(xi: Bundle, sigma: tuple, tau: tuple) -> Grid:
    x0 = sigma[0]
    E0 = xi.fiber_poset(x0)
    if any(not 0 <= y < len(E0) for y in tau) or any(not E0.lt(a, b) for a, b in zip(tau, tau[1:])):
        raise BundleError(f"tau is not a chain in the fiber over {xi.base.names[x0]!r}")
    cols = [tuple(tau)]
    for a, b in zip(sigma, sigma[1:]):
        f = xi.transport(a, b).vertex_map
        cols.append(tuple(f[y] for y in cols[-1]))
    return Grid(tuple(sigma), tuple(tau), tuple(cols))


@dataclass(frozen=True)
class Traversal:
    steps: str  # word in UP / RIGHT
    path: tuple  # grid coordinates (i, j) visited, starting at (0, 0)

    def chain(self, grid: Grid) -> tuple:
        """Visited vertices as (base id, fiber id) pairs."""
        return tuple((grid.sigma[i], grid.vertices[i][j]) for i, j in self.path)


def traversal_words(p: int, q: int) -> list[str]:
    """All words with p RIGHT and q UP letters, in lexicographic order."""
    n = p + q
    words = []
    for ups in combinations(range(n), q):
        s = set(ups)
        words.append("".join(UP if k in s else RIGHT for k in range(n)))
    return sorted(words)


def enumerate_traversals(grid: Grid) -> list[Traversal]:
    return lattice_paths(grid.p, grid.q)


def lattice_paths(p: int, q: int) -> list[Traversal]:
    out = []
    for w in traversal_words(p, q):
        i = j = 0
        path = [(0, 0)]
        for c in w:
            if c == UP:
                j += 1
            else:
                i += 1
            path.append((i, j))
        out.append(Traversal(w, tuple(path)))
    return out


def m_of(t: Traversal, p: int | None = None) -> int:
    """Sum of (p - i) over up steps taken in column i (cells below-right of the path)."""
    if p is None:
        p = t.steps.count(RIGHT)
    i = total = 0
    for c in t.steps:
        if c == RIGHT:
            i += 1
        else:
            total += p - i
    return total


def iota(q: int) -> int:
    """Ceiling of q / 2."""
    return (q + 1) // 2


def traversal_count(p: int, q: int) -> int:
    return comb(p + q, p)


# ---------------------------------------------------------------------------
# phi


def phi_matrix(xi: Bundle, n: int) -> Matrix:
    """Degree-n matrix of phi: S^n(E, F) -> T^n."""
    K = build_bicomplex(xi)
    T = K.total
    tot = total_sheaf(xi)
    E, F = tot.poset, tot.sheaf
    s_off, pos = {}, 0
    for c in E.chains(n):
        s_off[c] = pos
        pos += F.dims[c[0]]
    rows = T.complex.dim(n)
    data: dict[int, dict] = {}
    for p, start, _ in T.blocks.get(n, ()):
        q = n - p
        outer = -1 if iota(q) % 2 else 1
        words = lattice_paths(p, q)
        signs = [outer * (-1 if m_of(t, p) % 2 else 1) for t in words]
        for (s, t), off in K.offsets[(p, q)].items():
            grid = build_grid(xi, s, t)
            row0 = start + off
            dim = xi.fibers[s[0]].dims[t[0]]
            for trav, sign in zip(words, signs):
                z = trav.chain(grid)
                if any(a == b for a, b in zip(z, z[1:])):
                    continue  # degenerate traversal
                col0 = s_off[tuple(tot.index[v] for v in z)]
                for i in range(dim):
                    row = data.setdefault(row0 + i, {})
                    row[col0 + i] = row.get(col0 + i, 0) + sign
    return Matrix(rows, pos, data, xi.ring)


def phi_chain_map(xi: Bundle) -> ChainMap:
    hit = xi._cache.get("phi")
    if hit is not None:
        return hit
    K = build_bicomplex(xi)
    S = cochain_complex(total_sheaf(xi).sheaf)
    top = max(max(S.degrees, default=0), K.p_max + K.q_max)
    maps = {n: phi_matrix(xi, n) for n in range(top + 1)}
    out = ChainMap(S, K.total.complex, maps, name="phi")
    xi._cache["phi"] = out
    return out


@dataclass(frozen=True)
class PhiReport:
    matrix_defects: tuple  # degrees where d_T phi != phi d_S
    vector_defects: tuple  # (degree, trial) pairs failing on random cochains
    trials: int

    @property
    def passed(self) -> bool:
        return not self.matrix_defects and not self.vector_defects

    def to_dict(self) -> dict:
        return {"verdict": "pass" if self.passed else "fail",
                "matrix_defects": list(self.matrix_defects),
                "vector_defects": [list(d) for d in self.vector_defects],
                "trials": self.trials}


def phi_chain_map_check(xi: Bundle, trials: int = 0, seed: int = 0) -> PhiReport:
    """Exact check of d_T phi = phi d_S, as matrices and on random integer cochains."""
    f = phi_chain_map(xi)
    S, T = f.source, f.target
    bad = tuple(f.defects())
    rng = random.Random(seed)
    vbad = []
    for k in range(trials):
        for n in f.degrees:
            dim = S.dim(n)
            if not dim:
                continue
            u = {i: rng.randint(-3, 3) for i in range(dim)}
            lhs = T.diff(n + 1).apply(f.at(n).apply(u))
            rhs = f.at(n + 1).apply(S.diff(n + 1).apply(u))
            if lhs != rhs:
                vbad.append((n, k))
    return PhiReport(bad, tuple(vbad), trials)
