"""The bicomplex of a bundle, its total complex and the column-filtration spectral sequence.

Cell ``K^{p,q}`` has one block per pair (base p-chain sigma, fiber q-chain tau
in the fiber over sigma's minimum), of the size of the stalk at tau's minimum.

Sign convention: the vertical differential into cell (p, q) carries the
factor ``(-1)^(p+q)``; the horizontal differential is the plain alternating
sum whose 0-th face is the induced map of the bundle arrow.  With this choice
the traversal map into the total complex is a chain map (see traversal.py);
putting the sign on the horizontal map instead breaks that already for a
one-point base.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .bundle import Bundle, fib_cohomology_sheaf
from .complexes import Complex
from .linalg import (
    RATIONAL,
    LinalgError,
    Matrix,
    block,
    complement_columns,
    hstack,
    kernel_basis,
    solve,
    span_basis,
)
from .sheaf import cochain_complex, complex_cohomology


@dataclass(frozen=True, eq=False)
class Bicomplex:
    bundle: Bundle
    cells: dict  # (p, q) -> dim
    labels: dict  # (p, q) -> tuple of (sigma names, tau names, coord)
    offsets: dict  # (p, q) -> {(sigma, tau): start}
    d_v: dict  # (p, q) -> Matrix K^{p,q-1} -> K^{p,q}
    d_h: dict  # (p, q) -> Matrix K^{p-1,q} -> K^{p,q}
    p_max: int
    q_max: int
    ring: str = RATIONAL

    def dim(self, p: int, q: int) -> int:
        return self.cells.get((p, q), 0)

    def vertical(self, p: int, q: int) -> Matrix:
        m = self.d_v.get((p, q))
        return m if m is not None else Matrix.zeros(self.dim(p, q), self.dim(p, q - 1), self.ring)

    def horizontal(self, p: int, q: int) -> Matrix:
        m = self.d_h.get((p, q))
        return m if m is not None else Matrix.zeros(self.dim(p, q), self.dim(p - 1, q), self.ring)

    def identity_defects(self) -> list[str]:
        """Failures of d_v^2 = 0, d_h^2 = 0 and d_h d_v + d_v d_h = 0."""
        bad = []
        for p in range(self.p_max + 1):
            for q in range(self.q_max + 1):
                if not (self.vertical(p, q + 1) @ self.vertical(p, q)).is_zero():
                    bad.append(f"d_v^2 at ({p},{q})")
                if not (self.horizontal(p + 1, q) @ self.horizontal(p, q)).is_zero():
                    bad.append(f"d_h^2 at ({p},{q})")
                # both composites map K^{p,q} -> K^{p+1,q+1}
                s = self.horizontal(p + 1, q + 1) @ self.vertical(p, q + 1) + \
                    self.vertical(p + 1, q + 1) @ self.horizontal(p + 1, q)
                if not s.is_zero():
                    bad.append(f"anticommutation at ({p},{q})")
        return bad

    @cached_property
    def total(self) -> TotalComplex:
        return total_complex(self)


def build_bicomplex(xi: Bundle) -> Bicomplex:
    hit = xi._cache.get("bicomplex")
    if hit is not None:
        return hit
    B = xi.base
    p_max = B.height
    q_max = max((F.poset.height for F in xi.fibers), default=0)
    cells, labels, offsets = {}, {}, {}
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            off, lab = {}, []
            for s in B.chains(p):
                F = xi.fibers[s[0]]
                E = F.poset
                snames = B.chain_names(s)
                for t in E.chains(q):
                    off[(s, t)] = len(lab)
                    tnames = E.chain_names(t)
                    lab.extend((snames, tnames, i) for i in range(F.dims[t[0]]))
            cells[(p, q)] = len(lab)
            labels[(p, q)] = tuple(lab)
            offsets[(p, q)] = off
    d_v, d_h = {}, {}
    for p in range(p_max + 1):
        for q in range(1, q_max + 1):
            sign = -1 if (p + q) % 2 else 1
            data: dict[int, dict] = {}
            src = offsets[(p, q - 1)]
            for (s, t), row0 in offsets[(p, q)].items():
                F = xi.fibers[s[0]]
                r = F.restriction_along(t[0], t[1])
                col0 = src[(s, t[1:])]
                for i, j, v in r.items():
                    data.setdefault(row0 + i, {})[col0 + j] = sign * v
                for j_face in range(1, q + 1):
                    col0 = src[(s, t[:j_face] + t[j_face + 1:])]
                    sgn = sign if j_face % 2 == 0 else -sign
                    for i in range(F.dims[t[0]]):
                        row = data.setdefault(row0 + i, {})
                        row[col0 + i] = row.get(col0 + i, 0) + sgn
            d_v[(p, q)] = Matrix(cells[(p, q)], cells[(p, q - 1)], data, xi.ring)
    for p in range(1, p_max + 1):
        for q in range(q_max + 1):
            data = {}
            src = offsets[(p - 1, q)]
            for (s, t), row0 in offsets[(p, q)].items():
                x0, x1 = s[0], s[1]
                g = xi.transport(x0, x1)
                img = tuple(g.vertex_map[y] for y in t)
                if all(a != b for a, b in zip(img, img[1:])):
                    col0 = src[(s[1:], img)]
                    for i, j, v in g.components[t[0]].items():
                        data.setdefault(row0 + i, {})[col0 + j] = v
                for i_face in range(1, p + 1):
                    face = s[:i_face] + s[i_face + 1:]
                    col0 = src[(face, t)]
                    sgn = -1 if i_face % 2 else 1
                    for i in range(xi.fibers[x0].dims[t[0]]):
                        row = data.setdefault(row0 + i, {})
                        row[col0 + i] = row.get(col0 + i, 0) + sgn
            d_h[(p, q)] = Matrix(cells[(p, q)], cells[(p - 1, q)], data, xi.ring)
    out = Bicomplex(xi, cells, labels, offsets, d_v, d_h, p_max, q_max, xi.ring)
    xi._cache["bicomplex"] = out
    return out


# ---------------------------------------------------------------------------
# total complex


@dataclass(frozen=True, eq=False)
class TotalComplex:
    complex: Complex
    blocks: dict  # n -> list of (p, start, size) in ascending p

    def block_range(self, n: int, p: int) -> range:
        for pp, start, size in self.blocks.get(n, ()):
            if pp == p:
                return range(start, start + size)
        return range(0)

    def filtration(self, n: int, p: int) -> list[int]:
        """Coordinates of F^p T^n (blocks p' >= p)."""
        return [i for pp, start, size in self.blocks.get(n, ()) if pp >= p for i in range(start, start + size)]

    def below(self, n: int, p: int) -> list[int]:
        """Coordinates of T^n in blocks p' < p."""
        return [i for pp, start, size in self.blocks.get(n, ()) if pp < p for i in range(start, start + size)]


def total_complex(K: Bicomplex) -> TotalComplex:
    top = K.p_max + K.q_max
    dims, labels, blocks = {}, {}, {}
    for n in range(top + 1):
        lay, lab, pos = [], [], 0
        for p in range(max(0, n - K.q_max), min(n, K.p_max) + 1):
            size = K.dim(p, n - p)
            lay.append((p, pos, size))
            lab.extend(K.labels[(p, n - p)])
            pos += size
        dims[n], labels[n], blocks[n] = pos, tuple(lab), lay
    d = {}
    for n in range(1, top + 1):
        rows = []
        for p, _, _ in blocks[n]:
            q = n - p
            row = []
            for pp, _, _ in blocks[n - 1]:
                if pp == p:
                    row.append(K.vertical(p, q))
                elif pp == p - 1:
                    row.append(K.horizontal(p, q))
                else:
                    row.append(Matrix.zeros(K.dim(p, q), K.dim(pp, n - 1 - pp), K.ring))
            rows.append(row)
        d[n] = _block_or_empty(rows, dims[n], dims[n - 1], K.ring)
    return TotalComplex(Complex(dims, d, labels, K.ring), blocks)


def _block_or_empty(rows, nrows, ncols, ring) -> Matrix:
    if not rows or not rows[0]:
        return Matrix.zeros(nrows, ncols, ring)
    return block(rows)


# ---------------------------------------------------------------------------
# spectral sequence


@dataclass(frozen=True, eq=False)
class SpectralPages:
    pages: dict  # r -> {(p, q): dim}
    representatives: dict  # r -> {(p, q): Matrix of columns in T^{p+q}}
    differentials: dict  # r -> {(p, q): Matrix E_r^{p,q} -> E_r^{p+r,q-r+1}}
    r_last: int
    r_stab: int
    p_max: int
    q_max: int

    @property
    def e_infinity(self) -> dict:
        return self.pages[self.r_last]

    def table(self) -> list[tuple[int, int, int, int]]:
        return [(r, p, q, dim) for r in sorted(self.pages) for (p, q), dim in sorted(self.pages[r].items())]


class _Filtered:
    """Kernel/image bookkeeping for the column filtration of a total complex."""

    def __init__(self, T: TotalComplex, p_max: int):
        self.T = T
        self.cx = T.complex
        self.p_max = p_max
        self._z: dict = {}

    def z(self, r: int, p: int, n: int) -> Matrix:
        """Basis (columns in T^n) of {v in F^p T^n : dv in F^{p+r} T^{n+1}}."""
        key = (r, p, n)
        hit = self._z.get(key)
        if hit is not None:
            return hit
        cx = self.cx
        cols = self.T.filtration(n, p)
        dim = cx.dim(n)
        if not cols:
            out = Matrix.zeros(dim, 0, cx.ring)
        else:
            rows = self.T.below(n + 1, p + r) if r > 0 else []
            if rows:
                sub = cx.diff(n + 1).submatrix(rows, cols)
                ker = kernel_basis(sub)
            else:
                ker = Matrix.identity(len(cols), cx.ring)
            data: dict[int, dict] = {}
            for i, j, v in ker.items():
                data.setdefault(cols[i], {})[j] = v
            out = Matrix(dim, ker.cols, data, cx.ring)
        self._z[key] = out
        return out

    def denominator(self, r: int, p: int, q: int) -> Matrix:
        n = p + q
        a = self.z(r - 1, p + 1, n)
        b = self.cx.diff(n) @ self.z(r - 1, p - r + 1, n - 1) if n >= 1 else Matrix.zeros(self.cx.dim(n), 0)
        return span_basis(hstack([a, b], rows=self.cx.dim(n)))


def spectral_pages(K: Bicomplex, r_max: int | None = None) -> SpectralPages:
    """Pages E_0 .. E_{r_last} via explicit subquotients of the total complex."""
    T = K.total
    cx = T.complex
    r_last = max(K.p_max, K.q_max) + 2 if r_max is None else r_max
    flt = _Filtered(T, K.p_max)
    cells = [(p, q) for p in range(K.p_max + 1) for q in range(K.q_max + 1)]
    pages, reps, denoms, diffs = {}, {}, {}, {}
    for r in range(r_last + 1):
        pages[r], reps[r], denoms[r] = {}, {}, {}
        for p, q in cells:
            num = flt.z(r, p, p + q)
            den = flt.denominator(r, p, q)
            keep = complement_columns(den, num)
            reps[r][(p, q)] = num.submatrix(range(num.rows), keep)
            denoms[r][(p, q)] = den
            pages[r][(p, q)] = len(keep)
        diffs[r] = {}
        for p, q in cells:
            src = reps[r][(p, q)]
            tp, tq = p + r, q - r + 1
            if (tp, tq) not in pages[r] or src.cols == 0:
                continue
            tgt = reps[r][(tp, tq)]
            if tgt.cols == 0:
                continue
            image = cx.diff(p + q + 1) @ src
            sol = solve(hstack([tgt, denoms[r][(tp, tq)]]), image)
            if sol is None:
                raise LinalgError(f"page {r}: d_r image at ({p},{q}) left Z_r")
            diffs[r][(p, q)] = sol.submatrix(range(tgt.cols), range(src.cols))
    r_stab = r_last
    while r_stab > 0 and all(m.is_zero() for m in diffs[r_stab - 1].values()):
        r_stab -= 1
    return SpectralPages(pages, reps, diffs, r_last, r_stab, K.p_max, K.q_max)


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class CellComparison:
    p: int
    q: int
    page_dim: int
    expected: int

    @property
    def ok(self) -> bool:
        return self.page_dim == self.expected


@dataclass(frozen=True)
class E2Report:
    cells: tuple

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.cells)

    def to_dict(self) -> dict:
        return {"verdict": "pass" if self.passed else "fail",
                "cells": [{"p": c.p, "q": c.q, "e2": c.page_dim, "base_cohomology": c.expected}
                          for c in self.cells]}


def e2_check(xi: Bundle, pages: SpectralPages | None = None) -> E2Report:
    """Compare E_2^{p,q} with H^p of the fiber-cohomology sheaf H^q_fib."""
    K = build_bicomplex(xi)
    pages = pages or spectral_pages(K)
    e2 = pages.pages[min(2, pages.r_last)]
    out = []
    for q in range(K.q_max + 1):
        H = complex_cohomology(cochain_complex(fib_cohomology_sheaf(xi, q)))
        betti = {h.degree: h.betti for h in H}
        for p in range(K.p_max + 1):
            out.append(CellComparison(p, q, e2.get((p, q), 0), betti.get(p, 0)))
    return E2Report(tuple(out))


@dataclass(frozen=True)
class ConvergenceReport:
    degrees: tuple  # (n, sum of E_inf on the diagonal, dim H^n(T))

    @property
    def passed(self) -> bool:
        return all(a == b for _, a, b in self.degrees)

    def to_dict(self) -> dict:
        return {"verdict": "pass" if self.passed else "fail",
                "degrees": [{"n": n, "e_infinity": a, "total_cohomology": b} for n, a, b in self.degrees]}


def convergence_check(xi: Bundle, pages: SpectralPages | None = None) -> ConvergenceReport:
    K = build_bicomplex(xi)
    pages = pages or spectral_pages(K)
    einf = pages.e_infinity
    cx = K.total.complex
    rows = []
    for n in range(K.p_max + K.q_max + 1):
        s = sum(d for (p, q), d in einf.items() if p + q == n)
        rows.append((n, s, cx.betti(n)))
    return ConvergenceReport(tuple(rows))
