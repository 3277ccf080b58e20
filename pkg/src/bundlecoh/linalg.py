"""Exact linear algebra over the rationals (and the integers, for torsion).

Matrices are stored sparsely as ``{row: {col: value}}`` with only nonzero
entries kept.  Entries are Python ``int`` or :class:`fractions.Fraction`;
a Fraction with denominator 1 is always stored as an ``int``.

Elimination is done fraction-free on primitive integer rows (every rational
row is first scaled to integers), which keeps the arithmetic on machine-size
ints for the small-coefficient matrices this package produces.  Outputs that
are defined canonically (RREF, kernel basis, pivot columns) do not depend on
the internal pivot-row choice.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Sequence

RATIONAL = "rational"
INTEGER = "integer"
RINGS = (RATIONAL, INTEGER)


class LinalgError(ValueError):
    pass


def scalar(x, ring: str = RATIONAL):
    """Canonicalize a scalar: ints stay ints, integral Fractions become ints."""
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        x = parse_scalar(x)
        return scalar(x, ring)
    x = Fraction(x)
    if x.denominator == 1:
        return x.numerator
    if ring == INTEGER:
        raise LinalgError(f"non-integer entry {x} in integer matrix")
    return x


def parse_scalar(text: str, strict: bool = False):
    """Parse ``"p/q"`` or ``"n"``.  In strict mode only canonical strings pass."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise LinalgError(f"bad scalar {text!r}") from exc
    if strict and format_scalar(value) != text:
        raise LinalgError(f"non-canonical scalar {text!r} (expected {format_scalar(value)!r})")
    return value.numerator if value.denominator == 1 else value


def format_scalar(x) -> str:
    return str(Fraction(x))


class Matrix:
    """Immutable sparse matrix with exact entries."""

    __slots__ = ("rows", "cols", "ring", "_r", "_t")

    def __init__(self, rows: int, cols: int, data=None, ring: str = RATIONAL, *, _trusted=False):
        if rows < 0 or cols < 0:
            raise LinalgError("negative shape")
        if ring not in RINGS:
            raise LinalgError(f"unknown ring {ring!r}")
        self.rows = rows
        self.cols = cols
        self.ring = ring
        self._t = None
        if _trusted:
            self._r = data
            return
        r: dict[int, dict[int, object]] = {}
        for i, row in (data or {}).items():
            if not 0 <= i < rows:
                raise LinalgError(f"row {i} out of range for {rows}x{cols}")
            clean = {}
            for j, v in row.items():
                if not 0 <= j < cols:
                    raise LinalgError(f"col {j} out of range for {rows}x{cols}")
                v = scalar(v, ring)
                if v:
                    clean[j] = v
            if clean:
                r[i] = clean
        self._r = r

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int, ring: str = RATIONAL) -> Matrix:
        return cls(rows, cols, {}, ring, _trusted=True)

    @classmethod
    def identity(cls, n: int, ring: str = RATIONAL) -> Matrix:
        return cls(n, n, {i: {i: 1} for i in range(n)}, ring, _trusted=True)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None, ring: str = RATIONAL) -> Matrix:
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise LinalgError("ragged rows")
        data = {i: {j: v for j, v in enumerate(r)} for i, r in enumerate(rows)}
        return cls(len(rows), cols, data, ring)

    @classmethod
    def from_columns(cls, columns: Sequence[dict], rows: int, ring: str = RATIONAL) -> Matrix:
        """Build from sparse column dicts ``{row: value}``."""
        data: dict[int, dict[int, object]] = {}
        for j, col in enumerate(columns):
            for i, v in col.items():
                data.setdefault(i, {})[j] = v
        return cls(rows, len(columns), data, ring)

    @classmethod
    def scalar_matrix(cls, n: int, c, ring: str = RATIONAL) -> Matrix:
        c = scalar(c, ring)
        if not c:
            return cls.zeros(n, n, ring)
        return cls(n, n, {i: {i: c} for i in range(n)}, ring, _trusted=True)

    # access -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self._r.get(i, {}).get(j, 0)

    def row(self, i: int) -> dict:
        return self._r.get(i, {})

    def items(self) -> Iterator[tuple[int, int, object]]:
        for i in sorted(self._r):
            row = self._r[i]
            for j in sorted(row):
                yield i, j, row[j]

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self._r.values())

    def to_rows(self) -> list[list]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for i, row in self._r.items():
            for j, v in row.items():
                out[i][j] = v
        return out

    def column(self, j: int) -> dict:
        return self.T.row(j)

    def columns(self) -> list[dict]:
        t = self.T
        return [t.row(j) for j in range(self.cols)]

    def is_zero(self) -> bool:
        return not self._r

    # algebra ------------------------------------------------------------

    @property
    def T(self) -> Matrix:
        if self._t is None:
            data: dict[int, dict[int, object]] = {}
            for i, row in self._r.items():
                for j, v in row.items():
                    data.setdefault(j, {})[i] = v
            t = Matrix(self.cols, self.rows, data, self.ring, _trusted=True)
            t._t = self
            self._t = t
        return self._t

    def _check_same(self, other: Matrix):
        if self.shape != other.shape:
            raise LinalgError(f"shape mismatch {self.shape} vs {other.shape}")

    def _ring_with(self, other: Matrix) -> str:
        return INTEGER if self.ring == other.ring == INTEGER else RATIONAL

    def __add__(self, other: Matrix) -> Matrix:
        self._check_same(other)
        data = {i: dict(r) for i, r in self._r.items()}
        for i, row in other._r.items():
            tgt = data.setdefault(i, {})
            for j, v in row.items():
                s = tgt.get(j, 0) + v
                if s:
                    tgt[j] = _canon(s)
                else:
                    tgt.pop(j, None)
            if not tgt:
                del data[i]
        return Matrix(self.rows, self.cols, data, self._ring_with(other), _trusted=True)

    def __neg__(self) -> Matrix:
        return self.scale(-1)

    def __sub__(self, other: Matrix) -> Matrix:
        return self + (-other)

    def scale(self, c) -> Matrix:
        c = scalar(c)
        if not c:
            return Matrix.zeros(self.rows, self.cols, self.ring)
        ring = self.ring if isinstance(c, int) else RATIONAL
        data = {i: {j: _canon(v * c) for j, v in r.items()} for i, r in self._r.items()}
        return Matrix(self.rows, self.cols, data, ring, _trusted=True)

    def __matmul__(self, other: Matrix) -> Matrix:
        if self.cols != other.rows:
            raise LinalgError(f"cannot multiply {self.shape} by {other.shape}")
        orows = other._r
        data = {}
        for i, row in self._r.items():
            acc: dict[int, object] = {}
            for k, a in row.items():
                brow = orows.get(k)
                if not brow:
                    continue
                for j, b in brow.items():
                    acc[j] = acc.get(j, 0) + a * b
            acc = {j: _canon(v) for j, v in acc.items() if v}
            if acc:
                data[i] = acc
        return Matrix(self.rows, other.cols, data, self._ring_with(other), _trusted=True)

    def apply(self, vec: dict) -> dict:
        """Multiply by a sparse column vector ``{index: value}``."""
        out: dict[int, object] = {}
        for i, row in self._r.items():
            s = 0
            for k, a in row.items():
                b = vec.get(k)
                if b:
                    s += a * b
            if s:
                out[i] = _canon(s)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self._r == other._r

    __hash__ = None

    def __repr__(self) -> str:
        if self.rows * self.cols <= 64:
            body = [[format_scalar(v) for v in r] for r in self.to_rows()]
            return f"Matrix({self.rows}x{self.cols}, {body})"
        return f"Matrix({self.rows}x{self.cols}, nnz={self.nnz})"

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
        colpos = {c: k for k, c in enumerate(cols)}
        data = {}
        for a, i in enumerate(rows):
            row = self._r.get(i)
            if not row:
                continue
            if len(row) < len(colpos):
                sub = {colpos[j]: v for j, v in row.items() if j in colpos}
            else:
                sub = {k: row[c] for c, k in colpos.items() if c in row}
            if sub:
                data[a] = sub
        return Matrix(len(rows), len(cols), data, self.ring, _trusted=True)

    def with_ring(self, ring: str) -> Matrix:
        if ring == self.ring:
            return self
        return Matrix(self.rows, self.cols, self._r, ring)


def _canon(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


def hstack(mats: Sequence[Matrix], rows: int | None = None) -> Matrix:
    if not mats:
        return Matrix.zeros(rows or 0, 0)
    rows = mats[0].rows
    data: dict[int, dict[int, object]] = {}
    off = 0
    ring = INTEGER
    for m in mats:
        if m.rows != rows:
            raise LinalgError("hstack row mismatch")
        for i, r in m._r.items():
            tgt = data.setdefault(i, {})
            for j, v in r.items():
                tgt[j + off] = v
        off += m.cols
        if m.ring == RATIONAL:
            ring = RATIONAL
    return Matrix(rows, off, data, ring, _trusted=True)


def vstack(mats: Sequence[Matrix], cols: int | None = None) -> Matrix:
    if not mats:
        return Matrix.zeros(0, cols or 0)
    return hstack([m.T for m in mats]).T


def block(blocks: Sequence[Sequence[Matrix]]) -> Matrix:
    return vstack([hstack(list(r)) for r in blocks])


# ---------------------------------------------------------------------------
# elimination core


def _int_row(row: dict) -> dict:
    """Scale a rational row to a primitive integer row with the same span."""
    den = 1
    for v in row.values():
        if isinstance(v, Fraction):
            den = den * v.denominator // gcd(den, v.denominator)
    if den != 1:
        row = {j: int(v * den) for j, v in row.items()}
    return _primitive(row)


def _primitive(row: dict) -> dict:
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {j: v // g for j, v in row.items()}
    return row


class _Echelon:
    """Incrementally maintained echelon basis of integer row vectors.

    ``piv[c]`` is a primitive integer row whose smallest column is ``c`` and
    whose entry at ``c`` is positive.
    """

    def __init__(self):
        self.piv: dict[int, dict[int, int]] = {}

    def reduce(self, row: dict) -> dict:
        """Eliminate leading entries against the basis; return the remainder."""
        piv = self.piv
        if not row:
            return row
        row = dict(row)
        heap = list(row)
        heapq.heapify(heap)
        while heap:
            c = heapq.heappop(heap)
            a = row.get(c)
            if not a:
                continue
            p = piv.get(c)
            if p is None:
                # leading entry found; drop stale heap keys below c (none exist)
                return _primitive(row)
            pc = p[c]
            g = gcd(a, pc)
            ma, mp = pc // g, a // g
            if ma != 1:
                for j in row:
                    row[j] *= ma
            for j, v in p.items():
                s = row.get(j, 0) - mp * v
                if s:
                    if j not in row:
                        heapq.heappush(heap, j)
                    row[j] = s
                else:
                    row.pop(j, None)
        return {}

    def insert(self, row: dict) -> int | None:
        """Insert a row; return its new pivot column or None if dependent."""
        rem = self.reduce(row)
        if not rem:
            return None
        c = min(rem)
        if rem[c] < 0:
            rem = {j: -v for j, v in rem.items()}
        self.piv[c] = rem
        return c

    def rref_rows(self) -> list[tuple[int, dict]]:
        """Back-substitute; return (pivot col, rational row with leading 1)."""
        order = sorted(self.piv)
        rows = {c: dict(self.piv[c]) for c in order}
        for k in range(len(order) - 1, -1, -1):
            c = order[k]
            p = rows[c]
            pc = p[c]
            for c2 in order[:k]:
                r = rows[c2]
                a = r.get(c)
                if not a:
                    continue
                g = gcd(a, pc)
                ma, mp = pc // g, a // g
                new = {j: v * ma for j, v in r.items()} if ma != 1 else dict(r)
                for j, v in p.items():
                    s = new.get(j, 0) - mp * v
                    if s:
                        new[j] = s
                    else:
                        new.pop(j, None)
                new = _primitive(new)
                if new[c2] < 0:
                    new = {j: -v for j, v in new.items()}
                rows[c2] = new
        out = []
        for c in order:
            r = rows[c]
            lead = r[c]
            out.append((c, {j: _canon(Fraction(v, lead)) for j, v in r.items()}))
        return out


def _echelon_of(m: Matrix) -> _Echelon:
    ech = _Echelon()
    for i in sorted(m._r):
        ech.insert(_int_row(m._r[i]))
    return ech


def rank(m: Matrix) -> int:
    """Rank over the rationals."""
    # eliminate along the shorter side
    src = m if m.rows <= m.cols else m.T
    return len(_echelon_of(src).piv)


def rref(m: Matrix) -> Matrix:
    rows = _echelon_of(m).rref_rows()
    return Matrix(m.rows, m.cols, {k: r for k, (_, r) in enumerate(rows)}, RATIONAL, _trusted=True)


def pivot_columns(m: Matrix) -> list[int]:
    """Indices of the first linearly independent columns (leftmost basis)."""
    return sorted(_echelon_of(m).piv)


def kernel_basis(m: Matrix) -> Matrix:
    """Columns spanning {v : m v = 0}; one per free column, canonical RREF basis."""
    rows = _echelon_of(m).rref_rows()
    pivots = {c for c, _ in rows}
    free = [j for j in range(m.cols) if j not in pivots]
    fpos = {f: k for k, f in enumerate(free)}
    data: dict[int, dict[int, object]] = {}
    for f, k in fpos.items():
        data.setdefault(f, {})[k] = 1
    for c, r in rows:
        for j, v in r.items():
            k = fpos.get(j)
            if k is not None:
                data.setdefault(c, {})[k] = _canon(-v)
    return Matrix(m.cols, len(free), data, RATIONAL, _trusted=True)


def image_basis(m: Matrix) -> Matrix:
    """Columns of ``m`` at its pivot columns."""
    piv = pivot_columns(m)
    return m.submatrix(range(m.rows), piv)


def solve(m: Matrix, b: Matrix) -> Matrix | None:
    """Some X with m X = b, or None if any column of b is inconsistent."""
    if b.rows != m.rows:
        raise LinalgError(f"solve: {m.shape} vs rhs {b.shape}")
    n = m.cols
    aug = hstack([m, b])
    ech = _echelon_of(aug)
    if any(c >= n for c in ech.piv):
        return None
    data: dict[int, dict[int, object]] = {}
    for c, r in ech.rref_rows():
        sol = {j - n: v for j, v in r.items() if j >= n}
        if sol:
            data[c] = sol
    return Matrix(n, b.cols, data, RATIONAL, _trusted=True)


def solve_vector(m: Matrix, b: Sequence) -> list | None:
    col = Matrix.from_rows([[v] for v in b], cols=1) if len(b) else Matrix.zeros(0, 1)
    x = solve(m, col)
    if x is None:
        return None
    return [x[i, 0] for i in range(m.cols)]


def complement_columns(base: Matrix, cand: Matrix) -> list[int]:
    """Indices of columns of ``cand`` extending span(base), first-pivot order."""
    k = base.cols
    piv = pivot_columns(hstack([base, cand]))
    return [c - k for c in piv if c >= k]


def span_basis(m: Matrix) -> Matrix:
    return image_basis(m)


# ---------------------------------------------------------------------------
# integer Smith normal form


@dataclass(frozen=True)
class SmithForm:
    U: Matrix
    D: Matrix
    V: Matrix

    @property
    def invariant_factors(self) -> list[int]:
        n = min(self.D.rows, self.D.cols)
        return [self.D[i, i] for i in range(n) if self.D[i, i]]


def smith_normal_form(m: Matrix) -> SmithForm:
    """Return unimodular U, V and diagonal D with U m V = D, d_i | d_{i+1}."""
    if m.ring != INTEGER:
        if any(not isinstance(v, int) for _, _, v in m.items()):
            raise LinalgError("smith_normal_form needs an integer matrix")
    rows, cols = m.rows, m.cols
    A = m.to_rows()
    U = [[int(i == j) for j in range(rows)] for i in range(rows)]
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, c):  # row dst += c * row src
        A[dst] = [a + c * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + c * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, c):
        for r in A:
            r[dst] += c * r[src]
        for r in V:
            r[dst] += c * r[src]

    t = 0
    while t < min(rows, cols):
        nz = [(abs(A[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if A[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, rows):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    add_row(i, t, -q)
                    if A[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, cols):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    add_col(j, t, -q)
                    if A[t][j]:
                        swap_cols(t, j)
                        done = False
            if not done:
                continue
            # divisibility: pivot must divide the rest of the block
            bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                        if A[i][j] % A[t][t]), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    return SmithForm(Matrix.from_rows(U, rows, INTEGER), Matrix.from_rows(A, cols, INTEGER),
                     Matrix.from_rows(V, cols, INTEGER))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CohomologyStep:
    betti: int
    torsion: tuple[int, ...]
    representatives: Matrix  # columns: cocycles spanning a complement of coboundaries


def cohomology_step(d_in: Matrix, d_out: Matrix, ring: str = RATIONAL) -> CohomologyStep:
    """Cohomology at the middle of ``C^{n-1} --d_in--> C^n --d_out--> C^{n+1}``."""
    if d_in.rows != d_out.cols:
        raise LinalgError(f"incomposable differentials {d_in.shape}, {d_out.shape}")
    if not (d_out @ d_in).is_zero():
        raise LinalgError("d_out . d_in != 0")
    z = kernel_basis(d_out)
    b = image_basis(d_in)
    reps = z.submatrix(range(z.rows), complement_columns(b, z))
    torsion: tuple[int, ...] = ()
    if ring == INTEGER:
        torsion = tuple(f for f in smith_normal_form(d_in.with_ring(INTEGER)).invariant_factors if f > 1)
    return CohomologyStep(reps.cols, torsion, reps)


def vector(values: Iterable) -> dict:
    """Dense list to sparse dict."""
    return {i: scalar(v) for i, v in enumerate(values) if v}
