"""Cochain complexes, chain maps, cohomology bases and mapping cones."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .linalg import (
    RATIONAL,
    LinalgError,
    Matrix,
    block,
    cohomology_step,
    complement_columns,
    hstack,
    image_basis,
    rank,
    solve,
)


class ComplexError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Complex:
    """A bounded cochain complex.

    ``dims[n]`` is the dimension in degree n (missing degrees are 0) and
    ``d[n]`` is the differential ``C^{n-1} -> C^n``.  ``labels[n]`` names the
    basis vectors of degree n.
    """

    dims: Mapping[int, int]
    d: Mapping[int, Matrix]
    labels: Mapping[int, tuple] = field(default_factory=dict)
    ring: str = RATIONAL

    def __post_init__(self):
        dims = {n: k for n, k in self.dims.items() if k}
        object.__setattr__(self, "dims", dims)
        for n, m in self.d.items():
            if m.shape != (self.dim(n), self.dim(n - 1)):
                raise ComplexError(f"d^{n} has shape {m.shape}, expected {(self.dim(n), self.dim(n - 1))}")
        for n, lab in self.labels.items():
            if len(lab) != self.dim(n):
                raise ComplexError(f"degree {n}: {len(lab)} labels for dimension {self.dim(n)}")

    def dim(self, n: int) -> int:
        return self.dims.get(n, 0)

    def diff(self, n: int) -> Matrix:
        m = self.d.get(n)
        if m is None:
            return Matrix.zeros(self.dim(n), self.dim(n - 1))
        return m

    @property
    def degrees(self) -> range:
        if not self.dims:
            return range(0)
        return range(min(self.dims), max(self.dims) + 1)

    def label_index(self, n: int) -> dict:
        return self._label_index.setdefault(n, {lab: i for i, lab in enumerate(self.labels.get(n, ()))})

    @cached_property
    def _label_index(self) -> dict:
        return {}

    def check(self) -> list[int]:
        """Degrees n where d^{n+1} d^n != 0."""
        bad = []
        for n in self.degrees:
            if not (self.diff(n + 1) @ self.diff(n)).is_zero():
                bad.append(n)
        return bad

    def euler_characteristic(self) -> int:
        return sum((-1) ** n * k for n, k in self.dims.items())

    @cached_property
    def _ranks(self) -> dict:
        return {n: rank(m) for n, m in self.d.items()}

    def diff_rank(self, n: int) -> int:
        return self._ranks.get(n, 0)

    def betti(self, n: int) -> int:
        return self.dim(n) - self.diff_rank(n + 1) - self.diff_rank(n)

    def bettis(self) -> dict[int, int]:
        return {n: self.betti(n) for n in self.degrees}

    def is_acyclic(self) -> bool:
        return all(self.betti(n) == 0 for n in self.degrees)

    def subcomplex(self, indices: Mapping[int, list[int]]) -> Complex:
        """Complex on the given coordinates; caller guarantees d-closure."""
        dims = {n: len(ix) for n, ix in indices.items()}
        d = {}
        for n in indices:
            if n - 1 in indices and self.d.get(n) is not None:
                d[n] = self.d[n].submatrix(indices[n], indices[n - 1])
        labels = {n: tuple(self.labels[n][i] for i in ix) for n, ix in indices.items() if n in self.labels}
        return Complex(dims, d, labels, self.ring)


def direct_sum(a: Complex, b: Complex, tags=("a", "b")) -> Complex:
    degs = set(a.dims) | set(b.dims)
    dims = {n: a.dim(n) + b.dim(n) for n in degs}
    d = {}
    for n in degs:
        if n - 1 in degs:
            d[n] = block([[a.diff(n), Matrix.zeros(a.dim(n), b.dim(n - 1))],
                          [Matrix.zeros(b.dim(n), a.dim(n - 1)), b.diff(n)]])
    labels = {n: tuple((tags[0], l) for l in a.labels.get(n, ())) + tuple((tags[1], l) for l in b.labels.get(n, ()))
              for n in degs}
    return Complex(dims, d, labels)


@dataclass(frozen=True, eq=False)
class ChainMap:
    """``maps[n]: source^n -> target^{n+shift}``."""

    source: Complex
    target: Complex
    maps: Mapping[int, Matrix]
    shift: int = 0
    name: str = ""

    def __post_init__(self):
        for n, m in self.maps.items():
            want = (self.target.dim(n + self.shift), self.source.dim(n))
            if m.shape != want:
                raise ComplexError(f"{self.name or 'map'} degree {n}: shape {m.shape}, expected {want}")

    def at(self, n: int) -> Matrix:
        m = self.maps.get(n)
        if m is None:
            return Matrix.zeros(self.target.dim(n + self.shift), self.source.dim(n))
        return m

    @property
    def degrees(self) -> range:
        lo = min([*self.source.degrees, *(n - self.shift for n in self.target.degrees)], default=0)
        hi = max([*self.source.degrees, *(n - self.shift for n in self.target.degrees)], default=-1)
        return range(lo, hi + 1)

    def defects(self) -> list[int]:
        """Degrees n where d_target f_n != f_{n+1} d_source."""
        s = self.shift
        return [n for n in self.degrees
                if self.target.diff(n + s + 1) @ self.at(n) != self.at(n + 1) @ self.source.diff(n + 1)]

    def is_chain_map(self) -> bool:
        return not self.defects()

    def compose(self, first: ChainMap) -> ChainMap:
        """self o first."""
        maps = {n: self.at(n + first.shift) @ first.at(n) for n in first.degrees}
        return ChainMap(first.source, self.target, maps, first.shift + self.shift)


def mapping_cone(f: ChainMap) -> Complex:
    """cone^n = target^n (+) source^{n+1-shift}, d(b, a) = (d b + f a, -d a)."""
    if not f.is_chain_map():
        raise ComplexError(f"{f.name or 'map'} does not commute with differentials")
    A, B, s = f.source, f.target, f.shift
    degs = set(B.dims) | {n - 1 + s for n in A.dims}
    if not degs:
        return Complex({}, {})
    lo, hi = min(degs), max(degs)
    dims = {n: B.dim(n) + A.dim(n + 1 - s) for n in range(lo, hi + 1)}
    d = {}
    for n in range(lo + 1, hi + 1):
        d[n] = block([[B.diff(n), f.at(n - s)],
                      [Matrix.zeros(A.dim(n + 1 - s), B.dim(n - 1)), -A.diff(n + 1 - s)]])
    return Complex(dims, d)


@dataclass(frozen=True)
class ConeCertificate:
    name: str
    cone_bettis: dict
    quasi_isomorphism: bool

    def to_dict(self) -> dict:
        return {"map": self.name, "cone_bettis": {str(k): v for k, v in sorted(self.cone_bettis.items())},
                "verdict": "quasi-isomorphism" if self.quasi_isomorphism else "not a quasi-isomorphism"}


def is_quasi_iso(f: ChainMap) -> ConeCertificate:
    cone = mapping_cone(f)
    bettis = cone.bettis()
    return ConeCertificate(f.name, bettis, all(b == 0 for b in bettis.values()))


class CohomologyBasis:
    """Deterministic cocycle representatives and coordinates in cohomology."""

    def __init__(self, cx: Complex):
        self.cx = cx
        self._reps: dict[int, Matrix] = {}
        self._bound: dict[int, Matrix] = {}

    def reps(self, n: int) -> Matrix:
        if n not in self._reps:
            step = cohomology_step(self.cx.diff(n), self.cx.diff(n + 1))
            self._reps[n] = step.representatives
        return self._reps[n]

    def boundaries(self, n: int) -> Matrix:
        if n not in self._bound:
            self._bound[n] = image_basis(self.cx.diff(n))
        return self._bound[n]

    def dim(self, n: int) -> int:
        return self.reps(n).cols

    def coords(self, n: int, cocycles: Matrix) -> Matrix:
        """Coordinates of cocycle columns in the representative basis."""
        r = self.reps(n)
        if cocycles.cols == 0:
            return Matrix.zeros(r.cols, 0)
        sol = solve(hstack([r, self.boundaries(n)]), cocycles)
        if sol is None:
            raise LinalgError(f"degree {n}: vectors are not cocycles of this complex")
        return sol.submatrix(range(r.cols), range(cocycles.cols))


def induced_on_cohomology(f: ChainMap, src: CohomologyBasis, tgt: CohomologyBasis, n: int) -> Matrix:
    """Matrix of H^n(source) -> H^{n+shift}(target) in representative bases."""
    return tgt.coords(n + f.shift, f.at(n) @ src.reps(n))


def complement_reps(base: Matrix, cand: Matrix) -> Matrix:
    """Columns of ``cand`` that extend the span of ``base``."""
    return cand.submatrix(range(cand.rows), complement_columns(base, cand))
