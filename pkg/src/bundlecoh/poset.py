"""Finite posets, their nerves, up-sets and the admissibility recognizers."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

Chain = tuple  # strictly increasing tuple of element ids


class PosetError(ValueError):
    pass


@dataclass(frozen=True)
class Poset:
    """A finite poset on ids ``0..n-1`` given by its cover relation.

    ``names`` are display labels (hashable).  Construction validates that the
    covers are acyclic and irredundant; use :meth:`from_order` to build from
    an arbitrary generating relation.
    """

    names: tuple
    covers: frozenset
    _above: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.names)
        if len(set(self.names)) != n:
            raise PosetError("element names must be distinct")
        succ: list[list[int]] = [[] for _ in range(n)]
        for u, v in self.covers:
            if not (0 <= u < n and 0 <= v < n):
                raise PosetError(f"cover ({u}, {v}) references an unknown element")
            if u == v:
                raise PosetError(f"cycle found: {self.names[u]!r} covers itself")
            succ[u].append(v)
        order = _toposort(n, succ)
        if order is None:
            raise PosetError("cycle found in cover relation")
        above: list[frozenset] = [frozenset()] * n
        for u in reversed(order):
            s = {u}
            for v in succ[u]:
                s |= above[v]
            above[u] = frozenset(s)
        for u, v in sorted(self.covers):
            for w in succ[u]:
                if w != v and v in above[w]:
                    raise PosetError(
                        f"redundant cover ({self.names[u]!r}, {self.names[v]!r}): implied via {self.names[w]!r}")
        object.__setattr__(self, "_above", tuple(above))

    @classmethod
    def from_order(cls, names: Sequence[Hashable], relations: Iterable[tuple[int, int]]) -> Poset:
        """Poset generated by ``relations`` (pairs u < v); covers are the reduction."""
        n = len(names)
        succ: list[set[int]] = [set() for _ in range(n)]
        for u, v in relations:
            if u != v:
                succ[u].add(v)
        order = _toposort(n, [sorted(s) for s in succ])
        if order is None:
            raise PosetError("relation has a cycle")
        above: list[set[int]] = [set() for _ in range(n)]
        for u in reversed(order):
            s = {u}
            for v in succ[u]:
                s |= above[v]
            above[u] = s
        covers = set()
        for u in range(n):
            strict = above[u] - {u}
            for v in strict:
                if not any(v in above[w] for w in strict if w != v):
                    covers.add((u, v))
        return cls(tuple(names), frozenset(covers))

    # basic queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.names)

    @property
    def elements(self) -> range:
        return range(len(self.names))

    @cached_property
    def _index(self) -> dict:
        return {name: i for i, name in enumerate(self.names)}

    def index(self, name) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise PosetError(f"unknown element {name!r}") from None

    def leq(self, u: int, v: int) -> bool:
        return v in self._above[u]

    def lt(self, u: int, v: int) -> bool:
        return u != v and v in self._above[u]

    def up(self, x: int) -> frozenset:
        return self._above[x]

    @cached_property
    def _below(self) -> tuple:
        below: list[set[int]] = [set() for _ in self.elements]
        for u in self.elements:
            for v in self._above[u]:
                below[v].add(u)
        return tuple(frozenset(s) for s in below)

    def down(self, x: int) -> frozenset:
        return self._below[x]

    @cached_property
    def sorted_covers(self) -> tuple:
        return tuple(sorted(self.covers))

    @cached_property
    def upper_covers(self) -> tuple:
        out: list[list[int]] = [[] for _ in self.elements]
        for u, v in self.sorted_covers:
            out[u].append(v)
        return tuple(tuple(s) for s in out)

    def minimal(self) -> list[int]:
        return [x for x in self.elements if len(self._below[x]) == 1]

    def bottom(self) -> int | None:
        """The unique minimum ("0"), if any."""
        return unique_minimum(SubposetView(self, tuple(self.elements)))

    def atoms(self) -> list[int]:
        b = self.bottom()
        return [] if b is None else list(self.upper_covers[b])

    # nerve -------------------------------------------------------------

    @cached_property
    def _chains(self) -> tuple:
        by_len: list[list[tuple]] = [[(x,) for x in self.elements]] if len(self) else [[]]
        strict = [sorted(self._above[x] - {x}) for x in self.elements]
        while by_len[-1]:
            nxt = [c + (y,) for c in by_len[-1] for y in strict[c[-1]]]
            by_len.append(nxt)
        return tuple(tuple(sorted(level)) for level in by_len[:-1])

    def chains(self, k: int) -> tuple:
        """All strictly increasing (k+1)-element chains, lexicographic by id."""
        if k < 0 or k >= len(self._chains):
            return ()
        return self._chains[k]

    @property
    def height(self) -> int:
        """Length of the longest chain (number of steps); -1 when empty."""
        return len(self._chains) - 1 if len(self) else -1

    def chain_index(self, k: int) -> dict:
        return self._chain_index[k] if 0 <= k < len(self._chain_index) else {}

    @cached_property
    def _chain_index(self) -> tuple:
        return tuple({c: i for i, c in enumerate(level)} for level in self._chains)

    def chain_names(self, chain: Chain) -> tuple:
        return tuple(self.names[i] for i in chain)


def _toposort(n: int, succ) -> list[int] | None:
    indeg = [0] * n
    for u in range(n):
        for v in succ[u]:
            indeg[v] += 1
    ready = [u for u in range(n) if indeg[u] == 0]
    ready.reverse()
    out = []
    while ready:
        u = ready.pop()
        out.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    return out if len(out) == n else None


def validate_poset(elements: Sequence[Hashable], covers: Iterable[tuple]) -> Poset:
    """Build a poset from element names and cover pairs given by name."""
    names = tuple(elements)
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise PosetError("element names must be distinct")
    ids = set()
    for u, v in covers:
        if u not in index or v not in index:
            raise PosetError(f"cover ({u!r}, {v!r}) references an unknown element")
        ids.add((index[u], index[v]))
    return Poset(names, frozenset(ids))


# ---------------------------------------------------------------------------
# sub-posets


@dataclass(frozen=True)
class SubposetView:
    """A subset of a parent poset with the inherited order."""

    parent: Poset
    members: tuple  # sorted parent ids

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(set(self.members))))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, x: int) -> bool:
        return x in self._member_set

    @cached_property
    def _member_set(self) -> frozenset:
        return frozenset(self.members)

    @cached_property
    def covers(self) -> tuple:
        """Inherited covers as parent-id pairs."""
        P = self.parent
        ms = self.members
        out = []
        for u in ms:
            ups = [v for v in ms if P.lt(u, v)]
            for v in ups:
                if not any(P.lt(w, v) for w in ups if w != v):
                    out.append((u, v))
        return tuple(out)

    @cached_property
    def poset(self) -> Poset:
        """Stand-alone poset (ids renumbered, names kept)."""
        pos = {x: i for i, x in enumerate(self.members)}
        return Poset(tuple(self.parent.names[x] for x in self.members),
                     frozenset((pos[u], pos[v]) for u, v in self.covers))

    def names(self) -> tuple:
        return tuple(self.parent.names[x] for x in self.members)


def up_set(P: Poset, x: int) -> SubposetView:
    """B(x) = {z : x <= z}."""
    return SubposetView(P, tuple(P.up(x)))


def complement_up_set(P: Poset, x: int) -> SubposetView:
    """B(x) complement."""
    up = P.up(x)
    return SubposetView(P, tuple(z for z in P.elements if z not in up))


def relative_up_set(P: Poset, x: int, y: int) -> SubposetView:
    """B(x, y) = {z in B(x) : y <= z}."""
    return SubposetView(P, tuple(P.up(x) & P.up(y)))


def unique_minimum(view: SubposetView) -> int | None:
    P = view.parent
    ms = view.members
    mins = [u for u in ms if not any(P.lt(v, u) for v in ms)]
    if len(mins) != 1:
        return None
    return mins[0]


# ---------------------------------------------------------------------------
# admissibility


def _require_bottom(P: Poset) -> int:
    b = P.bottom()
    if b is None:
        raise PosetError("poset has no global minimum")
    return b


def is_admissible_at(P: Poset, x: int) -> bool:
    """B(x, y) has a unique minimum for every y outside B(x); x must cover 0."""
    b = _require_bottom(P)
    if (b, x) not in P.covers:
        raise PosetError(f"{P.names[x]!r} does not cover the minimum")
    return _admissible_in(P, tuple(P.elements), x)


def _admissible_in(P: Poset, members: tuple, x: int) -> bool:
    up = P.up(x)
    inside = [z for z in members if z in up]
    for y in members:
        if y in up:
            continue
        view = SubposetView(P, tuple(z for z in inside if P.leq(y, z)))
        if unique_minimum(view) is None:
            return False
    return True


def find_admissible_witness(P: Poset) -> int | None:
    b = _require_bottom(P)
    for x in P.upper_covers[b]:
        if _admissible_in(P, tuple(P.elements), x):
            return x
    return None


@dataclass(frozen=True)
class Decomposition:
    """Witness tree for recursive admissibility (ids refer to the root poset)."""

    members: tuple
    witness: int | None = None
    up: Decomposition | None = None
    rest: Decomposition | None = None

    @property
    def is_leaf(self) -> bool:
        return self.witness is None

    def to_dict(self, P: Poset) -> dict:
        out = {"members": [P.names[m] for m in self.members]}
        if self.witness is not None:
            out["witness"] = P.names[self.witness]
            out["up"] = self.up.to_dict(P)
            out["rest"] = self.rest.to_dict(P)
        return out

    def nodes(self):
        yield self
        if self.witness is not None:
            yield from self.up.nodes()
            yield from self.rest.nodes()


def is_recursively_admissible(P: Poset) -> tuple[bool, Decomposition | None]:
    """Recognize recursive admissibility, returning a decomposition tree.

    Singletons are accepted as base cases; otherwise atoms are tried in id
    order and the first one whose split succeeds recursively is the witness.
    The two-element chain decomposes through its atom into two singletons.
    """
    memo: dict[tuple, Decomposition | None] = {}

    def rec(members: tuple) -> Decomposition | None:
        if members in memo:
            return memo[members]
        result = None
        if len(members) == 1:
            result = Decomposition(members)
        elif members:
            bot = unique_minimum(SubposetView(P, members))
            if bot is not None:
                mset = set(members)
                atoms = [z for z in members if P.lt(bot, z)
                         and not any(P.lt(bot, w) and P.lt(w, z) for w in members)]
                for x in atoms:
                    if not _admissible_in(P, members, x):
                        continue
                    up = tuple(z for z in members if P.leq(x, z))
                    rest = tuple(sorted(mset - set(up)))
                    a = rec(up)
                    if a is None:
                        continue
                    r = rec(rest)
                    if r is None:
                        continue
                    result = Decomposition(members, x, a, r)
                    break
        memo[members] = result
        return result

    tree = rec(tuple(P.elements))
    return tree is not None, tree


# ---------------------------------------------------------------------------
# fixture posets


def _subset_name(mask: int) -> str:
    items = [str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1]
    return "{" + ",".join(items) + "}"


def boolean_lattice(n: int) -> Poset:
    """Subsets of {1..n}; element id = bitmask."""
    names = tuple(_subset_name(m) for m in range(1 << n))
    covers = frozenset((m, m | 1 << i) for m in range(1 << n) for i in range(n) if not m >> i & 1)
    return Poset(names, covers)


def chain_poset(n: int) -> Poset:
    return Poset(tuple(str(i) for i in range(n)), frozenset((i, i + 1) for i in range(n - 1)))


def antichain(n: int) -> Poset:
    return Poset(tuple(str(i) for i in range(n)), frozenset())


def random_poset(n: int, density: float, seed: int | random.Random) -> Poset:
    """Random naturally labelled poset: each i < j related with probability density."""
    if not 0 <= density <= 1:
        raise ValueError("density must lie in [0, 1]")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    rel = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return Poset.from_order(tuple(str(i) for i in range(n)), rel)


def with_bottom(P: Poset, name="0'") -> Poset:
    """Adjoin a new global minimum (placed first)."""
    names = (name,) + tuple(P.names)
    rel = [(0, i + 1) for i in P.elements] + [(u + 1, v + 1) for u, v in P.covers]
    return Poset.from_order(names, rel)
