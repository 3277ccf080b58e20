import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bundlecoh.poset import (
    Poset,
    PosetError,
    SubposetView,
    antichain,
    boolean_lattice,
    chain_poset,
    complement_up_set,
    find_admissible_witness,
    is_admissible_at,
    is_recursively_admissible,
    random_poset,
    relative_up_set,
    unique_minimum,
    up_set,
    validate_poset,
)
from bundlecoh.fixtures import random_admissible_base
from oracles import brute_chains, closure, natural_posets, oracle_recursively_admissible, reduction


def vee():
    return validate_poset(["0", "a", "b"], [("0", "a"), ("0", "b")])


def named(P, chain):
    return tuple(P.names[i] for i in chain)


def test_validate_poset_examples():
    P = validate_poset(["a"], [])
    assert len(P) == 1 and not P.covers
    with pytest.raises(PosetError, match="cycle"):
        validate_poset(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(PosetError, match=r"redundant cover \('a', 'c'\)"):
        validate_poset(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])
    with pytest.raises(PosetError):
        validate_poset(["a", "a"], [])


def test_leq_examples():
    C = validate_poset(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert C.leq(C.index("a"), C.index("c"))
    assert not C.leq(C.index("c"), C.index("a"))
    B = boolean_lattice(2)
    assert not B.leq(B.index("{1}"), B.index("{2}"))


def test_chain_examples():
    C = validate_poset(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert [named(C, c) for c in C.chains(0)] == [("a",), ("b",), ("c",)]
    assert [named(C, c) for c in C.chains(1)] == [("a", "b"), ("a", "c"), ("b", "c")]
    B = boolean_lattice(2)
    assert [named(B, c) for c in B.chains(2)] == [("{}", "{1}", "{1,2}"), ("{}", "{2}", "{1,2}")]
    assert B.chains(3) == ()


def test_up_sets_examples():
    B = boolean_lattice(2)
    x = B.index("{1}")
    assert set(up_set(B, x).names()) == {"{1}", "{1,2}"}
    assert set(complement_up_set(B, x).names()) == {"{}", "{2}"}
    assert relative_up_set(B, x, B.index("{2}")).names() == ("{1,2}",)


def test_unique_minimum_examples():
    B = boolean_lattice(2)
    v = relative_up_set(B, B.index("{1}"), B.index("{2}"))
    assert B.names[unique_minimum(v)] == "{1,2}"
    assert unique_minimum(SubposetView(B, ())) is None
    A = antichain(2)
    assert unique_minimum(SubposetView(A, (0, 1))) is None


def test_admissible_at_examples():
    B = boolean_lattice(2)
    assert is_admissible_at(B, B.index("{1}"))
    V = vee()
    assert not is_admissible_at(V, V.index("a"))
    C = chain_poset(3)
    assert is_admissible_at(C, 1)
    with pytest.raises(PosetError):
        is_admissible_at(antichain(2), 1)
    assert B.names[find_admissible_witness(B)] == "{1}"


def test_recursive_admissibility_examples():
    assert is_recursively_admissible(chain_poset(2))[0]
    assert is_recursively_admissible(chain_poset(1))[0]
    for n in range(1, 5):
        ok, tree = is_recursively_admissible(boolean_lattice(n))
        assert ok
        leaves = [d for d in tree.nodes() if d.is_leaf]
        assert len(leaves) == 2 ** n
    assert not is_recursively_admissible(vee())[0]


def test_generators():
    B = boolean_lattice(2)
    assert len(B) == 4 and len(B.covers) == 4
    C = chain_poset(3)
    assert len(C) == 3 and len(C.covers) == 2
    assert random_poset(6, 0.3, 42) == random_poset(6, 0.3, 42)


def random_orders():
    @st.composite
    def build(draw):
        n = draw(st.integers(1, 6))
        rel = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))
        rel = {(u, v) for u, v in rel if u < v}
        perm = draw(st.permutations(range(n)))
        return n, {(perm[u], perm[v]) for u, v in rel}
    return build()


@given(random_orders())
def test_closure_and_covers_match_oracle(data):
    n, rel = data
    order = closure(n, rel)
    P = Poset.from_order(tuple(str(i) for i in range(n)), rel)
    assert set(P.covers) == reduction(n, order)
    assert {(u, v) for u in range(n) for v in range(n) if P.leq(u, v)} == order


@given(random_orders())
def test_up_set_partition(data):
    n, rel = data
    P = Poset.from_order(tuple(str(i) for i in range(n)), rel)
    for x in P.elements:
        a, b = set(up_set(P, x).members), set(complement_up_set(P, x).members)
        assert not a & b and a | b == set(P.elements)


def test_chain_counts_match_brute_force_on_all_small_posets():
    rng = random.Random(3)
    for n in range(1, 6):
        for order in natural_posets(n):
            # relabel randomly so that ids are not always a linear extension
            perm = list(range(n))
            rng.shuffle(perm)
            order = {(perm[u], perm[v]) for u, v in order}
            P = Poset.from_order(tuple(range(n)), [(u, v) for u, v in order if u != v])
            for k in range(n):
                assert sorted(P.chains(k)) == brute_chains(n, order, k)
                assert list(P.chains(k)) == sorted(P.chains(k))


def test_recursive_admissibility_matches_oracle_on_all_small_posets():
    count = 0
    for n in range(1, 6):
        for order in natural_posets(n):
            P = Poset.from_order(tuple(range(n)), [(u, v) for u, v in order if u != v])
            assert is_recursively_admissible(P)[0] == oracle_recursively_admissible(frozenset(range(n)), order)
            count += 1
    assert count == 1 + 2 + 7 + 40 + 357  # naturally labelled posets on n <= 5 points


def test_witness_tree_is_consistent():
    P = random_admissible_base(6, 11)
    ok, tree = is_recursively_admissible(P)
    assert ok
    for node in tree.nodes():
        if node.is_leaf:
            assert len(node.members) == 1
        else:
            assert set(node.up.members) | set(node.rest.members) == set(node.members)
            assert node.up.members[0] == node.witness or P.leq(node.witness, node.up.members[0])
