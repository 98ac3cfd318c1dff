import random

import pytest
from hypothesis import given, settings, strategies as st

from treelap.gf2 import Gf2Vec
from treelap.treesys import (
    BranchSet,
    FiniteTree,
    TreeError,
    TreeSystem,
    branch_set,
    is_usable,
    overlap_count,
    overlap_points,
    rich_deltas,
)

from oracles import overlap_intersection


def V(s):
    return Gf2Vec.from_string(s)


def single_tree_system(n, *fronts):
    trees = tuple(FiniteTree.from_front(n, [V(s) for s in f]) for f in fronts)
    return TreeSystem(n, trees, tuple(n for _ in fronts))


def test_tree_from_nodes_validates():
    t = FiniteTree.from_node_strings(2, ["", "0", "00"])
    assert {v.to_string() for v in t.front} == {"00"}
    with pytest.raises(TreeError):
        FiniteTree.from_node_strings(2, ["", "00"])  # missing "0"
    with pytest.raises(TreeError):
        FiniteTree.from_node_strings(2, ["", "0", "00", "1"])  # short maximal node
    with pytest.raises(TreeError):
        FiniteTree.from_front(2, [])


def test_branch_set_examples():
    ts = single_tree_system(2, ["00"])
    assert {v.to_string() for v in branch_set(ts).vectors} == {"00"}
    ts2 = single_tree_system(2, ["00"], ["11"])
    assert {v.to_string() for v in branch_set(ts2).vectors} == {"00", "11"}


def test_overlap_count_examples():
    ts = single_tree_system(2, ["00"], ["11"])
    b = branch_set(ts)
    assert overlap_count(b, V("00")) == 2  # delta 0: |B|
    assert overlap_count(b, V("11")) == 2  # 00+11 and 11+11 both land in B


def test_overlap_count_against_set_oracle():
    rng = random.Random(99)
    for _ in range(50):
        vecs = {Gf2Vec(6, rng.getrandbits(6)) for _ in range(rng.randint(1, 12))}
        b = BranchSet(6, frozenset(vecs))
        rho0 = Gf2Vec(6, rng.getrandbits(6))
        rho1 = Gf2Vec(6, rng.getrandbits(6))
        delta = rho0 + rho1
        assert overlap_count(b, delta) == len(overlap_intersection(b, rho0, rho1))
        # the witness points are exactly the branches meeting the translate
        pts = overlap_points(b, delta)
        assert len(pts) == overlap_count(b, delta)
        assert all(x in b.vectors and x + delta in b.vectors for x in pts)


@settings(max_examples=40)
@given(st.sets(st.integers(0, 31), min_size=1, max_size=10), st.integers(0, 31), st.integers(0, 31))
def test_overlap_count_translation_invariant(bits, delta_bits, c_bits):
    b = BranchSet(5, frozenset(Gf2Vec(5, x) for x in bits))
    shifted = BranchSet(5, frozenset(Gf2Vec(5, x ^ c_bits) for x in bits))
    delta = Gf2Vec(5, delta_bits)
    assert overlap_count(b, delta) == overlap_count(shifted, delta)


def test_usable_trivial_cases():
    # singleton branch set: pairwise meets of size <= 1 < 2*iota
    ts = single_tree_system(4, ["0000"])
    assert is_usable(ts, 2) is None
    # fewer than 2*iota branches can never be usable
    ts2 = single_tree_system(4, ["0000", "1111"], ["1100"])
    assert is_usable(ts2, 2) is None


def test_usable_on_seed_layout():
    from treelap.builder import seed_condition
    from treelap.ordinals import parse
    from treelap.yzr import CuteChain, flat_system

    chain = CuteChain(parse("w*1"))
    chain.embed(flat_system(range(3), parse("w*1")), floor=0)
    p = seed_condition(2, chain)
    triple = is_usable(p.ts, 2)
    assert triple is not None
    r0, r1, r2 = triple
    b = branch_set(p.ts)
    for x, y in [(r0, r1), (r0, r2), (r1, r2)]:
        assert overlap_count(b, x + y) >= 4
    # the eta witnesses work as well: each pair contributes 2*iota meets
    for a in range(3):
        for c in range(a + 1, 3):
            assert overlap_count(b, p.eta[a] + p.eta[c]) >= 4
    # branch set equals the g-value table per the front-exhaustion clause
    assert {v.bits for v in b.vectors} == {v.bits for v in p.g.values()}


def test_usable_monotone_under_added_branches():
    rng = random.Random(4)
    for _ in range(25):
        n = 4
        front0 = {Gf2Vec(n, rng.getrandbits(n)) for _ in range(rng.randint(2, 6))}
        ts = TreeSystem(n, (FiniteTree.from_front(n, front0),), (n,))
        if is_usable(ts, 2) is None:
            continue
        bigger = front0 | {Gf2Vec(n, rng.getrandbits(n)) for _ in range(3)}
        ts2 = TreeSystem(n, (FiniteTree.from_front(n, bigger),), (n,))
        assert is_usable(ts2, 2) is not None


def test_rich_deltas_sorted_and_correct():
    ts = single_tree_system(3, ["000", "110", "011", "101"])
    b = branch_set(ts)
    deltas = rich_deltas(b, 2)
    assert deltas == sorted(deltas)
    for d in deltas:
        assert overlap_count(b, d) >= 4
        assert not d.is_zero


def test_widths_validated():
    with pytest.raises(TreeError):
        TreeSystem(3, (FiniteTree.from_front(3, [V("000")]),), (4,))
    with pytest.raises(TreeError):
        TreeSystem(3, (FiniteTree.from_front(3, [V("000")]),), (0,))


def test_truncate_round_trip():
    ts = single_tree_system(4, ["0011", "1100"], ["1010"])
    t2 = ts.truncate(2)
    assert t2.n == 2
    assert {v.to_string() for v in t2.trees[0].front} == {"00", "11"}
    assert t2.widths == (2, 2)
