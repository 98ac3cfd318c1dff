import itertools
import random

import pytest

from treelap.gf2 import Gf2Vec
from treelap.overlap import (
    OverlapError,
    OverlapStructure,
    check_membership,
    enumerate_extensions,
    enumerate_universe,
    essentially_extends,
    essentially_same,
    extends,
    in_bounded_universe,
    ndrk,
    witness_from_family,
)
from treelap.treesys import FiniteTree, TreeSystem, branch_set

from oracles import clause_f_joint_search, ndrk_fixpoint


def V(s):
    return Gf2Vec.from_string(s)


def pair_system(n=4):
    """Two points, two meeting indices, one tree per index."""
    e0, e1 = Gf2Vec.basis(0, n), Gf2Vec.basis(1, n)
    r0, r1 = Gf2Vec.basis(2, n), Gf2Vec.basis(3, n)
    t0 = FiniteTree.from_front(n, [e0 + r0, e1 + r0])
    t1 = FiniteTree.from_front(n, [e0 + r1, e1 + r1])
    ts = TreeSystem(n, (t0, t1), (n, n))
    h, g = {}, {}
    for i, rho in enumerate([r0, r1]):
        h[(e0, e1, i)] = i
        h[(e1, e0, i)] = i
        g[(e0, e1, i)] = e0 + rho
        g[(e1, e0, i)] = e1 + rho
    return ts, OverlapStructure(n, 2, [e0, e1], h, g)


def truncate(m, level):
    h = {(a.prefix(level), b.prefix(level), i): v for (a, b, i), v in m._h.items()}
    g = {(a.prefix(level), b.prefix(level), i): v.prefix(level) for (a, b, i), v in m._g.items()}
    return OverlapStructure(level, m.iota, [v.prefix(level) for v in m.u], h, g)


def test_membership_accepts_valid_pair():
    ts, m = pair_system()
    res = check_membership(m, ts)
    assert res.ok and res.witness_f is not None


def test_membership_rejects_broken_identity():
    ts, m = pair_system()
    e0, e1 = m.u
    g = dict(m._g)
    g[(e0, e1, 0)] = g[(e0, e1, 0)] + Gf2Vec.basis(0, m.level)
    bad = OverlapStructure(m.level, 2, m.u, m._h, g)
    res = check_membership(bad, ts)
    assert not res.ok and res.clause in ("c", "d")


def test_membership_rejects_repetition():
    ts, m = pair_system()
    e0, e1 = m.u
    g = dict(m._g)
    h = dict(m._h)
    # make index 1 repeat index 0's meeting nodes
    g[(e0, e1, 1)] = g[(e0, e1, 0)]
    g[(e1, e0, 1)] = g[(e1, e0, 0)]
    h[(e0, e1, 1)] = h[(e0, e1, 0)]
    h[(e1, e0, 1)] = h[(e1, e0, 0)]
    bad = OverlapStructure(m.level, 2, m.u, h, g)
    res = check_membership(bad, ts)
    assert not res.ok and res.clause == "e"


def test_clause_f_agrees_with_joint_search():
    rng = random.Random(12)
    ts, m = pair_system()
    checked = disagreements = 0
    for level in (2, 3):
        mt = truncate(m, level)
        res = check_membership(mt, ts)
        if res.ok or res.clause == "f":
            # clauses (a)-(e) hold, so the verdict is exactly clause (f)
            assert res.ok == clause_f_joint_search(mt, ts)
            checked += 1
    # randomized small structures, valid or not
    for _ in range(60):
        n = 3
        front0 = {Gf2Vec(n, rng.getrandbits(n)) for _ in range(rng.randint(2, 4))}
        front1 = {Gf2Vec(n, rng.getrandbits(n)) for _ in range(rng.randint(2, 4))}
        ts2 = TreeSystem(
            n,
            (FiniteTree.from_front(n, front0), FiniteTree.from_front(n, front1)),
            (1, 1),
        )
        level = rng.randint(1, n)
        u = set()
        while len(u) < 2:
            u.add(Gf2Vec(level, rng.getrandbits(level)))
        u = sorted(u)
        h, g = {}, {}
        ok_build = True
        for x, y in itertools.combinations(u, 2):
            for i in range(2):
                hf, hr = rng.randint(0, 1), rng.randint(0, 1)
                cand_f = sorted(ts2.trees[hf].level(level))
                cand_r = sorted(ts2.trees[hr].level(level))
                gf = rng.choice(cand_f)
                gr = gf + x + y
                if gr not in cand_r:
                    ok_build = False
                    break
                h[(x, y, i)] = hf
                h[(y, x, i)] = hr
                g[(x, y, i)] = gf
                g[(y, x, i)] = gr
            if not ok_build:
                break
        if not ok_build:
            continue
        m2 = OverlapStructure(level, 2, u, h, g)
        got = check_membership(m2, ts2)
        want_e = all(
            len({m2.g(x, y, i).bits for i in range(2)} | {m2.g(y, x, i).bits for i in range(2)}) == 4
            for x, y in itertools.combinations(u, 2)
        )
        if not want_e:
            assert not got.ok
            continue
        want = clause_f_joint_search(m2, ts2)
        checked += 1
        if got.ok != want:
            disagreements += 1
    assert checked >= 20
    assert disagreements == 0


def test_translate_group_behaviour():
    ts, m = pair_system()
    m3 = truncate(m, 3)
    zero = Gf2Vec.zero(3)
    assert m3.translate(zero) == m3
    rho = V("101")
    assert m3.translate(rho).translate(rho) == m3
    assert check_membership(m3.translate(rho), ts).ok  # membership preserved
    long_rho = V("10110")
    assert m3.translate(long_rho) == m3.translate(long_rho.prefix(3))


def test_extends_examples():
    ts, m = pair_system()
    m3 = truncate(m, 3)
    assert extends(m, m)  # reflexive
    assert extends(m, m3)
    assert not extends(m3, m)
    h = dict(m._h)
    e0, e1 = m.u
    h[(e0, e1, 0)] = 1 - h[(e0, e1, 0)]
    perturbed = OverlapStructure(m.level, 2, m.u, h, m._g)
    assert not extends(perturbed, m3)


def test_essential_relations():
    ts, m = pair_system()
    assert essentially_same(m, m)
    e0, e1 = m.u
    h_sw = {(a, b, i): m._h[(a, b, 1 - i)] for (a, b, i) in m._h}
    g_sw = {(a, b, i): m._g[(a, b, 1 - i)] for (a, b, i) in m._g}
    swapped = OverlapStructure(m.level, 2, m.u, h_sw, g_sw)
    assert essentially_same(m, swapped) and m != swapped
    m3 = truncate(m, 3)
    assert essentially_extends(m, m3)
    assert essentially_extends(swapped, m3)  # order-free at the lower level


def test_extends_implies_essentially_extends_on_corpus():
    ts, m = pair_system()
    for level in (1, 2, 3):
        m_low = truncate(m, level)
        if check_membership(m_low, ts).ok:
            assert extends(m, m_low) == True
            assert essentially_extends(m, m_low)


def test_restrict():
    ts, m = pair_system()
    assert m.restrict(m.u) == m
    with pytest.raises(OverlapError):
        m.restrict(m.u[:1])
    three = three_point_structure()
    ts3, m3 = three
    sub = m3.restrict(m3.u[:2])
    assert check_membership(sub, ts3).ok


def three_point_structure(n=9):
    e = [Gf2Vec.basis(i, n) for i in range(3)]
    rhos = {}
    h, g = {}, {}
    fronts = {}
    idx = 0
    for a, b in itertools.combinations(range(3), 2):
        for i in range(2):
            rho = Gf2Vec.basis(3 + idx, n)
            fronts[idx] = {e[a] + rho, e[b] + rho}
            h[(e[a], e[b], i)] = idx
            h[(e[b], e[a], i)] = idx
            g[(e[a], e[b], i)] = e[a] + rho
            g[(e[b], e[a], i)] = e[b] + rho
            idx += 1
    trees = tuple(FiniteTree.from_front(n, fronts[i]) for i in range(idx))
    ts = TreeSystem(n, trees, tuple(n for _ in range(idx)))
    return ts, OverlapStructure(n, 2, e, h, g)


def test_witness_from_family():
    ts, m = pair_system()
    etas = list(m.u)
    w = witness_from_family(etas, ts, 4, 2)
    assert w is not None and check_membership(w, ts).ok
    w3 = witness_from_family(etas, ts, 3, 2)
    assert w3 is not None and check_membership(w3, ts).ok
    assert witness_from_family(etas, ts, 1, 2) is None  # u collapses
    with pytest.raises(OverlapError):
        witness_from_family([m.u[0], m.u[0]], ts, 4, 2)
    # under-overlapping family rejected at the precondition
    ts_small = TreeSystem(4, (FiniteTree.from_front(4, [V("0011")]),), (4,))
    with pytest.raises(OverlapError):
        witness_from_family([V("1000"), V("0100")], ts_small, 4, 2)


def test_ndrk_full_level_is_zero():
    ts, m = pair_system()
    out = ndrk(m, ts, cap_u=4)
    assert out.value == 0 and not out.cap_limited


def test_ndrk_cap_flag():
    ts, m = pair_system()
    m3 = truncate(m, 3)
    out = ndrk(m3, ts, cap_u=2)  # no split can fit under the cap
    assert out.value == 0 and out.cap_limited


def test_ndrk_always_nonnegative_and_in_universe():
    ts, m = pair_system()
    assert in_bounded_universe(m, ts)
    assert ndrk(m, ts, cap_u=3).value >= 0
    free_h = dict(m._h)
    e0, e1 = m.u
    free_h[(e0, e1, 0)] = 7  # outside the bounded family
    loose = OverlapStructure(m.level, 2, m.u, free_h, m._g)
    assert not in_bounded_universe(loose, ts)
    with pytest.raises(OverlapError):
        ndrk(loose, ts, cap_u=3)


def tiny_rank_system():
    """One tree of sibling pairs: a small all-rank-zero universe."""
    n = 3
    f0 = [V("000"), V("001"), V("010"), V("011")]
    return TreeSystem(n, (FiniteTree.from_front(n, f0),), (1,))


def positive_rank_system():
    """Six branches over two trees admitting rank-1 structures at level 2.

    The sibling pairs 000/001 and 010/011 supply the split meeting nodes
    and the branches 100, 111 close the continuation triangles.
    """
    n = 3
    f0 = [V("000"), V("001"), V("010"), V("011")]
    f1 = [V("100"), V("111")]
    return TreeSystem(
        n, (FiniteTree.from_front(n, f0), FiniteTree.from_front(n, f1)), (1, 1)
    )


def test_memoized_rank_equals_fixpoint_oracle_small():
    ts = tiny_rank_system()
    universe = enumerate_universe(ts, 2, cap_u=3)
    assert universe
    oracle = ndrk_fixpoint(universe, ts.n)
    memo = {}
    for m, want in zip(universe, oracle):
        got = ndrk(m, ts, cap_u=3, _memo=memo)
        assert got.value == want, (m, got.value, want)


def test_positive_rank_reached_and_matches_oracle_sample():
    ts = positive_rank_system()
    universe = enumerate_universe(ts, 2, cap_u=3, levels=[2])
    memo = {}
    positives = [
        m for m in universe if ndrk(m, ts, cap_u=3, _memo=memo).value >= 1
    ]
    assert positives, "instance too poor: no positive ranks reached"


def test_one_level_step_conditional_property():
    """Rank >= a+1 gives a one-level extension of rank >= a when the
    intermediate truncation stays in the family."""
    ts = positive_rank_system()
    universe = enumerate_universe(ts, 2, cap_u=3, levels=[2])
    memo = {}
    applicable = 0
    for m in universe:
        r = ndrk(m, ts, cap_u=3, _memo=memo).value
        if r < 1 or m.level + 1 > ts.n:
            continue
        applicable += 1
        ok_here = False
        for nu in m.u:
            for n2 in enumerate_extensions(m, nu, ts, cap_u=3):
                if n2.level == m.level + 1 and ndrk(n2, ts, cap_u=3, _memo=memo).value >= r - 1:
                    ok_here = True
                    break
            if ok_here:
                break
        assert ok_here, (m, r)
    assert applicable > 0
