"""Level-l overlap structures over a tree system and their rank.

A structure records, for a set u of length-l vectors, which trees (h) and
which nodes (g) witness that the translations indexed by u meet pairwise.
Membership in the ambient family asks for the axioms (a)-(e) plus the
extendability clause (f): branch continuations F, G realising the meeting
identities at full depth.  Clause (f) is decided by a difference-potential
solver: only differences F(eta)+F(nu) are constrained, so fixing a base
point and propagating along a spanning forest replaces the joint
enumeration of all (F, G) assignments.

The non-disjointness rank is computed exactly over the finite universe of
structures with level <= n, tree indices < M and |u| <= cap_u.  Every
proper rank step strictly increases the level, so ranks here are naturals
<= n; each value is a certified lower bound for the rank of the same
structure over the unbounded family (any witness chain in the finite
universe is a witness chain there).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .gf2 import Gf2Vec
from .treesys import TreeSystem, branch_set, overlap_points


class OverlapError(ValueError):
    pass


PairKey = Tuple[Gf2Vec, Gf2Vec, int]


def _freeze_table(table: Mapping[PairKey, object]) -> Tuple:
    return tuple(sorted(table.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])))


class OverlapStructure:
    """m = (level, u, h, g) with h, g keyed by (eta, nu, i) for eta != nu."""

    __slots__ = ("level", "iota", "u", "_h", "_g", "_key")

    def __init__(
        self,
        level: int,
        iota: int,
        u: Iterable[Gf2Vec],
        h: Mapping[PairKey, int],
        g: Mapping[PairKey, Gf2Vec],
    ):
        self.level = level
        self.iota = iota
        self.u: Tuple[Gf2Vec, ...] = tuple(sorted(set(u)))
        self._h: Dict[PairKey, int] = dict(h)
        self._g: Dict[PairKey, Gf2Vec] = dict(g)
        self._key = None
        if len(self.u) < 2:
            raise OverlapError("|u| must be at least 2")
        for v in self.u:
            if v.length != level:
                raise OverlapError(f"u element {v} not of length {level}")
        for eta, nu in self.pairs():
            for i in range(iota):
                if (eta, nu, i) not in self._h or (eta, nu, i) not in self._g:
                    raise OverlapError(f"tables not total at ({eta},{nu},{i})")
                if self._g[(eta, nu, i)].length != level:
                    raise OverlapError("g value has wrong length")

    def pairs(self) -> Iterator[Tuple[Gf2Vec, Gf2Vec]]:
        for eta in self.u:
            for nu in self.u:
                if eta != nu:
                    yield (eta, nu)

    def unordered_pairs(self) -> Iterator[Tuple[Gf2Vec, Gf2Vec]]:
        for i, eta in enumerate(self.u):
            for nu in self.u[i + 1 :]:
                yield (eta, nu)

    def h(self, eta: Gf2Vec, nu: Gf2Vec, i: int) -> int:
        return self._h[(eta, nu, i)]

    def g(self, eta: Gf2Vec, nu: Gf2Vec, i: int) -> Gf2Vec:
        return self._g[(eta, nu, i)]

    def h_values(self) -> FrozenSet[int]:
        return frozenset(self._h.values())

    def canonical_key(self) -> Tuple:
        """Key invariant under nothing but representation; see canonical()."""
        if self._key is None:
            self._key = (
                self.level,
                self.iota,
                tuple(v.bits for v in self.u),
                tuple(
                    (e.bits, n.bits, i, m)
                    for (e, n, i), m in _freeze_table(self._h)
                ),
                tuple(
                    (e.bits, n.bits, i, val.bits)
                    for (e, n, i), val in _freeze_table(self._g)
                ),
            )
        return self._key

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OverlapStructure):
            return NotImplemented
        return self.canonical_key() == other.canonical_key()

    def __hash__(self) -> int:
        return hash(self.canonical_key())

    def __repr__(self) -> str:
        return (
            f"OverlapStructure(level={self.level}, iota={self.iota}, "
            f"u={[str(v) for v in self.u]})"
        )

    # --- operations ---

    def translate(self, rho: Gf2Vec) -> "OverlapStructure":
        """m + rho; for longer rho the restriction to the level is used."""
        if rho.length < self.level:
            raise OverlapError("translation vector shorter than level")
        rho = rho.prefix(self.level)
        h = {(e + rho, n + rho, i): m for (e, n, i), m in self._h.items()}
        g = {(e + rho, n + rho, i): v for (e, n, i), v in self._g.items()}
        return OverlapStructure(self.level, self.iota, (v + rho for v in self.u), h, g)

    def restrict(self, u_sub: Iterable[Gf2Vec]) -> "OverlapStructure":
        keep = set(u_sub)
        if not keep <= set(self.u):
            raise OverlapError("restriction set is not a subset of u")
        if len(keep) < 2:
            raise OverlapError("restriction needs at least 2 elements")
        h = {k: v for k, v in self._h.items() if k[0] in keep and k[1] in keep}
        g = {k: v for k, v in self._g.items() if k[0] in keep and k[1] in keep}
        return OverlapStructure(self.level, self.iota, keep, h, g)

    def canonical(self) -> "OverlapStructure":
        """Translate so the lex-least element of u becomes the zero vector.

        Rank is translation invariant, so this canonical form indexes the
        memo table (a 2^level-fold reduction of the state space).
        """
        base = self.u[0]
        if base.is_zero:
            return self
        return self.translate(base)


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


@dataclass
class MembershipResult:
    ok: bool
    clause: Optional[str] = None
    detail: str = ""
    witness_f: Optional[Dict[Gf2Vec, Gf2Vec]] = None
    witness_g: Optional[Dict[PairKey, Gf2Vec]] = None

    def __bool__(self) -> bool:
        return self.ok


def _level_nodes_ext(ts: TreeSystem, m_index: int, level: int) -> Optional[FrozenSet[Gf2Vec]]:
    """Level slice of the zero-extended tree; None for indices >= M (full tree)."""
    if m_index >= ts.count:
        return None
    tree = ts.trees[m_index]
    if level <= ts.n:
        return tree.level(level)
    return frozenset(f.pad(level) for f in tree.front)


def _branch_candidates(
    ts: TreeSystem, m_index: int, prefix: Gf2Vec, n_work: int
) -> Optional[List[Gf2Vec]]:
    """Full-depth continuations of ``prefix`` inside tree m; None = free."""
    if m_index >= ts.count:
        return None
    out = [
        f.pad(n_work)
        for f in ts.trees[m_index].front
        if prefix.is_prefix_of(f.pad(n_work))
    ]
    return sorted(out)


_SOLVER_BUDGET = 2_000_000


def _solve_clause_f(
    m: OverlapStructure, ts: TreeSystem
) -> Optional[Tuple[Dict[Gf2Vec, Gf2Vec], Dict[PairKey, Gf2Vec]]]:
    """Find branch continuations (F, G) realising clause (f), or None.

    Only the differences F(eta)+F(nu) are constrained, and only by pairs
    whose tree indices both fall below M.  A spanning forest of those
    constrained pairs is solved by backtracking over the per-edge
    difference sets; everything else is free and filled in afterwards.
    """
    n_work = max(ts.n, m.level)
    if m.level == n_work:
        # At full depth the zero-extensions themselves witness (f): clause
        # (d) is literally the required identity.
        f_map = {eta: eta for eta in m.u}
        g_map = {k: v for k, v in m._g.items()}
        return f_map, g_map

    # Difference constraint sets per unordered pair.
    diff_sets: Dict[Tuple[Gf2Vec, Gf2Vec], List[Gf2Vec]] = {}
    for eta, nu in m.unordered_pairs():
        sets_for_pair: List[set] = []
        for i in range(m.iota):
            fwd = _branch_candidates(ts, m.h(eta, nu, i), m.g(eta, nu, i), n_work)
            rev = _branch_candidates(ts, m.h(nu, eta, i), m.g(nu, eta, i), n_work)
            if fwd is None or rev is None:
                continue
            rev_bits = {y.bits for y in rev}
            options = {x.bits ^ y for x in fwd for y in rev_bits}
            sets_for_pair.append(options)
        if sets_for_pair:
            joint = set.intersection(*sets_for_pair)
            if not joint:
                return None
            diff_sets[(eta, nu)] = sorted(
                Gf2Vec(n_work, b) for b in joint
            )

    # Components of the constrained-pair graph.
    parent: Dict[Gf2Vec, Gf2Vec] = {v: v for v in m.u}

    def find(v: Gf2Vec) -> Gf2Vec:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for eta, nu in diff_sets:
        ra, rb = find(eta), find(nu)
        if ra != rb:
            parent[ra] = rb

    components: Dict[Gf2Vec, List[Gf2Vec]] = {}
    for v in m.u:
        components.setdefault(find(v), []).append(v)

    f_map: Dict[Gf2Vec, Gf2Vec] = {}
    budget = [_SOLVER_BUDGET]

    for members in components.values():
        members = sorted(members)
        root = members[0]
        # BFS spanning tree within the component over constrained edges.
        tree_edges: List[Tuple[Gf2Vec, Gf2Vec]] = []
        seen = {root}
        frontier = [root]
        while frontier:
            nxt = []
            for v in frontier:
                for w in members:
                    if w in seen:
                        continue
                    if (min(v, w), max(v, w)) in diff_sets:
                        seen.add(w)
                        tree_edges.append((v, w))
                        nxt.append(w)
            frontier = nxt
        tree_keys = {(min(x, y), max(x, y)) for x, y in tree_edges}
        non_tree = [
            (a, b) for (a, b) in diff_sets if a in members and (a, b) not in tree_keys
        ]

        assignment: Dict[Gf2Vec, Gf2Vec] = {root: root.pad(n_work)}

        def backtrack(edge_index: int) -> bool:
            budget[0] -= 1
            if budget[0] < 0:
                raise OverlapError("clause (f) solver budget exhausted")
            if edge_index == len(tree_edges):
                for a, b in non_tree:
                    d = assignment[a] + assignment[b]
                    if d not in diff_sets[(a, b)]:
                        return False
                return True
            parent_v, child_v = tree_edges[edge_index]
            key = (min(parent_v, child_v), max(parent_v, child_v))
            for d in diff_sets[key]:
                assignment[child_v] = assignment[parent_v] + d
                if backtrack(edge_index + 1):
                    return True
            del assignment[child_v]
            return False

        if not backtrack(0):
            return None
        f_map.update(assignment)

    # Reconstruct G choices.
    g_map: Dict[PairKey, Gf2Vec] = {}
    for eta, nu in m.pairs():
        d = f_map[eta] + f_map[nu]
        for i in range(m.iota):
            key = (eta, nu, i)
            if key in g_map:
                continue
            fwd = _branch_candidates(ts, m.h(eta, nu, i), m.g(eta, nu, i), n_work)
            rev = _branch_candidates(ts, m.h(nu, eta, i), m.g(nu, eta, i), n_work)
            if fwd is None and rev is None:
                x = m.g(eta, nu, i).pad(n_work)
                y = x + d
            elif fwd is None:
                y = rev[0]
                x = y + d
            elif rev is None:
                x = fwd[0]
                y = x + d
            else:
                rev_bits = {v.bits for v in rev}
                x = next(v for v in fwd if v.bits ^ d.bits in rev_bits)
                y = x + d
            g_map[(eta, nu, i)] = x
            g_map[(nu, eta, i)] = y
    return f_map, g_map


def check_membership(m: OverlapStructure, ts: TreeSystem) -> MembershipResult:
    """Decide membership in the ambient overlap family, with a witness.

    Clauses (a)-(e) are verified directly; (f) via the potential solver.
    The first violated clause is reported by name.
    """
    if m.level <= 0:
        return MembershipResult(False, "a", "level must be positive")
    if len(m.u) < 2:
        return MembershipResult(False, "a", "|u| must be at least 2")

    for eta, nu in m.pairs():
        for i in range(m.iota):
            h = m.h(eta, nu, i)
            if h < 0:
                return MembershipResult(False, "b", f"negative tree index at ({eta},{nu},{i})")
            nodes = _level_nodes_ext(ts, h, m.level)
            if nodes is not None and m.g(eta, nu, i) not in nodes:
                return MembershipResult(
                    False,
                    "c",
                    f"g_{i}({eta},{nu}) = {m.g(eta, nu, i)} is not a level-{m.level} "
                    f"node of tree {h}",
                )

    for eta, nu in m.unordered_pairs():
        for i in range(m.iota):
            if eta + m.g(eta, nu, i) != nu + m.g(nu, eta, i):
                return MembershipResult(
                    False, "d", f"meeting identity fails at ({eta},{nu},{i})"
                )

    for eta, nu in m.unordered_pairs():
        values = [m.g(eta, nu, i) for i in range(m.iota)]
        values += [m.g(nu, eta, i) for i in range(m.iota)]
        if len({v.bits for v in values}) != 2 * m.iota:
            return MembershipResult(
                False, "e", f"repetition in the meeting nodes of ({eta},{nu})"
            )

    solved = _solve_clause_f(m, ts)
    if solved is None:
        return MembershipResult(False, "f", "no branch continuations exist")
    f_map, g_map = solved
    return MembershipResult(True, witness_f=f_map, witness_g=g_map)


def in_bounded_universe(m: OverlapStructure, ts: TreeSystem) -> bool:
    """Level <= n and all tree indices < M (the restricted family)."""
    return m.level <= ts.n and all(h < ts.count for h in m._h.values())


# ---------------------------------------------------------------------------
# extension and essential-equality relations
# ---------------------------------------------------------------------------


def extends(n: OverlapStructure, m: OverlapStructure) -> bool:
    """True iff n extends m (prefix restriction of tables)."""
    if n.iota != m.iota or m.level > n.level:
        return False
    if {v.prefix(m.level) for v in n.u} != set(m.u):
        return False
    for eta, nu in n.pairs():
        pe, pn = eta.prefix(m.level), nu.prefix(m.level)
        if pe == pn:
            continue
        for i in range(n.iota):
            if m.h(pe, pn, i) != n.h(eta, nu, i):
                return False
            if m.g(pe, pn, i) != n.g(eta, nu, i).prefix(m.level):
                return False
    return True


def _pair_families_match(
    m_vals: Sequence[Tuple[Gf2Vec, Gf2Vec, int, int]],
    n_vals: Sequence[Tuple[Gf2Vec, Gf2Vec, int, int]],
) -> bool:
    """Order-free comparison of one pair's meeting data.

    Each entry is (g_fwd, g_rev, h_fwd, h_rev) for one index i.  The
    unordered value pairs must coincide as sets, and whenever a value
    appears on both sides the tree indices must agree.
    """
    m_pairs = {frozenset((a.bits, b.bits)) for a, b, _, _ in m_vals}
    n_pairs = {frozenset((a.bits, b.bits)) for a, b, _, _ in n_vals}
    if m_pairs != n_pairs:
        return False
    for gm_f, gm_r, hm_f, hm_r in m_vals:
        for gn_f, gn_r, hn_f, hn_r in n_vals:
            if gm_f == gn_f and hm_f != hn_f:
                return False
            if gm_f == gn_r and hm_f != hn_r:
                return False
            if gm_r == gn_f and hm_r != hn_f:
                return False
            if gm_r == gn_r and hm_r != hn_r:
                return False
    return True


def essentially_same(m: OverlapStructure, n: OverlapStructure) -> bool:
    if m.iota != n.iota or m.level != n.level or set(m.u) != set(n.u):
        return False
    for eta, nu in m.unordered_pairs():
        m_vals = [
            (m.g(eta, nu, i), m.g(nu, eta, i), m.h(eta, nu, i), m.h(nu, eta, i))
            for i in range(m.iota)
        ]
        n_vals = [
            (n.g(eta, nu, i), n.g(nu, eta, i), n.h(eta, nu, i), n.h(nu, eta, i))
            for i in range(n.iota)
        ]
        if not _pair_families_match(m_vals, n_vals):
            return False
    return True


def essentially_extends(n: OverlapStructure, m: OverlapStructure) -> bool:
    """m is essentially extended by n: prefix version of essential equality."""
    if n.iota != m.iota or m.level > n.level:
        return False
    if {v.prefix(m.level) for v in n.u} != set(m.u):
        return False
    for eta, nu in n.pairs():
        if eta >= nu:
            continue
        pe, pn = eta.prefix(m.level), nu.prefix(m.level)
        if pe == pn:
            continue
        m_vals = [
            (m.g(pe, pn, i), m.g(pn, pe, i), m.h(pe, pn, i), m.h(pn, pe, i))
            for i in range(m.iota)
        ]
        n_vals = [
            (
                n.g(eta, nu, i).prefix(m.level),
                n.g(nu, eta, i).prefix(m.level),
                n.h(eta, nu, i),
                n.h(nu, eta, i),
            )
            for i in range(n.iota)
        ]
        if not _pair_families_match(m_vals, n_vals):
            return False
    return True


# ---------------------------------------------------------------------------
# witnesses from overlapping families
# ---------------------------------------------------------------------------


def witness_from_family(
    etas: Sequence[Gf2Vec],
    ts: TreeSystem,
    level: int,
    iota: int,
) -> Optional[OverlapStructure]:
    """Build a structure from vectors whose translations pairwise overlap.

    ``etas`` are distinct full-depth vectors; every pair must meet in at
    least 2*iota branches of the system (checked).  Meeting nodes are
    chosen lexicographically, tree indices take the least tree containing
    each node, then everything is truncated at ``level``; the result is
    None when the truncation collapses u or repeats meeting nodes.
    """
    n = ts.n
    bset = branch_set(ts)
    etas = list(etas)
    if len(set(etas)) != len(etas):
        raise OverlapError("family vectors must be distinct")
    for v in etas:
        if v.length != n:
            raise OverlapError("family vectors must have full depth")
    if not 0 < level <= n:
        raise OverlapError(f"level {level} out of range")

    def tree_index(node: Gf2Vec) -> int:
        for m_idx, tree in enumerate(ts.trees):
            if node in tree.front:
                return m_idx
        raise OverlapError(f"meeting node {node} is not a branch")

    full_g: Dict[Tuple[int, int, int], Tuple[Gf2Vec, Gf2Vec]] = {}
    for a in range(len(etas)):
        for b in range(a + 1, len(etas)):
            delta = etas[a] + etas[b]
            meet = sorted(overlap_points(bset, delta))
            if len(meet) < 2 * iota:
                raise OverlapError(
                    f"family pair ({a},{b}) meets in only {len(meet)} branches"
                )
            chosen = []
            used: set[int] = set()
            for x in meet:
                if x.bits in used:
                    continue
                y = x + delta
                used.add(x.bits)
                used.add(y.bits)
                chosen.append((x, y))
                if len(chosen) == iota:
                    break
            if len(chosen) < iota:
                raise OverlapError("could not pick repetition-free meeting pairs")
            for i, (x, y) in enumerate(chosen):
                full_g[(a, b, i)] = (x, y)

    u_prefixes = [v.prefix(level) for v in etas]
    if len({v.bits for v in u_prefixes}) != len(etas):
        return None

    h: Dict[PairKey, int] = {}
    g: Dict[PairKey, Gf2Vec] = {}
    for a in range(len(etas)):
        for b in range(a + 1, len(etas)):
            for i in range(iota):
                x, y = full_g[(a, b, i)]
                g[(u_prefixes[a], u_prefixes[b], i)] = x.prefix(level)
                g[(u_prefixes[b], u_prefixes[a], i)] = y.prefix(level)
                h[(u_prefixes[a], u_prefixes[b], i)] = tree_index(x)
                h[(u_prefixes[b], u_prefixes[a], i)] = tree_index(y)

    m = OverlapStructure(level, iota, u_prefixes, h, g)
    for eta, nu in m.unordered_pairs():
        values = [m.g(eta, nu, i).bits for i in range(iota)]
        values += [m.g(nu, eta, i).bits for i in range(iota)]
        if len(set(values)) != 2 * iota:
            return None
    return m


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------


@dataclass
class NdrkResult:
    value: int
    cap_limited: bool

    def __int__(self) -> int:
        return self.value


def _extension_candidates(x: Gf2Vec, level: int) -> List[Gf2Vec]:
    gap = level - x.length
    return [Gf2Vec(level, x.bits | (tail << x.length)) for tail in range(1 << gap)]


def _pair_slot_choices(
    ts: TreeSystem,
    iota: int,
    xp: Gf2Vec,
    yp: Gf2Vec,
    base: Optional[Tuple[OverlapStructure, Gf2Vec, Gf2Vec]],
) -> List[List[Tuple[Gf2Vec, Gf2Vec, int, int]]]:
    """Per-index candidate tuples (g_fwd, g_rev, h_fwd, h_rev) at a level.

    ``base`` carries (m, x, y) when (xp, yp) extend a separated pair (x, y)
    of m; then h is forced and g must extend the base nodes.  Otherwise the
    slot is free over all trees (indices < M only: the bounded universe).
    """
    level = xp.length
    delta = xp + yp
    out: List[List[Tuple[Gf2Vec, Gf2Vec, int, int]]] = []
    level_sets = [ts.trees[m_idx].level(level) for m_idx in range(ts.count)]
    for i in range(iota):
        options: List[Tuple[Gf2Vec, Gf2Vec, int, int]] = []
        if base is not None:
            m, x, y = base
            h_f, h_r = m.h(x, y, i), m.h(y, x, i)
            g_f, g_r = m.g(x, y, i), m.g(y, x, i)
            if h_f >= ts.count or h_r >= ts.count:
                raise OverlapError("base structure outside the bounded universe")
            for cand in sorted(level_sets[h_f]):
                if not g_f.is_prefix_of(cand):
                    continue
                rev = cand + delta
                if g_r.is_prefix_of(rev) and rev in level_sets[h_r]:
                    options.append((cand, rev, h_f, h_r))
        else:
            for h_f in range(ts.count):
                for cand in sorted(level_sets[h_f]):
                    rev = cand + delta
                    for h_r in range(ts.count):
                        if rev in level_sets[h_r]:
                            options.append((cand, rev, h_f, h_r))
        out.append(options)
    return out


def _combo_diff_set(
    ts: TreeSystem, combo: Tuple, level: int, n_work: int
) -> Optional[frozenset]:
    """Possible F-difference values for one pair under a slot combo.

    None when unconstrained (some slot unbounded); empty set = dead combo.
    """
    sets = []
    for g_f, g_r, h_f, h_r in combo:
        fwd = _branch_candidates(ts, h_f, g_f, n_work)
        rev = _branch_candidates(ts, h_r, g_r, n_work)
        if fwd is None or rev is None:
            continue
        rev_bits = {y.bits for y in rev}
        sets.append({x.bits ^ y for x in fwd for y in rev_bits})
    if not sets:
        return None
    return frozenset(set.intersection(*sets))


def _enumerate_tables(
    ts: TreeSystem,
    iota: int,
    u_new: Sequence[Gf2Vec],
    slot_bases: Mapping[Tuple[Gf2Vec, Gf2Vec], Optional[Tuple]],
) -> Iterator[Tuple[Dict[PairKey, int], Dict[PairKey, Gf2Vec]]]:
    """All (h, g) tables over u_new respecting per-pair base constraints.

    Combos whose branch continuations cannot exist are dropped early, and
    the pair-by-pair DFS prunes on triangle consistency of the possible
    continuation differences (a necessary part of clause (f)), which
    keeps the product tractable below the top level.
    """
    level = u_new[0].length
    n_work = max(ts.n, level)
    pairs = [
        (u_new[i], u_new[j])
        for i in range(len(u_new))
        for j in range(i + 1, len(u_new))
    ]
    per_pair_options: List[List[Tuple[Tuple, Optional[frozenset]]]] = []
    for xp, yp in pairs:
        slots = _pair_slot_choices(ts, iota, xp, yp, slot_bases[(xp, yp)])
        combos = []
        for chosen in itertools.product(*slots):
            used = set()
            ok = True
            for g_f, g_r, _, _ in chosen:
                if g_f.bits in used or g_r.bits in used or g_f == g_r:
                    ok = False
                    break
                used.add(g_f.bits)
                used.add(g_r.bits)
            if not ok:
                continue
            diffs = _combo_diff_set(ts, chosen, level, n_work)
            if diffs is not None and not diffs:
                continue
            combos.append((chosen, diffs))
        if not combos:
            return
        per_pair_options.append(combos)

    index = {v: i for i, v in enumerate(u_new)}

    def pair_key(a: Gf2Vec, b: Gf2Vec) -> Tuple[int, int]:
        return (min(index[a], index[b]), max(index[a], index[b]))

    chosen_diffs: Dict[Tuple[int, int], Optional[frozenset]] = {}
    assignment: List[Tuple] = [None] * len(pairs)
    _missing = object()

    def triangle_ok(xp: Gf2Vec, yp: Gf2Vec, diffs: Optional[frozenset]) -> bool:
        # F(x)+F(y) must factor through every common neighbour z
        if diffs is None:
            return True
        for z in u_new:
            if z == xp or z == yp:
                continue
            d2 = chosen_diffs.get(pair_key(xp, z), _missing)
            d3 = chosen_diffs.get(pair_key(yp, z), _missing)
            if d2 is _missing or d3 is _missing or d2 is None or d3 is None:
                continue
            if not any((b ^ c) in diffs for b in d2 for c in d3):
                return False
        return True

    def dfs(pi: int) -> Iterator[Tuple[Dict, Dict]]:
        if pi == len(pairs):
            h: Dict[PairKey, int] = {}
            g: Dict[PairKey, Gf2Vec] = {}
            for (xp, yp), (chosen, _) in zip(pairs, assignment):
                for i, (g_f, g_r, h_f, h_r) in enumerate(chosen):
                    h[(xp, yp, i)] = h_f
                    h[(yp, xp, i)] = h_r
                    g[(xp, yp, i)] = g_f
                    g[(yp, xp, i)] = g_r
            yield h, g
            return
        xp, yp = pairs[pi]
        key = pair_key(xp, yp)
        for chosen, diffs in per_pair_options[pi]:
            if not triangle_ok(xp, yp, diffs):
                continue
            assignment[pi] = (chosen, diffs)
            chosen_diffs[key] = diffs
            yield from dfs(pi + 1)
            del chosen_diffs[key]
        assignment[pi] = None

    yield from dfs(0)


def enumerate_extensions(
    m: OverlapStructure,
    nu: Gf2Vec,
    ts: TreeSystem,
    cap_u: int,
) -> Iterator[OverlapStructure]:
    """All one-or-more-level extensions of m splitting nu, within the cap."""
    if len(m.u) + 1 > cap_u:
        return
    for level in range(m.level + 1, ts.n + 1):
        ext_lists = {x: _extension_candidates(x, level) for x in m.u}
        size_room = cap_u - len(m.u)
        # size vector: every element keeps >= 1 extension, nu gets >= 2
        others = [x for x in m.u if x != nu]
        for extra_nu in range(1, size_room + 1):
            remaining = size_room - extra_nu
            for extra_others in _compositions(remaining, len(others)):
                sizes = {nu: 1 + extra_nu}
                for x, e in zip(others, extra_others):
                    sizes[x] = 1 + e
                for choice in _choose_extensions(ext_lists, m.u, sizes):
                    u_new = sorted(v for vs in choice.values() for v in vs)
                    slot_bases = {}
                    for ii in range(len(u_new)):
                        for jj in range(ii + 1, len(u_new)):
                            xp, yp = u_new[ii], u_new[jj]
                            xb, yb = xp.prefix(m.level), yp.prefix(m.level)
                            if xb == yb:
                                slot_bases[(xp, yp)] = None
                            else:
                                slot_bases[(xp, yp)] = (m, xb, yb)
                    for h, g in _enumerate_tables(ts, m.iota, u_new, slot_bases):
                        cand = OverlapStructure(level, m.iota, u_new, h, g)
                        if check_membership(cand, ts).ok:
                            yield cand


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _choose_extensions(
    ext_lists: Mapping[Gf2Vec, List[Gf2Vec]],
    keys: Sequence[Gf2Vec],
    sizes: Mapping[Gf2Vec, int],
) -> Iterator[Dict[Gf2Vec, Tuple[Gf2Vec, ...]]]:
    if not keys:
        yield {}
        return
    head, tail = keys[0], keys[1:]
    for combo in itertools.combinations(ext_lists[head], sizes[head]):
        for rest in _choose_extensions(ext_lists, tail, sizes):
            out = dict(rest)
            out[head] = combo
            yield out


def ndrk(
    m: OverlapStructure,
    ts: TreeSystem,
    cap_u: int,
    _memo: Optional[Dict] = None,
) -> NdrkResult:
    """Exact rank of m over the finite bounded universe, by memoized recursion.

    The successor clause demands, for every nu in u, an extension at a
    strictly deeper level splitting nu with rank one lower; since levels
    are bounded by n, the recursion is well founded and values are
    naturals <= n.  ``cap_limited`` flags results where the |u| cap alone
    already forbids every split (so deeper ranks were out of reach by cap,
    not by the structure).
    """
    if not in_bounded_universe(m, ts):
        raise OverlapError("structure is outside the bounded universe")
    memo = _memo if _memo is not None else {}
    cap_flag = [False]

    def rank(s: OverlapStructure) -> int:
        key = s.canonical().canonical_key()
        if key in memo:
            return memo[key]
        if len(s.u) + 1 > cap_u:
            if s.level < ts.n:
                cap_flag[0] = True
            memo[key] = 0
            return 0
        best_per_nu: List[int] = []
        for nu in s.u:
            best = -1
            for ext in enumerate_extensions(s, nu, ts, cap_u):
                best = max(best, rank(ext))
            best_per_nu.append(best)
            if best == -1:
                break
        value = 1 + min(best_per_nu) if all(b >= 0 for b in best_per_nu) else 0
        memo[key] = value
        return value

    value = rank(m)
    return NdrkResult(value, cap_flag[0])


def enumerate_universe(
    ts: TreeSystem, iota: int, cap_u: int, levels: Optional[Sequence[int]] = None
) -> List[OverlapStructure]:
    """Every member of the bounded universe with |u| <= cap_u.

    Pairs of u must admit meeting nodes at their level, so u ranges over
    cliques of the pairwise-feasibility relation rather than all subsets.
    """
    out: List[OverlapStructure] = []
    for level in levels if levels is not None else range(1, ts.n + 1):
        vectors = [Gf2Vec(level, b) for b in range(1 << level)]
        feasible: Dict[Tuple[Gf2Vec, Gf2Vec], bool] = {}

        def pair_ok(x: Gf2Vec, y: Gf2Vec) -> bool:
            key = (x, y)
            if key not in feasible:
                slots = _pair_slot_choices(ts, iota, x, y, None)
                ok = all(slots[i] for i in range(iota))
                if ok:
                    # need iota repetition-free choices to exist
                    ok = _has_repetition_free(slots)
                feasible[key] = ok
            return feasible[key]

        for size in range(2, cap_u + 1):
            for u_new in itertools.combinations(vectors, size):
                if not all(
                    pair_ok(u_new[i], u_new[j])
                    for i in range(size)
                    for j in range(i + 1, size)
                ):
                    continue
                slot_bases = {
                    (u_new[i], u_new[j]): None
                    for i in range(size)
                    for j in range(i + 1, size)
                }
                for h, g in _enumerate_tables(ts, iota, list(u_new), slot_bases):
                    cand = OverlapStructure(level, iota, u_new, h, g)
                    if check_membership(cand, ts).ok:
                        out.append(cand)
    return out


def _has_repetition_free(slots: List[List[Tuple]]) -> bool:
    def rec(i: int, used: set) -> bool:
        if i == len(slots):
            return True
        for g_f, g_r, _, _ in slots[i]:
            if g_f == g_r or g_f.bits in used or g_r.bits in used:
                continue
            used.add(g_f.bits)
            used.add(g_r.bits)
            if rec(i + 1, used):
                used.discard(g_f.bits)
                used.discard(g_r.bits)
                return True
            used.discard(g_f.bits)
            used.discard(g_r.bits)
        return False

    return rec(0, set())
