"""Bricks: finite blocks of independent vectors realising overlap structures.

A brick places, on a finite set w of bookkeeping points, independent
length-n vectors eta_a together with meeting-node tables h, g compatible
with a tree system.  Its derived family M consists of all truncations
m(l, w*) (w* a subset of size >= 3, l a level above the relevant widths,
with separated prefixes) that are members of the ambient overlap family.
M is always recomputed from the tuple data, never read from files: the
definition is intrinsic and stored copies can lie.

Axioms (+)1-(+)5 are structural.  (+)6 says translation coincidences
inside M force order isomorphisms to be quasi-embeddings aligned with the
translation; (+)7 forbids splitting above slot-critical rank-0 sets.
Both quantify over the exponentially large M, so the checker works by
candidate generation: a coincidence m(l,w0) ~ m(l,w1)+rho forces the
prefix sums eta_a+eta_b to collide pairwise, and a (+)7 split forces an
eta-prefix collision, so scanning sum/prefix separation levels finds
every hypothesis instance.  Candidate sizes can be capped for very large
bricks; with no caps the scan is exhaustive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .gf2 import Gf2Vec, is_independent
from .ordinals import ZERO
from .overlap import OverlapStructure, _pair_families_match, check_membership
from .treesys import TreeSystem
from .yzr import is_quasi_embedding, restrict_system


class BrickError(ValueError):
    pass


TableKey = Tuple[int, int, int]  # (a, b, i)


class Brick:
    """(w, n, eta, h, g) over a tree system; M is derived, not stored."""

    def __init__(
        self,
        w: Iterable[int],
        n: int,
        eta: Mapping[int, Gf2Vec],
        h: Mapping[TableKey, int],
        g: Mapping[TableKey, Gf2Vec],
        iota: int,
    ):
        self.w: Tuple[int, ...] = tuple(sorted(set(w)))
        self.n = n
        self.iota = iota
        self.eta: Dict[int, Gf2Vec] = dict(eta)
        self.h: Dict[TableKey, int] = dict(h)
        self.g: Dict[TableKey, Gf2Vec] = dict(g)
        for a in self.w:
            if a not in self.eta:
                raise BrickError(f"eta missing at {a}")
            if self.eta[a].length != n:
                raise BrickError(f"eta[{a}] has length != {n}")
        for a, b in self.pairs():
            for i in range(iota):
                if (a, b, i) not in self.h or (a, b, i) not in self.g:
                    raise BrickError(f"tables not total at ({a},{b},{i})")
                if self.g[(a, b, i)].length != n:
                    raise BrickError(f"g[({a},{b},{i})] has length != {n}")

    def pairs(self) -> Iterator[Tuple[int, int]]:
        for a in self.w:
            for b in self.w:
                if a != b:
                    yield (a, b)

    def unordered_pairs(self) -> Iterator[Tuple[int, int]]:
        for i, a in enumerate(self.w):
            for b in self.w[i + 1 :]:
                yield (a, b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Brick):
            return NotImplemented
        return (
            self.w == other.w
            and self.n == other.n
            and self.iota == other.iota
            and self.eta == other.eta
            and self.h == other.h
            and self.g == other.g
        )

    def __repr__(self) -> str:
        return f"Brick(w={list(self.w)}, n={self.n}, iota={self.iota})"

    # --- derived structures ---

    def top_structure(self) -> OverlapStructure:
        """The full-depth structure (n, {eta_a}, h*, g*)."""
        return self.structure_at(self.n, self.w, widths=None)

    def pair_width(self, a: int, b: int, ts: Optional[TreeSystem]) -> int:
        if ts is None:
            return 1
        out = 1
        for i in range(self.iota):
            out = max(out, ts.width(self.h[(a, b, i)]), ts.width(self.h[(b, a, i)]))
        return out

    def structure_at(
        self,
        level: int,
        w_star: Iterable[int],
        widths: Optional[TreeSystem],
    ) -> Optional[OverlapStructure]:
        """The labelled truncation m(level, w*), or None if the label is bad.

        Bad means: a width above the level, or two prefixes colliding.  The
        returned structure may still fail membership (repetitions at the
        level); callers decide whether to check.
        """
        w_star = tuple(sorted(set(w_star)))
        if not 0 < level <= self.n:
            return None
        prefs = {a: self.eta[a].prefix(level) for a in w_star}
        if len({p.bits for p in prefs.values()}) != len(w_star):
            return None
        if widths is not None:
            for a, b in itertools.combinations(w_star, 2):
                if self.pair_width(a, b, widths) > level:
                    return None
        h: Dict = {}
        g: Dict = {}
        for a in w_star:
            for b in w_star:
                if a == b:
                    continue
                for i in range(self.iota):
                    h[(prefs[a], prefs[b], i)] = self.h[(a, b, i)]
                    g[(prefs[a], prefs[b], i)] = self.g[(a, b, i)].prefix(level)
        return OverlapStructure(level, self.iota, prefs.values(), h, g)


def sub_brick(b: Brick, w_star: Iterable[int]) -> Brick:
    """b restricted to w*; depth and all retained data unchanged."""
    w_star = tuple(sorted(set(w_star)))
    if len(w_star) < 3:
        raise BrickError("sub-brick needs at least 3 points")
    if not set(w_star) <= set(b.w):
        raise BrickError("sub-brick points outside w")
    keep = set(w_star)
    return Brick(
        w_star,
        b.n,
        {a: b.eta[a] for a in w_star},
        {k: v for k, v in b.h.items() if k[0] in keep and k[1] in keep},
        {k: v for k, v in b.g.items() if k[0] in keep and k[1] in keep},
        b.iota,
    )


def map_brick(b: Brick, phi: Mapping[int, int]) -> Brick:
    """Relabel the index set along an increasing injection; data transported."""
    pts = sorted(phi)
    if set(pts) != set(b.w):
        raise BrickError("mapping domain must equal w")
    images = [phi[a] for a in pts]
    if sorted(images) != images or len(set(images)) != len(images):
        raise BrickError("mapping must be an increasing injection")
    return Brick(
        images,
        b.n,
        {phi[a]: b.eta[a] for a in b.w},
        {(phi[a], phi[bb], i): v for (a, bb, i), v in b.h.items()},
        {(phi[a], phi[bb], i): v for (a, bb, i), v in b.g.items()},
        b.iota,
    )


def brick_extends(b1: Brick, b0: Brick) -> bool:
    """b0 is an initial block of b1 (the containment order on bricks)."""
    if b1.iota != b0.iota:
        return False
    if not (set(b0.w) <= set(b1.w) and b0.n <= b1.n):
        return False
    for a in b0.w:
        if not b0.eta[a].is_prefix_of(b1.eta[a]):
            return False
    for a, bb in b0.pairs():
        for i in range(b0.iota):
            if b1.h[(a, bb, i)] != b0.h[(a, bb, i)]:
                return False
            if not b0.g[(a, bb, i)].is_prefix_of(b1.g[(a, bb, i)]):
                return False
    return True


def materialize_labels(
    b: Brick,
    ts: TreeSystem,
    size_cap: Optional[int] = None,
    levels: Optional[Sequence[int]] = None,
) -> Iterator[Tuple[int, Tuple[int, ...]]]:
    """All (level, w*) labels passing the width and separation conditions."""
    top = len(b.w) if size_cap is None else min(size_cap, len(b.w))
    level_range = levels if levels is not None else range(1, b.n + 1)
    for size in range(3, top + 1):
        for w_star in itertools.combinations(b.w, size):
            floor = 1
            for x, y in itertools.combinations(w_star, 2):
                floor = max(floor, b.pair_width(x, y, ts))
            for level in level_range:
                if level < floor or level > b.n:
                    continue
                prefs = {b.eta[a].prefix(level).bits for a in w_star}
                if len(prefs) == size:
                    yield (level, w_star)


def materialize_M(
    b: Brick,
    ts: TreeSystem,
    size_cap: Optional[int] = None,
    levels: Optional[Sequence[int]] = None,
) -> List[Tuple[int, Tuple[int, ...], OverlapStructure]]:
    """The labelled members of M (labels kept: w* is not determined by m)."""
    out = []
    for level, w_star in materialize_labels(b, ts, size_cap, levels):
        m = b.structure_at(level, w_star, widths=ts)
        if m is not None and check_membership(m, ts).ok:
            out.append((level, w_star, m))
    return out


# ---------------------------------------------------------------------------
# the axiom checker
# ---------------------------------------------------------------------------


@dataclass
class BrickProbe:
    """Search bounds for the quantified axioms.

    ``None`` caps mean unbounded (fully exhaustive scan).  Large bricks
    need finite caps; the report records what was probed.
    """

    w0_cap: Optional[int] = None
    levels: Optional[Sequence[int]] = None
    selection_budget: int = 200_000

    @staticmethod
    def exhaustive() -> "BrickProbe":
        return BrickProbe()

    @staticmethod
    def bounded(w0_cap: int = 4) -> "BrickProbe":
        return BrickProbe(w0_cap=w0_cap)


@dataclass
class BrickReport:
    ok: bool
    failures: List[Tuple[str, str]] = field(default_factory=list)
    probed_levels: int = 0

    def __bool__(self) -> bool:
        return self.ok

    def first_clause(self) -> Optional[str]:
        return self.failures[0][0] if self.failures else None


def _first_set_bit(bits: int) -> Optional[int]:
    if bits == 0:
        return None
    return (bits & -bits).bit_length() - 1


def _global_width_floor(b: Brick, ts: TreeSystem) -> int:
    floors = []
    for a, bb in b.unordered_pairs():
        floors.append(b.pair_width(a, bb, ts))
    return min(floors) if floors else 1


def _critical_levels(b: Brick, ts: TreeSystem) -> List[int]:
    """Levels at which some (+)6/(+)7 hypothesis pattern can change.

    Every hypothesis condition is a prefix agreement (of etas, of pair
    sums, or of meeting nodes of matched pairs) or a width threshold, and
    agreements hold exactly up to their separation level.  Meeting-node
    separations are collected only for pair couples whose sums coincide
    somewhere above the width floor (other couples can never be matched),
    which keeps the set small on amalgamation output.
    """
    floor = _global_width_floor(b, ts)
    crit: Set[int] = {b.n}
    for d in ts.widths:
        if 1 <= d <= b.n:
            crit.add(d)
            if d > 1:
                crit.add(d - 1)

    def clip(sep: Optional[int]) -> int:
        return b.n if sep is None else min(sep, b.n)

    eta_bits = {a: b.eta[a].bits for a in b.w}
    for x, y in itertools.combinations(b.w, 2):
        crit.add(clip(_first_set_bit(eta_bits[x] ^ eta_bits[y])))

    pairs = list(b.unordered_pairs())
    sums = {pr: eta_bits[pr[0]] ^ eta_bits[pr[1]] for pr in pairs}

    def add_g_seps(p0: Tuple[int, int], p1: Tuple[int, int]) -> None:
        vals = []
        for a, bb in (p0, p1):
            for i in range(b.iota):
                vals.append(b.g[(a, bb, i)].bits)
                vals.append(b.g[(bb, a, i)].bits)
        for v1, v2 in itertools.combinations(set(vals), 2):
            crit.add(clip(_first_set_bit(v1 ^ v2)))

    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            sep = clip(_first_set_bit(sums[pairs[i]] ^ sums[pairs[j]]))
            crit.add(sep)
            if sep >= floor:
                add_g_seps(pairs[i], pairs[j])
    # collision couples for rho = 0: pairs (a,c) vs (b,c) with eta_a, eta_b
    # agreeing above the floor
    for x, y in itertools.combinations(b.w, 2):
        sep = clip(_first_set_bit(eta_bits[x] ^ eta_bits[y]))
        if sep >= floor:
            for c in b.w:
                if c != x and c != y:
                    add_g_seps((min(x, c), max(x, c)), (min(y, c), max(y, c)))
    return sorted(l for l in crit if floor <= l <= b.n)


def _truncated_family(b: Brick, a: int, bb: int, level: int):
    return [
        (
            b.g[(a, bb, i)].prefix(level),
            b.g[(bb, a, i)].prefix(level),
            b.h[(a, bb, i)],
            b.h[(bb, a, i)],
        )
        for i in range(b.iota)
    ]


def _pair_label_ok(b: Brick, a: int, bb: int, level: int, ts: TreeSystem) -> bool:
    """Width and repetition-freeness of one pair's data at a level."""
    if b.pair_width(a, bb, ts) > level:
        return False
    mask = (1 << level) - 1
    vals = set()
    for i in range(b.iota):
        vals.add(b.g[(a, bb, i)].bits & mask)
        vals.add(b.g[(bb, a, i)].bits & mask)
    return len(vals) == 2 * b.iota


class _LevelContext:
    """Per-level memoised views of the brick data."""

    def __init__(self, b: Brick, ts: TreeSystem, level: int):
        self.b = b
        self.ts = ts
        self.level = level
        self.mask = (1 << level) - 1
        self.prefs = {a: b.eta[a].bits & self.mask for a in b.w}
        self._fam: Dict[Tuple[int, int], List[Tuple]] = {}
        self._match: Dict[Tuple[Tuple[int, int], Tuple[int, int]], bool] = {}
        self._label: Dict[Tuple[int, int], bool] = {}

    def family(self, a: int, bb: int):
        key = (a, bb)
        if key not in self._fam:
            self._fam[key] = _truncated_family(self.b, a, bb, self.level)
        return self._fam[key]

    def match(self, p0: Tuple[int, int], p1: Tuple[int, int]) -> bool:
        key = (p0, p1)
        if key not in self._match:
            out = _pair_families_match(self.family(*p0), self.family(*p1))
            self._match[key] = out
            self._match[(p1, p0)] = out
        return self._match[key]

    def label_ok(self, x: int, y: int) -> bool:
        key = (min(x, y), max(x, y))
        if key not in self._label:
            self._label[key] = _pair_label_ok(self.b, key[0], key[1], self.level, self.ts)
        return self._label[key]


def _check_b6(
    b: Brick, system, ts: TreeSystem, probe: BrickProbe, failures: List[Tuple[str, str]]
) -> int:
    """Scan for (+)6 violations; returns the number of levels probed.

    A hypothesis instance at level l is an injective matching sigma on
    some w0 such that eta_a + eta_sigma(a) all restrict to the same rho
    and matched pairs carry matching meeting data.  Any non-identity sigma
    moves a point, so the search seeds on one moved pair (from the sum
    classes; for rho = 0, from prefix collisions) and extends through a
    pre-filtered pool of compatible moves.
    """
    levels = probe.levels if probe.levels is not None else _critical_levels(b, ts)
    budget = [probe.selection_budget]
    pair_sums = {(a, bb): (b.eta[a].bits ^ b.eta[bb].bits) for a, bb in b.unordered_pairs()}

    for level in levels:
        ctx = _LevelContext(b, ts, level)
        mask = ctx.mask
        prefs = ctx.prefs

        classes: Dict[int, List[Tuple[int, int]]] = {}
        for pr, s in pair_sums.items():
            classes.setdefault(s & mask, []).append(pr)

        def extend_and_check(
            rho_bits: int,
            pair_list: List[Tuple[int, int]],
            seed_a: int,
            seed_b: int,
        ) -> Optional[str]:
            zero = rho_bits == 0
            moves: Dict[int, List[int]] = {}
            if zero:
                for c in b.w:
                    moves[c] = [c]
            for c, d in pair_list:
                moves.setdefault(c, []).append(d)
                moves.setdefault(d, []).append(c)

            def compatible(sel: Dict[int, int], c: int, d: int) -> bool:
                if prefs[c] in {prefs[x] for x in sel}:
                    return False
                if prefs[d] in {prefs[sel[x]] for x in sel}:
                    return False
                if not all(ctx.label_ok(c, x) and ctx.label_ok(d, sel[x]) for x in sel):
                    return False
                return all(
                    ctx.match(
                        (min(c, x), max(c, x)),
                        (min(d, sel[x]), max(d, sel[x])),
                    )
                    for x in sel
                )

            seed = {seed_a: seed_b}
            pool = []
            for c in sorted(moves):
                if c == seed_a:
                    continue
                for d in moves[c]:
                    if d != seed_b and compatible(seed, c, d):
                        pool.append(c)
                        break
            if len(pool) < 2:
                return None
            cap = probe.w0_cap if probe.w0_cap is not None else len(b.w)

            def dfs(sel: Dict[int, int], rest: List[int]) -> Optional[str]:
                budget[0] -= 1
                if budget[0] < 0:
                    return "budget"
                if len(sel) >= 3:
                    w0 = tuple(sorted(sel))
                    w1 = tuple(sorted(sel.values()))
                    order_iso = dict(zip(w0, w1))
                    if any(order_iso[x] != sel[x] for x in w0):
                        return (
                            f"level {level}: order isomorphism {list(w0)}->{list(w1)} "
                            f"disagrees with the translation matching"
                        )
                    if not is_quasi_embedding(
                        order_iso, restrict_system(system, w0), system
                    ):
                        return (
                            f"level {level}: order isomorphism {list(w0)}->{list(w1)} "
                            f"is not a quasi-embedding"
                        )
                if len(sel) >= cap:
                    return None
                for idx, c in enumerate(rest):
                    for d in moves.get(c, ()):
                        if d in sel.values():
                            continue
                        if not compatible(sel, c, d):
                            continue
                        sel[c] = d
                        out = dfs(sel, rest[idx + 1 :])
                        del sel[c]
                        if out is not None:
                            return out
                return None

            return dfs(seed, pool)

        for rho_bits, pair_list in sorted(classes.items()):
            zero = rho_bits == 0
            if zero:
                seeds = pair_list
            else:
                points = {x for pr in pair_list for x in pr}
                seeds = pair_list if len(points) >= 3 else []
            for a, bb in seeds:
                for sa, sb in ((a, bb), (bb, a)):
                    out = extend_and_check(rho_bits, pair_list, sa, sb)
                    if out == "budget":
                        failures.append(("(+)6", "selection budget exhausted"))
                        return len(levels)
                    if out is not None:
                        failures.append(("(+)6", out))
                        return len(levels)
    return len(levels)


def _check_b7(
    b: Brick, system, ts: TreeSystem, probe: BrickProbe, failures: List[Tuple[str, str]]
) -> None:
    """Scan for (+)7 violations.

    A violation needs two points b0, b1 whose vectors agree up to the base
    level, and the essential extension may always be taken at full depth
    (its conditions only read data truncated to the base level), so only
    the base label (level, w0) and the matched full-depth set w1 are
    searched, through pools pre-filtered by the pairwise data conditions.
    """
    levels = probe.levels if probe.levels is not None else _critical_levels(b, ts)
    budget = [probe.selection_budget]
    for level in levels:
        ctx = _LevelContext(b, ts, level)
        prefs = ctx.prefs
        classes: Dict[int, List[int]] = {}
        for a in b.w:
            classes.setdefault(prefs[a], []).append(a)
        split_classes = {k: v for k, v in classes.items() if len(v) >= 2}
        if not split_classes:
            continue

        cap = probe.w0_cap if probe.w0_cap is not None else len(b.w)

        def pool_for(a: int, b0: int, b1: int) -> List[Tuple[int, List[int]]]:
            out = []
            for cls_key, cls2 in sorted(classes.items()):
                if cls_key == prefs[a]:
                    continue
                for c in cls2:
                    if not ctx.label_ok(a, c):
                        continue
                    pr_ac = (min(a, c), max(a, c))
                    cands = [
                        d
                        for d in cls2
                        if ctx.match(pr_ac, (min(b0, d), max(b0, d)))
                        and ctx.match(pr_ac, (min(b1, d), max(b1, d)))
                    ]
                    if cands:
                        out.append((c, cands))
            return out

        for cls_bits, cls in sorted(split_classes.items()):
            for b0, b1 in itertools.combinations(cls, 2):
                for a in cls:
                    budget[0] -= 1
                    if budget[0] < 0:
                        failures.append(("(+)7", "selection budget exhausted"))
                        return
                    pool = pool_for(a, b0, b1)
                    if len(pool) < 2:
                        continue
                    found = _b7_dfs(
                        b, system, ctx, a, b0, b1, pool, cap, budget, level
                    )
                    if found == "budget":
                        failures.append(("(+)7", "selection budget exhausted"))
                        return
                    if found is not None:
                        failures.append(("(+)7", found))
                        return
    return


def _b7_dfs(
    b: Brick,
    system,
    ctx: "_LevelContext",
    a: int,
    b0: int,
    b1: int,
    pool: List[Tuple[int, List[int]]],
    cap: int,
    budget: List[int],
    level: int,
) -> Optional[str]:
    """Grow (w0, w1) selections point by point and test the base conditions."""
    prefs = ctx.prefs

    def check_complete(sel: Dict[int, int]) -> Optional[str]:
        w0 = tuple(sorted([a] + list(sel)))
        if len(w0) < 3:
            return None
        if system.r(w0) != ZERO:
            return None
        if sorted(w0)[system.k(w0)] != a:
            return None
        w1 = tuple(sorted([b0, b1] + list(sel.values())))
        return (
            f"level {level}: base {list(w0)} with slot point {a} "
            f"splits into {list(w1)}"
        )

    def dfs(sel: Dict[int, int], rest: List[Tuple[int, List[int]]]) -> Optional[str]:
        budget[0] -= 1
        if budget[0] < 0:
            return "budget"
        out = check_complete(sel)
        if out is not None:
            return out
        if 1 + len(sel) >= cap:
            return None
        for idx, (c, cands) in enumerate(rest):
            if prefs[c] in {prefs[x] for x in sel}:
                continue
            if not all(ctx.label_ok(c, x) for x in sel):
                continue
            for d in cands:
                if d in sel.values():
                    continue
                if not all(
                    ctx.match(
                        (min(c, x), max(c, x)), (min(d, sel[x]), max(d, sel[x]))
                    )
                    for x in sel
                ):
                    continue
                sel[c] = d
                out = dfs(sel, rest[idx + 1 :])
                del sel[c]
                if out is not None:
                    return out
        return None

    return dfs({}, pool)


def check_brick(
    b: Brick,
    system,
    ts: TreeSystem,
    probe: Optional[BrickProbe] = None,
) -> BrickReport:
    """Clause-by-clause verification of the brick axioms.

    ``system`` supplies r/j/k data covering w and every probed subset;
    ``ts`` is the tree system the meeting nodes live in (tree indices must
    stay below its count: the bounded-variant requirement).
    """
    if probe is None:
        probe = (
            BrickProbe.exhaustive()
            if len(b.w) <= 6 and b.n <= 12
            else BrickProbe.bounded()
        )
    failures: List[Tuple[str, str]] = []

    if len(b.w) < 3:
        failures.append(("(+)1", f"|w| = {len(b.w)} < 3"))
    if b.n <= 0:
        failures.append(("(+)1", f"n = {b.n} is not positive"))
    if failures:
        return BrickReport(False, failures)

    if not is_independent([b.eta[a] for a in b.w], b.n):
        failures.append(("(+)2", "eta vectors are dependent"))

    for a, bb in b.pairs():
        for i in range(b.iota):
            m_idx = b.h[(a, bb, i)]
            if m_idx >= ts.count:
                failures.append(
                    ("(+)3", f"tree index {m_idx} at ({a},{bb},{i}) is not below M")
                )
            elif ts.width(m_idx) > b.n:
                failures.append(
                    ("(+)3", f"width of tree {m_idx} exceeds n at ({a},{bb},{i})")
                )
            elif b.g[(a, bb, i)] not in ts.trees[m_idx].front:
                failures.append(
                    ("(+)3", f"g at ({a},{bb},{i}) is not a terminal node of its tree")
                )
    if failures:
        return BrickReport(False, failures)

    top = b.top_structure()
    if top is None:
        failures.append(("(+)4", "top structure is degenerate"))
        return BrickReport(False, failures)
    res = check_membership(top, ts)
    if not res.ok:
        failures.append(("(+)4", f"top structure fails clause ({res.clause}): {res.detail}"))
        return BrickReport(False, failures)

    if not system.covers(b.w):
        failures.append(("(+)6", "bookkeeping system does not cover w"))
        return BrickReport(False, failures)

    probed = _check_b6(b, system, ts, probe, failures)
    if not failures:
        _check_b7(b, system, ts, probe, failures)
    return BrickReport(not failures, failures, probed_levels=probed)
