"""Bookkeeping systems (X, r, j, k), their axioms, and the cute chain.

A system assigns to every nonempty finite subset of its domain an
ordinal-valued rank r, a label j and a slot k, subject to five axioms:
totality of the three tables, monotonicity of r under inclusion, positive
rank on singletons, k below the set size, and the no-clone axiom: no
outside point b may reproduce a set's slot count, label and rank at once.

Two implementations share the query interface r/j/k:

* ``YzrSystem`` stores explicit tables for a small finite domain.
* ``CuteChain`` is the limit object of the amalgamation theorem, grown one
  block at a time.  Each embed request appends a fresh block carrying an
  isomorphic copy of the requested finite system; sets crossing old and
  new points get rank 0, slot 0 and a label fresh for that stage (the
  lexicographic bijection onto [J0, J1)).  Tables are evaluated lazily
  from the block history, so the domain can grow into the hundreds while
  only the blocks are stored.

``finite_splitting_rank`` is the desk-scale analogue of the model rank
behind these systems, with the largeness notion "uncountable" replaced by
"at least theta"; ``system_from_rank_data`` packages rank data into a
system the way the associated-system construction prescribes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .ordinals import ZERO, Ordinal, RankValue, one_plus


class YzrError(ValueError):
    pass


Subset = FrozenSet[int]


def _subsets(points: Sequence[int], max_size: Optional[int] = None) -> Iterator[Subset]:
    top = len(points) if max_size is None else min(max_size, len(points))
    for size in range(1, top + 1):
        for combo in itertools.combinations(points, size):
            yield frozenset(combo)


class YzrSystem:
    """An explicit finite system: full tables over all nonempty subsets."""

    def __init__(
        self,
        points: Iterable[int],
        r: Mapping[Subset, Ordinal],
        j: Mapping[Subset, int],
        k: Mapping[Subset, int],
        epsilon: Ordinal,
    ):
        self.points: Tuple[int, ...] = tuple(sorted(set(points)))
        self.epsilon = epsilon
        self._r = {frozenset(s): v for s, v in r.items()}
        self._j = {frozenset(s): v for s, v in j.items()}
        self._k = {frozenset(s): v for s, v in k.items()}
        if not self.points:
            raise YzrError("domain must be nonempty")
        for v in _subsets(self.points):
            if v not in self._r or v not in self._j or v not in self._k:
                raise YzrError(f"tables not total at {sorted(v)}")
            if self._r[v] > epsilon:
                raise YzrError(f"rank of {sorted(v)} exceeds epsilon")

    def domain(self) -> Tuple[int, ...]:
        return self.points

    def covers(self, v: Iterable[int]) -> bool:
        return set(v) <= set(self.points)

    def r(self, v: Iterable[int]) -> Ordinal:
        return self._r[frozenset(v)]

    def j(self, v: Iterable[int]) -> int:
        return self._j[frozenset(v)]

    def k(self, v: Iterable[int]) -> int:
        return self._k[frozenset(v)]

    def restrict(self, points: Iterable[int]) -> "YzrSystem":
        keep = sorted(set(points))
        if not set(keep) <= set(self.points):
            raise YzrError("restriction outside the domain")
        subs = list(_subsets(keep))
        return YzrSystem(
            keep,
            {v: self._r[v] for v in subs},
            {v: self._j[v] for v in subs},
            {v: self._k[v] for v in subs},
            self.epsilon,
        )

    def __repr__(self) -> str:
        return f"YzrSystem(points={list(self.points)}, epsilon={self.epsilon})"


def restrict_system(system, points: Iterable[int]) -> YzrSystem:
    """Materialise the restriction of any r/j/k source to a small domain."""
    keep = sorted(set(points))
    subs = list(_subsets(keep))
    return YzrSystem(
        keep,
        {v: system.r(v) for v in subs},
        {v: system.j(v) for v in subs},
        {v: system.k(v) for v in subs},
        system.epsilon,
    )


@dataclass
class AxiomReport:
    ok: bool
    clause: Optional[str] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_axioms(system, points: Optional[Sequence[int]] = None) -> AxiomReport:
    """Verify the five axioms by direct enumeration over subsets of ``points``.

    For explicit systems the whole domain is used by default; for chain
    prefixes pass a window (the enumeration is exponential in its size).
    """
    pts = tuple(sorted(points if points is not None else system.domain()))
    for v in _subsets(pts):
        try:
            rv, jv, kv = system.r(v), system.j(v), system.k(v)
        except KeyError:
            return AxiomReport(False, "(*)2", f"tables not total at {sorted(v)}")
        if rv > system.epsilon:
            return AxiomReport(False, "(*)2", f"rank exceeds epsilon at {sorted(v)}")
        if jv < 0 or kv < 0:
            return AxiomReport(False, "(*)2", f"negative label data at {sorted(v)}")
        if kv >= len(v):
            return AxiomReport(False, "(*)5", f"slot {kv} not below |{sorted(v)}|")
    # Monotonicity along covers implies it for all inclusions.
    for w in _subsets(pts):
        if len(w) < 2:
            continue
        for x in w:
            if system.r(w - {x}) < system.r(w):
                return AxiomReport(
                    False, "(*)3", f"rank increases from {sorted(w - {x})} to {sorted(w)}"
                )
    for a in pts:
        if system.r(frozenset((a,))) <= ZERO:
            return AxiomReport(False, "(*)4", f"singleton {{{a}}} has rank 0")
    for w in _subsets(pts):
        enum = sorted(w)
        kw = system.k(w)
        slot_point = enum[kw]
        for b in pts:
            if b in w:
                continue
            if sum(1 for x in w if x < b) != kw:
                continue
            swapped = (w - {slot_point}) | {b}
            if system.j(swapped) != system.j(w):
                continue
            if system.r(w | {b}) == system.r(w):
                return AxiomReport(
                    False,
                    "(*)5",
                    f"clone {b} of {sorted(w)}: slot, label and rank all match",
                )
    return AxiomReport(True)


@dataclass(frozen=True)
class QuasiEmbedding:
    """An increasing injection preserving r and k, and j on positive ranks."""

    mapping: Tuple[Tuple[int, int], ...]

    @staticmethod
    def of(mapping: Mapping[int, int]) -> "QuasiEmbedding":
        return QuasiEmbedding(tuple(sorted(mapping.items())))

    def as_dict(self) -> Dict[int, int]:
        return dict(self.mapping)

    def __call__(self, x: int) -> int:
        for a, b in self.mapping:
            if a == x:
                return b
        raise KeyError(x)

    def apply(self, v: Iterable[int]) -> FrozenSet[int]:
        d = self.as_dict()
        return frozenset(d[x] for x in v)

    @property
    def domain_points(self) -> Tuple[int, ...]:
        return tuple(a for a, _ in self.mapping)

    @property
    def range_points(self) -> Tuple[int, ...]:
        return tuple(b for _, b in self.mapping)


def is_quasi_embedding(phi, source, target) -> bool:
    """Subset-wise preservation check; phi maps source domain into target."""
    if isinstance(phi, QuasiEmbedding):
        phi = phi.as_dict()
    pts = sorted(phi)
    if not set(pts) <= set(source.domain()):
        return False
    images = [phi[x] for x in pts]
    if sorted(images) != images or len(set(images)) != len(images):
        return False
    for v in _subsets(pts):
        img = frozenset(phi[x] for x in v)
        if target.r(img) != source.r(v) or target.k(img) != source.k(v):
            return False
        if source.r(v) > ZERO and target.j(img) != source.j(v):
            return False
    return True


# ---------------------------------------------------------------------------
# the cute chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Block:
    start: int
    end: int
    system: YzrSystem  # normalised to domain [0, end-start)
    j0: int


def _crossing_rank(mask: int, start: int, end: int) -> int:
    """Lexicographic index of a crossing set among all crossing sets.

    Sets are encoded as bitmasks over [0, end) and ordered by mask value;
    crossing means meeting both [0, start) and [start, end).
    """
    low_mask = (1 << start) - 1

    def count_below(limit_mask: int) -> int:
        # sets v with mask(v) < limit_mask, v & low != 0, v & high != 0
        total = 0
        for p in range(end):
            if not (limit_mask >> p) & 1:
                continue
            above = limit_mask & ~((1 << (p + 1)) - 1)
            low_p = min(p, start)
            high_p = p - low_p
            choices = 1 << p
            need_low = (above & low_mask) == 0
            need_high = (above & ~low_mask) == 0
            bad = 0
            if need_low:
                bad += 1 << high_p
            if need_high:
                bad += 1 << low_p
            if need_low and need_high:
                bad -= 1
            total += choices - bad
        return total

    return count_below(mask)


class CuteChain:
    """The limit of a block chain; every finite system embeds arbitrarily high.

    The object is single-owner and stateful: ``embed`` appends blocks.
    Queries are pure functions of the block history.
    """

    def __init__(self, epsilon: Ordinal):
        if epsilon <= ZERO:
            raise YzrError("epsilon must be positive")
        self.epsilon = epsilon
        self.blocks: List[_Block] = []
        self._max_j = -1

    @property
    def size(self) -> int:
        return self.blocks[-1].end if self.blocks else 0

    def domain(self) -> Tuple[int, ...]:
        return tuple(range(self.size))

    def covers(self, v: Iterable[int]) -> bool:
        return all(0 <= x < self.size for x in v)

    def _locate(self, v: Subset) -> Tuple[_Block, bool]:
        top = max(v)
        for block in self.blocks:
            if block.start <= top < block.end:
                return block, min(v) >= block.start
        raise YzrError(f"point {top} outside the chain prefix [0,{self.size})")

    def r(self, v: Iterable[int]) -> Ordinal:
        v = frozenset(v)
        block, internal = self._locate(v)
        if internal:
            return block.system.r(frozenset(x - block.start for x in v))
        return ZERO

    def k(self, v: Iterable[int]) -> int:
        v = frozenset(v)
        block, internal = self._locate(v)
        if internal:
            return block.system.k(frozenset(x - block.start for x in v))
        return 0

    def j(self, v: Iterable[int]) -> int:
        v = frozenset(v)
        block, internal = self._locate(v)
        if internal:
            return block.system.j(frozenset(x - block.start for x in v))
        mask = 0
        for x in v:
            mask |= 1 << x
        return block.j0 + _crossing_rank(mask, block.start, block.end)

    def restrict(self, points: Iterable[int]) -> YzrSystem:
        return restrict_system(self, points)

    def _append_block(self, q: YzrSystem) -> QuasiEmbedding:
        """One amalgamation step: copy q onto the next free block."""
        if q.epsilon > self.epsilon:
            raise YzrError("embedded system exceeds the chain's epsilon")
        start = self.size
        width = len(q.points)
        normal = _normalise(q)
        q_max_j = max(normal._j.values(), default=-1)
        j0 = max(self._max_j, q_max_j) + 1
        crossing = ((1 << start) - 1) * ((1 << width) - 1)
        block = _Block(start, start + width, normal, j0)
        self.blocks.append(block)
        self._max_j = j0 + crossing - 1 if crossing else max(self._max_j, q_max_j)
        mapping = {p: start + i for i, p in enumerate(q.points)}
        return QuasiEmbedding.of(mapping)

    def embed(self, q: YzrSystem, floor: int = 0) -> QuasiEmbedding:
        """Embed q with its image entirely in [floor, infinity).

        Blocks are appended (each a fresh copy of q) until one starts at or
        above the floor; the last embedding is returned.  The block start
        strictly increases each round, so this terminates.
        """
        report = check_axioms(q)
        if not report.ok:
            raise YzrError(f"cannot embed an invalid system: {report.detail}")
        while True:
            phi = self._append_block(q)
            if phi.range_points[0] >= floor:
                return phi


def _normalise(q: YzrSystem) -> YzrSystem:
    """Relabel the domain to [0, |X|) preserving order and all tables."""
    index = {p: i for i, p in enumerate(q.points)}
    subs = list(_subsets(q.points))
    return YzrSystem(
        range(len(q.points)),
        {frozenset(index[x] for x in v): q.r(v) for v in subs},
        {frozenset(index[x] for x in v): q.j(v) for v in subs},
        {frozenset(index[x] for x in v): q.k(v) for v in subs},
        q.epsilon,
    )


def flat_system(points: Iterable[int], epsilon: Ordinal, rank: Optional[Ordinal] = None) -> YzrSystem:
    """All-singleton-rank system: rank on every subset, injective labels.

    Valid for any positive rank: the injective labels make the no-clone
    axiom vacuous.  Used as padding and as a simple demo oracle source.
    """
    pts = tuple(sorted(set(points)))
    if rank is None:
        rank = epsilon
    if rank <= ZERO or rank > epsilon:
        raise YzrError("flat rank must lie in (0, epsilon]")
    subs = list(_subsets(pts))
    r = {v: rank for v in subs}
    j = {v: i for i, v in enumerate(sorted(subs, key=lambda s: sorted(s)))}
    k = {v: 0 for v in subs}
    return YzrSystem(pts, r, j, k, epsilon)


def two_tier_system(points: Iterable[int], epsilon: Ordinal) -> YzrSystem:
    """Singletons at rank epsilon with one shared label; larger sets rank 0.

    The shared singleton label is what lets order isomorphisms between
    disjoint subsets be quasi-embeddings, which the compatibility
    demonstrations need.
    """
    pts = tuple(sorted(set(points)))
    subs = list(_subsets(pts))
    r = {v: (epsilon if len(v) == 1 else ZERO) for v in subs}
    j = {}
    fresh = 1
    for v in sorted(subs, key=lambda s: (len(s), sorted(s))):
        if len(v) == 1:
            j[v] = 0
        else:
            j[v] = fresh
            fresh += 1
    k = {v: 0 for v in subs}
    return YzrSystem(pts, r, j, k, epsilon)


# ---------------------------------------------------------------------------
# the splitting rank on finite models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteModel:
    """A relational structure on [0, universe) with a largeness threshold.

    ``relations`` maps (arity, label) to the set of satisfying tuples.
    ``increasing_only`` asserts that relations hold of increasing tuples
    only (checked on construction when set).
    """

    universe: int
    relations: Mapping[Tuple[int, int], FrozenSet[Tuple[int, ...]]]
    threshold: int = 2
    increasing_only: bool = False

    def __post_init__(self) -> None:
        for (arity, label), tuples in self.relations.items():
            for t in tuples:
                if len(t) != arity:
                    raise YzrError(f"tuple {t} has arity != {arity}")
                if not all(0 <= x < self.universe for x in t):
                    raise YzrError(f"tuple {t} outside the universe")
                if self.increasing_only and list(t) != sorted(set(t)):
                    raise YzrError(f"non-increasing tuple {t} in relation {label}")

    def holds(self, arity: int, label: int, args: Sequence[int]) -> bool:
        rel = self.relations.get((arity, label))
        return rel is not None and tuple(args) in rel

    def labels_of_arity(self, arity: int) -> List[int]:
        return sorted(l for (a, l) in self.relations if a == arity)


def _applicable(model: FiniteModel, w: Subset) -> List[Tuple[int, int]]:
    """(label, slot) pairs whose relation holds of w's increasing tuple."""
    enum = tuple(sorted(w))
    out = []
    for label in model.labels_of_arity(len(enum)):
        if model.holds(len(enum), label, enum):
            for slot in range(len(enum)):
                out.append((label, slot))
    return out


def _substitutions(model: FiniteModel, w: Subset, label: int, slot: int) -> List[int]:
    enum = list(sorted(w))
    hits = []
    for alpha in range(model.universe):
        probe = list(enum)
        probe[slot] = alpha
        if model.holds(len(enum), label, probe):
            hits.append(alpha)
    return hits


def finite_splitting_rank(
    model: FiniteModel, w: Iterable[int], _memo: Optional[Dict] = None
) -> RankValue:
    """The splitting rank with largeness "at least threshold".

    Witnesses strictly enlarge the set, so the recursion over supersets
    terminates; the value is exact, with infinity for sets no relation
    ever constrains.
    """
    w = frozenset(w)
    if not w:
        raise YzrError("rank of the empty set is undefined")
    if not all(0 <= x < model.universe for x in w):
        raise YzrError("set outside the universe")
    memo = _memo if _memo is not None else {}

    def rank(v: Subset) -> RankValue:
        if v in memo:
            return memo[v]
        apps = _applicable(model, v)
        if not apps:
            memo[v] = RankValue.infinity()
            return memo[v]
        for label, slot in apps:
            if len(_substitutions(model, v, label, slot)) < model.threshold:
                memo[v] = RankValue.minus_one()
                return memo[v]
        # rank >= d+1 iff every applicable (label, slot) has a witness
        # outside v of rank >= d; so the value is 1 + min over slots of the
        # max witness rank.
        worst: Optional[RankValue] = None
        for label, slot in apps:
            best: Optional[RankValue] = None
            for alpha in _substitutions(model, v, label, slot):
                if alpha in v:
                    continue
                sub = rank(v | {alpha})
                if best is None or sub > best:
                    best = sub
            if best is None:
                best = RankValue.minus_one()
            if worst is None or best < worst:
                worst = best
        if worst is None or worst.is_minus_one:
            value = RankValue.of(0)
        elif worst.is_infinity:
            value = RankValue.infinity()
        else:
            value = RankValue.of(worst.ordinal.succ())
        memo[v] = value
        return value

    return rank(w)


def rank_witnesses(model: FiniteModel, w: Iterable[int]) -> Tuple[int, int]:
    """The least (label, slot) certifying the rank value of w.

    For rank -1 this is an applicable pair with too few substitutions; for
    finite rank d, a pair with no outside witness of rank >= d; infinite
    rank has no witness and raises.
    """
    w = frozenset(w)
    value = finite_splitting_rank(model, w)
    if value.is_infinity:
        raise YzrError(f"{sorted(w)} has unbounded rank: no witness exists")
    if value.is_minus_one:
        for label, slot in _applicable(model, w):
            if len(_substitutions(model, w, label, slot)) < model.threshold:
                return label, slot
        raise YzrError("inconsistent rank data")
    for label, slot in _applicable(model, w):
        best: Optional[RankValue] = None
        for alpha in _substitutions(model, w, label, slot):
            if alpha in w:
                continue
            sub = finite_splitting_rank(model, w | {alpha})
            if best is None or sub > best:
                best = sub
        if best is None or best < value:
            return label, slot
    raise YzrError("inconsistent rank data")


def rank_data_from_model(
    model: FiniteModel, points: Iterable[int]
) -> Tuple[Dict[Subset, RankValue], Dict[Subset, int], Dict[Subset, int]]:
    """Rank plus witness tables for every nonempty subset of ``points``."""
    pts = tuple(sorted(set(points)))
    rk: Dict[Subset, RankValue] = {}
    jj: Dict[Subset, int] = {}
    kk: Dict[Subset, int] = {}
    memo: Dict = {}
    for v in _subsets(pts):
        rk[v] = finite_splitting_rank(model, v, _memo=memo)
        label, slot = rank_witnesses(model, v)
        jj[v] = label
        kk[v] = slot
    return rk, jj, kk


def system_from_rank_data(
    points: Iterable[int],
    rk: Mapping[Subset, RankValue],
    j: Mapping[Subset, int],
    k: Mapping[Subset, int],
    epsilon: Ordinal,
) -> YzrSystem:
    """The associated system: r = 1 + rk, fresh labels on rank -1 sets.

    Rank -1 sets get labels J, J+1, ... along the fixed enumeration
    (sorted by size then lexicographically), where J exceeds every
    supplied label; everything else copies the witness data.
    """
    pts = tuple(sorted(set(points)))
    subs = list(_subsets(pts))
    for v in subs:
        if v not in rk or v not in j or v not in k:
            raise YzrError(f"rank data not total at {sorted(v)}")
        if rk[v].is_infinity:
            raise YzrError(f"rank of {sorted(v)} is unbounded")
        if not rk[v].is_minus_one and one_plus(rk[v].ordinal) > epsilon:
            raise YzrError(f"rank of {sorted(v)} exceeds epsilon - 1")
        if k[v] >= len(v):
            raise YzrError(f"slot of {sorted(v)} not below the size")
    for w in subs:
        if len(w) < 2:
            continue
        for x in w:
            if rk[frozenset(w - {x})] < rk[w]:
                raise YzrError("rank data is not monotone")

    big_j = max(j[v] for v in subs) + 1
    minus_ones = sorted(
        (v for v in subs if rk[v].is_minus_one), key=lambda s: (len(s), sorted(s))
    )
    fresh = {v: big_j + i for i, v in enumerate(minus_ones)}

    r_table: Dict[Subset, Ordinal] = {}
    j_table: Dict[Subset, int] = {}
    for v in subs:
        if rk[v].is_minus_one:
            r_table[v] = ZERO
            j_table[v] = fresh[v]
        else:
            r_table[v] = one_plus(rk[v].ordinal)
            j_table[v] = j[v]
    return YzrSystem(pts, r_table, j_table, {v: k[v] for v in subs}, epsilon)
