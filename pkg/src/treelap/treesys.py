"""Finite tree systems over 2^{<=n} and the usability predicate.

A tree here is a prefix-closed set of bit strings whose maximal nodes all
sit at depth n; it is stored by its depth-n front (the node set is the set
of prefixes of the front).  A tree system bundles M such trees with a
width sequence d, one width per tree.

Semantically each tree stands for its zero-extension into the full binary
tree: branches are front nodes continued by zeros, so the branch set of
the system is captured exactly by the depth-n front vectors.  Overlap
counts |(rho+B) cap (rho'+B)| consequently depend only on delta =
(rho+rho') restricted to [0,n): any witness pair rho, rho' must agree
beyond n because all branches vanish there.  This reduction is what lets
``is_usable`` search length-n vectors only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

from .gf2 import Gf2Error, Gf2Vec


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteTree:
    """A nonempty tree in 2^{<=depth} with all terminal branches at depth."""

    depth: int
    front: FrozenSet[Gf2Vec]

    def __post_init__(self) -> None:
        if not self.front:
            raise TreeError("tree must be nonempty")
        for v in self.front:
            if v.length != self.depth:
                raise TreeError(f"front node {v} not at depth {self.depth}")

    @staticmethod
    def from_front(depth: int, nodes: Iterable[Gf2Vec]) -> "FiniteTree":
        return FiniteTree(depth, frozenset(nodes))

    @staticmethod
    def from_node_strings(depth: int, nodes: Iterable[str]) -> "FiniteTree":
        """Build from an explicit node list, validating prefix closure."""
        vecs = {Gf2Vec.from_string(s) for s in nodes}
        front = {v for v in vecs if v.length == depth}
        if not front:
            raise TreeError("no nodes at terminal depth")
        implied = {f.prefix(l) for f in front for l in range(depth + 1)}
        if vecs - implied:
            extra = sorted(vecs - implied)[0]
            raise TreeError(f"node {extra} is not on a terminal branch")
        if implied - vecs:
            missing = sorted(implied - vecs)[0]
            raise TreeError(f"tree not prefix-closed: missing {missing}")
        return FiniteTree(depth, frozenset(front))

    def level(self, l: int) -> FrozenSet[Gf2Vec]:
        if not 0 <= l <= self.depth:
            raise TreeError(f"level {l} out of range")
        return frozenset(v.prefix(l) for v in self.front)

    def contains(self, node: Gf2Vec) -> bool:
        if node.length > self.depth:
            return False
        return any(node.is_prefix_of(f) for f in self.front)

    def node_strings(self) -> list[str]:
        """All nodes, sorted by (length, lex) — for small trees only."""
        nodes = {f.prefix(l) for f in self.front for l in range(self.depth + 1)}
        return [v.to_string() for v in sorted(nodes, key=lambda v: (v.length, v.to_string()))]

    def truncate(self, depth: int) -> "FiniteTree":
        return FiniteTree(depth, self.level(depth))


@dataclass(frozen=True)
class TreeSystem:
    """<t_m : m < M> with depths all n, plus the width sequence d."""

    n: int
    trees: Tuple[FiniteTree, ...]
    widths: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.trees) != len(self.widths):
            raise TreeError("one width per tree required")
        for t in self.trees:
            if t.depth != self.n:
                raise TreeError(f"tree depth {t.depth} != system depth {self.n}")
        for d in self.widths:
            if not 0 < d <= self.n:
                raise TreeError(f"width {d} outside (0, {self.n}]")

    @property
    def count(self) -> int:
        return len(self.trees)

    def width(self, m: int) -> int:
        return self.widths[m]

    def fronts_pairwise_disjoint(self) -> bool:
        seen: set[int] = set()
        for t in self.trees:
            for v in t.front:
                if v.bits in seen:
                    return False
                seen.add(v.bits)
        return True

    def level_nodes(self, m: int, l: int) -> FrozenSet[Gf2Vec]:
        return self.trees[m].level(l)

    def truncate(self, depth: int, widths: Optional[Sequence[int]] = None) -> "TreeSystem":
        if widths is None:
            widths = [min(d, depth) for d in self.widths]
        return TreeSystem(depth, tuple(t.truncate(depth) for t in self.trees), tuple(widths))


@dataclass(frozen=True)
class BranchSet:
    """The union of the depth-n fronts: B as a set of length-n vectors."""

    n: int
    vectors: FrozenSet[Gf2Vec]


def branch_set(ts: TreeSystem) -> BranchSet:
    vecs: set[Gf2Vec] = set()
    for t in ts.trees:
        vecs.update(t.front)
    return BranchSet(ts.n, frozenset(vecs))


def overlap_count(b: BranchSet, delta: Gf2Vec) -> int:
    """|(rho+B) cap (rho'+B)| for any rho, rho' whose sum restricts to delta."""
    if delta.length != b.n:
        raise Gf2Error(f"delta length {delta.length} != {b.n}")
    bits = {v.bits for v in b.vectors}
    return sum(1 for x in bits if x ^ delta.bits in bits)


def overlap_points(b: BranchSet, delta: Gf2Vec) -> FrozenSet[Gf2Vec]:
    """The branches witnessing the overlap: {x in B : x+delta in B}."""
    if delta.length != b.n:
        raise Gf2Error(f"delta length {delta.length} != {b.n}")
    bits = {v.bits for v in b.vectors}
    return frozenset(Gf2Vec(b.n, x) for x in bits if x ^ delta.bits in bits)


def rich_deltas(b: BranchSet, iota: int) -> list[Gf2Vec]:
    """All nonzero delta with overlap count >= 2*iota, sorted lex.

    Only sums of two branches can have nonzero count, so the search space
    is B+B rather than all of 2^n.
    """
    bits = sorted(v.bits for v in b.vectors)
    counts: dict[int, int] = {}
    for i, x in enumerate(bits):
        for y in bits[i + 1 :]:
            d = x ^ y
            counts[d] = counts.get(d, 0) + 2
    out = [Gf2Vec(b.n, d) for d, c in counts.items() if c >= 2 * iota]
    return sorted(out)


def is_usable(ts: TreeSystem, iota: int) -> Optional[Tuple[Gf2Vec, Gf2Vec, Gf2Vec]]:
    """Three distinct vectors with pairwise overlap counts >= 2*iota, or None.

    Witnesses are translation-invariant, so the lexicographically least
    triple (rho0 < rho1 < rho2) has rho0 = 0; the search scans rich deltas
    in lex order for a pair whose sum is again rich.
    """
    if iota < 2:
        raise TreeError("iota must be at least 2")
    b = branch_set(ts)
    if len(b.vectors) < 2 * iota:
        return None
    deltas = rich_deltas(b, iota)
    rich_bits = {d.bits for d in deltas}
    for i, d1 in enumerate(deltas):
        for d2 in deltas[i + 1 :]:
            if d1.bits ^ d2.bits in rich_bits:
                return (Gf2Vec.zero(ts.n), d1, d2)
    return None
