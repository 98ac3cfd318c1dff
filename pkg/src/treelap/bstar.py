"""The pairing-bijection square: families related through index reshuffling.

A fixed pairing bijection pi: N x N -> N turns one infinite 0/1 sequence
into a grid of rows; the relation of interest holds between x and y when
some row of y reads off x (or vice versa).  Families built inductively
stay pairwise related: each new member packs all its predecessors into
its rows, with row 0 chosen to avoid every predecessor so the family
stays injective.

Everything here works on finite prefixes.  The construction records, for
each ordered pair, which row witnesses the relation; the decision
procedure checks the universally quantified clause on all indices below
the prefix depth and reports unknown-at-depth when nothing is refuted but
no certificate is recorded.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple


class BstarError(ValueError):
    pass


def pair(n: int, k: int) -> int:
    """The Cantor pairing bijection."""
    s = n + k
    return s * (s + 1) // 2 + k


def unpair(i: int) -> Tuple[int, int]:
    from math import isqrt

    s = (isqrt(8 * i + 1) - 1) // 2
    if (s + 1) * (s + 2) // 2 <= i:
        s += 1
    k = i - s * (s + 1) // 2
    return s - k, k


@dataclass
class Family:
    """Prefixes of an inductively built pairwise related family."""

    depth: int
    members: List[List[int]]
    # row witness for each ordered pair (alpha, beta) with alpha < beta:
    # member alpha equals row k of member beta
    row_witness: Dict[Tuple[int, int], int] = field(default_factory=dict)


def required_depth(count: int) -> int:
    """The least prefix depth at which the construction is self-contained.

    Every read x_beta(pair(n, k)) with pair(n, k) < depth needs source
    index n < depth, which the pairing grants for free (pair is monotone
    in both arguments); the avoidance bit for predecessor alpha sits at
    pair(alpha, 0), so all of those must fit.
    """
    if count < 1:
        raise BstarError("count must be positive")
    return pair(count - 1, 0) + 1 if count > 1 else 1


def build_family(count: int, depth: int, seed: int) -> Family:
    """Build ``count`` prefixes of depth ``depth``; all pairs related.

    Member beta is assembled from rows: row 0 is the avoider (flipping
    one bit against each predecessor), row k+1 is predecessor k, and
    spare rows repeat the last predecessor.  The recorded witness for
    (alpha, beta) is row alpha + 1.
    """
    if count < 1:
        raise BstarError("count must be positive")
    need = required_depth(count)
    if depth < need:
        raise BstarError(
            f"depth {depth} too small: the avoidance bits need depth {need}"
        )
    rng = random.Random(seed)
    members: List[List[int]] = [[rng.randrange(2) for _ in range(depth)]]
    witness: Dict[Tuple[int, int], int] = {}
    for beta in range(1, count):
        avoider = [0] * depth
        for alpha in range(beta):
            # flip against x_alpha at read position pair(alpha, 0)
            avoider[alpha] = 1 - members[alpha][pair(alpha, 0)]

        def row(k: int) -> List[int]:
            if k == 0:
                return avoider
            if k <= beta:
                return members[k - 1]
            return members[beta - 1]

        new = [0] * depth
        for i in range(depth):
            n, k = unpair(i)
            src = row(k)
            new[i] = src[n] if n < depth else 0
        members.append(new)
        for alpha in range(beta):
            witness[(alpha, beta)] = alpha + 1
    fam = Family(depth, members, witness)
    _verify_family(fam)
    return fam


def _verify_family(fam: Family) -> None:
    for (alpha, beta), k in fam.row_witness.items():
        x, y = fam.members[alpha], fam.members[beta]
        for n in range(fam.depth):
            i = pair(n, k)
            if i >= fam.depth:
                break
            if x[n] != y[i]:
                raise BstarError(
                    f"recorded witness k={k} fails for pair ({alpha},{beta}) at n={n}"
                )
    for alpha in range(len(fam.members)):
        for beta in range(alpha + 1, len(fam.members)):
            if fam.members[alpha] == fam.members[beta]:
                raise BstarError(f"members {alpha} and {beta} coincide")


@dataclass(frozen=True)
class RelationVerdict:
    """Outcome of the depth-bounded clause check.

    Relation indices follow the split convention: index 2k means "y is
    row k of x", index 2k+1 means "x is row k of y".  ``surviving`` lists
    every index not refuted below the depth; ``related`` is only claimed
    when construction metadata certifies one of them.
    """

    kind: str  # "equal", "related", "unknown-at-depth"
    relation_index: Optional[int] = None
    surviving: Tuple[int, ...] = ()
    certified: bool = False


def family_relation_index(fam: Family, alpha: int, beta: int) -> int:
    """The certified relation index for the ordered pair (alpha, beta).

    The construction makes the earlier member a row of the later one, so
    (alpha, beta) with alpha < beta is related with odd index (alpha reads
    off beta) and the reversed pair with the even twin.
    """
    if alpha < beta:
        return 2 * fam.row_witness[(alpha, beta)] + 1
    return 2 * fam.row_witness[(beta, alpha)]


def bstar_relation(
    x: List[int],
    y: List[int],
    depth: int,
    certified_index: Optional[int] = None,
) -> RelationVerdict:
    """Decide the relation clauses restricted to indices below ``depth``.

    Each visible clause is checked on every index below the depth; a
    finite check cannot affirm the universally quantified clause, so the
    verdict is "related" only when metadata certifies a surviving clause,
    and "unknown-at-depth" otherwise (with the surviving indices listed).
    """
    if len(x) != len(y):
        raise BstarError("prefixes must have equal length")
    depth = min(depth, len(x))
    if x == y:
        return RelationVerdict("equal", certified=True)

    def clause_holds(src: List[int], dst: List[int], k: int) -> bool:
        n = 0
        while n < depth:
            i = pair(n, k)
            if i >= depth:
                break
            if dst[i] != src[n]:
                return False
            n += 1
        return True

    surviving: List[int] = []
    k = 0
    while pair(0, k) < depth:
        if clause_holds(y, x, k):
            surviving.append(2 * k)  # y is row k of x: y(n) = x(pair(n,k))
        if clause_holds(x, y, k):
            surviving.append(2 * k + 1)  # x is row k of y
        k += 1
    surviving_t = tuple(sorted(surviving))
    if certified_index is not None and certified_index in surviving_t:
        return RelationVerdict("related", certified_index, surviving_t, certified=True)
    return RelationVerdict("unknown-at-depth", None, surviving_t)
