"""Bit vectors over GF(2) and the unique-translation lemma.

Vectors are fixed-length 0/1 sequences packed into Python integers (bit i
of ``bits`` is coordinate i, so the machine word layout matches the
sequence notation: coordinate 0 is written first).  Addition is XOR and
every element is self-inverse.

``translation_witness`` realises the statement: for linearly independent B
and any A with |A| >= 5 and A+A a subset of B+B, there is exactly one x
with A+x a subset of B.  The function re-verifies the uniqueness instead
of trusting it, so the test suite doubles as a lemma checker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


class Gf2Error(ValueError):
    pass


class PreconditionError(Gf2Error):
    """A stated hypothesis failed; ``failed`` lists the offending clauses."""

    def __init__(self, failed: Sequence[str]):
        super().__init__("precondition violated: " + ", ".join(failed))
        self.failed = tuple(failed)


class LemmaViolationError(Gf2Error):
    """An identity the library is entitled to rely on did not hold."""


@dataclass(frozen=True)
class Gf2Vec:
    """An immutable length-``length`` vector over GF(2)."""

    length: int
    bits: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise Gf2Error("negative length")
        if not 0 <= self.bits < (1 << self.length):
            raise Gf2Error(f"bits out of range for length {self.length}")

    # --- constructors ---

    @staticmethod
    def zero(length: int) -> "Gf2Vec":
        return Gf2Vec(length, 0)

    @staticmethod
    def basis(index: int, length: int) -> "Gf2Vec":
        if not 0 <= index < length:
            raise Gf2Error(f"basis index {index} out of range for length {length}")
        return Gf2Vec(length, 1 << index)

    @staticmethod
    def from_string(text: str) -> "Gf2Vec":
        bits = 0
        for i, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << i
            elif ch != "0":
                raise Gf2Error(f"bad bit character {ch!r}")
        return Gf2Vec(len(text), bits)

    @staticmethod
    def from_bits(values: Iterable[int]) -> "Gf2Vec":
        bits = 0
        n = 0
        for i, v in enumerate(values):
            if v not in (0, 1):
                raise Gf2Error(f"bad bit value {v!r}")
            bits |= v << i
            n = i + 1
        return Gf2Vec(n, bits)

    # --- structure ---

    def __add__(self, other: "Gf2Vec") -> "Gf2Vec":
        if self.length != other.length:
            raise Gf2Error(f"length mismatch {self.length} != {other.length}")
        return Gf2Vec(self.length, self.bits ^ other.bits)

    __xor__ = __add__

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise Gf2Error(f"index {i} out of range")
        return (self.bits >> i) & 1

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    def prefix(self, length: int) -> "Gf2Vec":
        if not 0 <= length <= self.length:
            raise Gf2Error(f"prefix length {length} out of range")
        return Gf2Vec(length, self.bits & ((1 << length) - 1))

    def pad(self, length: int) -> "Gf2Vec":
        """Zero-extend to ``length``."""
        if length < self.length:
            raise Gf2Error("pad target shorter than vector")
        return Gf2Vec(length, self.bits)

    def is_prefix_of(self, other: "Gf2Vec") -> bool:
        return (
            self.length <= other.length
            and (other.bits & ((1 << self.length) - 1)) == self.bits
        )

    def is_proper_prefix_of(self, other: "Gf2Vec") -> bool:
        return self.length < other.length and self.is_prefix_of(other)

    def set_bit(self, i: int) -> "Gf2Vec":
        if not 0 <= i < self.length:
            raise Gf2Error(f"index {i} out of range")
        return Gf2Vec(self.length, self.bits | (1 << i))

    def first_difference(self, other: "Gf2Vec") -> Optional[int]:
        """Index of the first coordinate where the vectors differ."""
        d = self.bits ^ other.bits
        if d == 0:
            return None if self.length == other.length else min(self.length, other.length)
        return (d & -d).bit_length() - 1

    # Lexicographic order on the coordinate sequence (index 0 first).
    def __lt__(self, other: "Gf2Vec") -> bool:
        if self.length != other.length:
            return self.length < other.length
        d = self.bits ^ other.bits
        if d == 0:
            return False
        low = (d & -d).bit_length() - 1
        return not (self.bits >> low) & 1

    def __le__(self, other: "Gf2Vec") -> bool:
        return self == other or self < other

    def __gt__(self, other: "Gf2Vec") -> bool:
        return other < self

    def __ge__(self, other: "Gf2Vec") -> bool:
        return other <= self

    def to_string(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.length))

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Gf2Vec({self.to_string()!r})"


def xor_sum(vectors: Iterable[Gf2Vec], length: Optional[int] = None) -> Gf2Vec:
    acc: Optional[Gf2Vec] = None
    for v in vectors:
        acc = v if acc is None else acc + v
    if acc is None:
        if length is None:
            raise Gf2Error("empty sum needs an explicit length")
        return Gf2Vec.zero(length)
    return acc


def gf2_rank(vectors: Iterable[Gf2Vec]) -> int:
    """Rank of the family, by elimination keyed on the lowest set bit."""
    pivots: dict[int, int] = {}
    rank = 0
    for v in vectors:
        bits = v.bits
        while bits:
            low = (bits & -bits).bit_length() - 1
            if low in pivots:
                bits ^= pivots[low]
            else:
                pivots[low] = bits
                rank += 1
                break
    return rank


def is_independent(vectors: Sequence[Gf2Vec], length: Optional[int] = None) -> bool:
    """True iff no nonempty subfamily XORs to zero."""
    vectors = list(vectors)
    if length is not None:
        for v in vectors:
            if v.length != length:
                raise Gf2Error(f"vector length {v.length} != {length}")
    return gf2_rank(vectors) == len(vectors)


def translation_witness(
    a_set: Iterable[Gf2Vec], b_set: Iterable[Gf2Vec], length: int
) -> Optional[Gf2Vec]:
    """The unique x with A+x a subset of B, for independent B and |A| >= 5.

    Returns None when A+A is not contained in B+B (then no translate of A
    can land inside B).  Raises PreconditionError if B is dependent or A is
    too small, and LemmaViolationError if the witness count is not exactly
    one on inputs meeting all hypotheses.
    """
    a_list = sorted(set(a_set))
    b_list = sorted(set(b_set))
    failed = []
    for v in a_list + b_list:
        if v.length != length:
            raise Gf2Error(f"vector length {v.length} != {length}")
    if not is_independent(b_list):
        failed.append("independence")
    if len(a_list) < 5:
        failed.append("|A|>=5")
    if failed:
        raise PreconditionError(failed)

    b_bits = {v.bits for v in b_list}
    sums = {x.bits ^ y.bits for x in b_list for y in b_list}
    for i, x in enumerate(a_list):
        for y in a_list[i:]:
            if x.bits ^ y.bits not in sums:
                return None

    # Any witness x maps min(A) into B, so x lies in min(A)+B; scanning that
    # coset is an exhaustive search.
    anchor = a_list[0].bits
    hits = []
    for b in b_list:
        x = anchor ^ b.bits
        if all((a.bits ^ x) in b_bits for a in a_list):
            hits.append(Gf2Vec(length, x))
    if len(hits) != 1:
        raise LemmaViolationError(
            f"expected exactly one witness, found {len(hits)}: "
            f"{[str(h) for h in hits]}"
        )
    return hits[0]
