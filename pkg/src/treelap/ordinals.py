"""Ordinal arithmetic in Cantor normal form, capped below omega^omega.

Ordinals are stored as descending lists of (exponent, coefficient) terms,
denoting sum(w^e * c).  Only the operations the rest of the library needs
are provided: comparison, successor, addition, left multiplication by w,
and a bijective text rendering.  Exponents are capped (default 3); the
desk-scale runs never need more.

The extended value domain {-1} union ordinals union {infinity} used by the
rank computations lives here as well (RankValue).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Tuple

DEFAULT_EXPONENT_CAP = 3


class OrdinalError(ValueError):
    pass


class ExponentCapError(OrdinalError):
    pass


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    """A Cantor-normal-form ordinal below w^w.

    ``terms`` is a tuple of (exponent, coefficient) pairs with strictly
    descending exponents and coefficients >= 1; the empty tuple is 0.
    """

    terms: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        last_exp = None
        for exp, coeff in self.terms:
            if exp < 0 or coeff < 1:
                raise OrdinalError(f"bad CNF term ({exp},{coeff})")
            if last_exp is not None and exp >= last_exp:
                raise OrdinalError("CNF exponents must strictly descend")
            last_exp = exp

    # --- constructors ---

    @staticmethod
    def from_int(n: int) -> "Ordinal":
        if n < 0:
            raise OrdinalError("ordinals are non-negative")
        return Ordinal(((0, n),)) if n else Ordinal()

    @staticmethod
    def omega_power(exp: int, coeff: int = 1) -> "Ordinal":
        return Ordinal(((exp, coeff),)) if coeff else Ordinal()

    # --- predicates / accessors ---

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        return all(e == 0 for e, _ in self.terms)

    @property
    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0] == 0

    @property
    def finite_part(self) -> int:
        if self.terms and self.terms[-1][0] == 0:
            return self.terms[-1][1]
        return 0

    @property
    def exponent_bound(self) -> int:
        return self.terms[0][0] if self.terms else 0

    def to_int(self) -> int:
        if not self.is_finite:
            raise OrdinalError(f"{self} is not finite")
        return self.finite_part

    # --- order ---

    def __lt__(self, other: "Ordinal") -> bool:
        if not isinstance(other, Ordinal):
            return NotImplemented
        # Tuple comparison on term lists agrees with ordinal order: a higher
        # leading exponent (or coefficient) dominates, and a proper prefix is
        # smaller than any extension.
        return self.terms < other.terms

    # --- arithmetic ---

    def __add__(self, other: "Ordinal") -> "Ordinal":
        if not isinstance(other, Ordinal):
            return NotImplemented
        if other.is_zero:
            return self
        lead_exp, lead_coeff = other.terms[0]
        kept = [t for t in self.terms if t[0] > lead_exp]
        merged = list(other.terms)
        for exp, coeff in self.terms:
            if exp == lead_exp:
                merged[0] = (lead_exp, coeff + lead_coeff)
                break
        return Ordinal(tuple(kept) + tuple(merged))

    def succ(self) -> "Ordinal":
        return self + Ordinal.from_int(1)

    def plus_int(self, n: int) -> "Ordinal":
        return self + Ordinal.from_int(n)

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Ordinal({render(self)!r})"


ZERO = Ordinal()
ONE = Ordinal.from_int(1)
OMEGA = Ordinal.omega_power(1)


def one_plus(a: Ordinal) -> Ordinal:
    """1 + a (left addition; absorbed when a is infinite)."""
    return ONE + a


def omega_times(a: Ordinal, cap: int = DEFAULT_EXPONENT_CAP) -> Ordinal:
    """w * a under left multiplication: every exponent shifts up by one."""
    if a.is_zero:
        return ZERO
    terms = tuple((e + 1, c) for e, c in a.terms)
    if terms[0][0] > cap:
        raise ExponentCapError(f"w*({a}) needs exponent {terms[0][0]} > cap {cap}")
    return Ordinal(terms)


def omega_times_succ(a: Ordinal, cap: int = DEFAULT_EXPONENT_CAP) -> Ordinal:
    """w * (a+1); the finite part of a is absorbed into the w-multiple."""
    return omega_times(a.succ(), cap=cap)


def decrement_once(a: Ordinal) -> Ordinal:
    """A canonical ordinal strictly below a nonzero ``a``.

    Successors drop their +1; limits drop one from the last coefficient.
    Used to pick the alpha of a single rank-unfolding step.
    """
    if a.is_zero:
        raise OrdinalError("0 has no predecessor")
    exp, coeff = a.terms[-1]
    head = a.terms[:-1]
    if coeff > 1:
        return Ordinal(head + ((exp, coeff - 1),))
    return Ordinal(head)


# --- text rendering, bijective with the term list ---

_TERM_RE = re.compile(r"^(?:w\^(\d+)\*(\d+)|w\*(\d+)|(\d+))$")


def render(a: Ordinal) -> str:
    if a.is_zero:
        return "0"
    parts = []
    for exp, coeff in a.terms:
        if exp == 0:
            parts.append(str(coeff))
        elif exp == 1:
            parts.append(f"w*{coeff}")
        else:
            parts.append(f"w^{exp}*{coeff}")
    return "+".join(parts)


def parse(text: str) -> Ordinal:
    text = text.strip()
    if text == "0":
        return ZERO
    terms = []
    for part in text.split("+"):
        m = _TERM_RE.match(part.strip())
        if not m:
            raise OrdinalError(f"cannot parse ordinal term {part!r}")
        if m.group(1) is not None:
            terms.append((int(m.group(1)), int(m.group(2))))
        elif m.group(3) is not None:
            terms.append((1, int(m.group(3))))
        else:
            terms.append((0, int(m.group(4))))
    return Ordinal(tuple(terms))


# --- extended rank domain ---

_RANK_MINUS_ONE = 0
_RANK_ORDINAL = 1
_RANK_INFINITY = 2


@total_ordering
@dataclass(frozen=True)
class RankValue:
    """An element of {-1} union ordinals union {infinity}."""

    kind: int
    ordinal: Ordinal = ZERO

    @staticmethod
    def minus_one() -> "RankValue":
        return RankValue(_RANK_MINUS_ONE)

    @staticmethod
    def infinity() -> "RankValue":
        return RankValue(_RANK_INFINITY)

    @staticmethod
    def of(value: "Ordinal | int") -> "RankValue":
        if isinstance(value, int):
            if value == -1:
                return RankValue.minus_one()
            value = Ordinal.from_int(value)
        return RankValue(_RANK_ORDINAL, value)

    @property
    def is_minus_one(self) -> bool:
        return self.kind == _RANK_MINUS_ONE

    @property
    def is_infinity(self) -> bool:
        return self.kind == _RANK_INFINITY

    @property
    def is_ordinal(self) -> bool:
        return self.kind == _RANK_ORDINAL

    def __lt__(self, other: "RankValue") -> bool:
        if not isinstance(other, RankValue):
            return NotImplemented
        if self.kind != other.kind:
            return self.kind < other.kind
        if self.kind == _RANK_ORDINAL:
            return self.ordinal < other.ordinal
        return False

    def __str__(self) -> str:
        if self.is_minus_one:
            return "-1"
        if self.is_infinity:
            return "inf"
        return render(self.ordinal)

    def __repr__(self) -> str:
        return f"RankValue({self})"


def max_ordinal(values: Iterable[Ordinal]) -> Ordinal:
    result = ZERO
    for v in values:
        if v > result:
            result = v
    return result
