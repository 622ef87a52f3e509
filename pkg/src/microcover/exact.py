"""Exact rational geometry: closed intervals and base-7 digit streams.

Every value in this module is an arbitrary-precision rational; no operation
ever touches floating point.  Interval predicates use closed-interval
semantics (endpoint touching counts as intersecting).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

# All geometry here lives over exact rationals.  ``Rational`` is the stdlib
# Fraction: stored in lowest terms, positive denominator, exact arithmetic.
Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)
ONE_SEVENTH = Fraction(1, 7)


class PreconditionError(ValueError):
    """An operation was called outside its stated domain."""


class DigitPrefixExhausted(RuntimeError):
    """A computation needed base-7 digits beyond the declared prefix."""


class WindowInsufficientError(RuntimeError):
    """A witness search ran off the end of its declared finite window.

    Never a refutation of the underlying statement; carries telemetry so the
    caller can see how far the search got.
    """

    def __init__(self, message: str, telemetry: dict | None = None):
        super().__init__(message)
        self.telemetry = telemetry or {}


def rat(num: int, den: int = 1) -> Fraction:
    return Fraction(num, den)


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or "p" into an exact rational."""
    return Fraction(text.strip())


def seventh_power(a: int) -> Fraction:
    """(1/7)**a for a >= 0, computed exactly."""
    if a < 0:
        raise PreconditionError(f"negative exponent {a}")
    return Fraction(1, 7**a)


def rational_to_json(r: Fraction) -> dict:
    return {"num": str(r.numerator), "den": str(r.denominator)}


def rational_from_json(obj: dict) -> Fraction:
    return Fraction(int(obj["num"]), int(obj["den"]))


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with rational endpoints, lo <= hi."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not isinstance(self.lo, Fraction) or not isinstance(self.hi, Fraction):
            object.__setattr__(self, "lo", Fraction(self.lo))
            object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise PreconditionError(f"interval endpoints out of order: {self.lo} > {self.hi}")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains_point(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def to_json(self) -> dict:
        return {"lo": rational_to_json(self.lo), "hi": rational_to_json(self.hi)}

    @classmethod
    def from_json(cls, obj: dict) -> "Interval":
        return cls(rational_from_json(obj["lo"]), rational_from_json(obj["hi"]))

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"


def length(i: Interval) -> Fraction:
    return i.hi - i.lo


def intersects(i: Interval, j: Interval) -> bool:
    """Closed-interval intersection test; shared endpoints count."""
    return max(i.lo, j.lo) <= min(i.hi, j.hi)


def distance(i: Interval, j: Interval) -> Fraction:
    """Gap between nearest endpoints; 0 when the intervals meet."""
    gap = max(i.lo, j.lo) - min(i.hi, j.hi)
    return gap if gap > 0 else ZERO


def shift(i: Interval, r: Fraction) -> Interval:
    return Interval(i.lo + r, i.hi + r)


@dataclass(frozen=True)
class Digit7Stream:
    """Finite base-7 digit prefix of a rational r with 0 <= r < 7**-m.

    Represents r = sum(digits[j] / 7**(m+1+j)); ``exact`` is True when the
    expansion terminates within the prefix.  Stands in for the irrational
    shift parameters at desk scale: anything that would need digits beyond
    the prefix must fail loudly (DigitPrefixExhausted), never guess.
    """

    m: int
    digits: tuple[int, ...]
    exact: bool

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(self.digits))
        if self.m < 0:
            raise PreconditionError("base exponent m must be a natural")
        if not self.digits:
            raise PreconditionError("digit stream must be nonempty")
        if any(d < 0 or d > 6 for d in self.digits):
            raise PreconditionError("digits must lie in 0..6")

    @property
    def value(self) -> Fraction:
        """The rational the prefix denotes (exact reconstruction)."""
        num = 0
        for d in self.digits:
            num = num * 7 + d
        return Fraction(num, 7 ** (self.m + len(self.digits)))

    def to_json(self) -> dict:
        return {"m": self.m, "digits": list(self.digits), "exact": self.exact}

    @classmethod
    def from_json(cls, obj: dict) -> "Digit7Stream":
        return cls(int(obj["m"]), tuple(int(d) for d in obj["digits"]), bool(obj["exact"]))


def digits_base7(r: Fraction, m: int, count: int) -> Digit7Stream:
    """First ``count`` base-7 digits of r * 7**m after the point.

    Requires 0 < r < 7**-m.  ``exact`` is set when the remainder vanishes
    within the prefix.
    """
    if count < 1:
        raise PreconditionError("count must be >= 1")
    if not (0 < r < seventh_power(m)):
        raise PreconditionError(f"r={r} outside (0, 7**-{m})")
    x = r * 7**m
    num, den = x.numerator, x.denominator
    digits = []
    for _ in range(count):
        num *= 7
        d, num = divmod(num, den)
        digits.append(d)
    return Digit7Stream(m=m, digits=tuple(digits), exact=(num == 0))
