"""Structured subsets of omega with exact density and prefix counting.

An OmegaSet is a finite modification of a finite union of arithmetic
progressions: finite_part + progressions - excluded.  Every index set used
by the constructions (dyadic partitions, scaled copies of omega+1, greedy
avoid-sets) is of this form, so asymptotic density is an exact rational.
Adversarial sparse sets are admitted as explicit finite prefixes with a
declared window.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .exact import PreconditionError


@dataclass(frozen=True)
class Progression:
    """{start, start+step, start+2*step, ...}"""

    start: int
    step: int

    def __post_init__(self):
        if self.start < 0:
            raise PreconditionError("progression start must be a natural")
        if self.step < 1:
            raise PreconditionError("progression step must be positive")

    def contains(self, n: int) -> bool:
        return n >= self.start and (n - self.start) % self.step == 0


def _merge_crt(r1: int, l1: int, r2: int, l2: int) -> tuple[int, int] | None:
    """Intersect n = r1 mod l1 with n = r2 mod l2; None when inconsistent."""
    g = math.gcd(l1, l2)
    if (r2 - r1) % g != 0:
        return None
    lcm = l1 // g * l2
    t = ((r2 - r1) // g * pow(l1 // g, -1, l2 // g)) % (l2 // g) if l2 != g else 0
    r = (r1 + l1 * t) % lcm
    return r, lcm


def _subset_count(progs: tuple[Progression, ...], j: int) -> int:
    """card of the progression intersection within [0, j] (CRT-based)."""
    r, lcm = progs[0].start % progs[0].step, progs[0].step
    lo = max(p.start for p in progs)
    for p in progs[1:]:
        merged = _merge_crt(r, lcm, p.start % p.step, p.step)
        if merged is None:
            return 0
        r, lcm = merged
    first = r + ((lo - r + lcm - 1) // lcm) * lcm if lo > r else r
    if first > j:
        return 0
    return (j - first) // lcm + 1


def _subset_density(progs: tuple[Progression, ...]) -> Fraction:
    r, lcm = progs[0].start % progs[0].step, progs[0].step
    for p in progs[1:]:
        merged = _merge_crt(r, lcm, p.start % p.step, p.step)
        if merged is None:
            return Fraction(0)
        r, lcm = merged
    return Fraction(1, lcm)


@dataclass(frozen=True)
class OmegaSet:
    """finite_part union progressions, minus excluded."""

    finite_part: frozenset[int] = frozenset()
    progressions: tuple[Progression, ...] = ()
    excluded: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "finite_part", frozenset(self.finite_part))
        object.__setattr__(self, "progressions", tuple(self.progressions))
        object.__setattr__(self, "excluded", frozenset(self.excluded))
        if any(n < 0 for n in self.finite_part) or any(n < 0 for n in self.excluded):
            raise PreconditionError("omega-set elements must be naturals")
        if self.finite_part & self.excluded:
            raise PreconditionError("excluded must be disjoint from finite_part")

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls) -> "OmegaSet":
        return cls()

    @classmethod
    def naturals(cls) -> "OmegaSet":
        return cls(progressions=(Progression(0, 1),))

    @classmethod
    def omega_plus_one(cls) -> "OmegaSet":
        """omega+1 = {1, 2, 3, ...}"""
        return cls(progressions=(Progression(1, 1),))

    @classmethod
    def multiples(cls, k: int) -> "OmegaSet":
        """k*(omega+1) = {k, 2k, 3k, ...}"""
        return cls(progressions=(Progression(k, k),))

    @classmethod
    def progression(cls, start: int, step: int) -> "OmegaSet":
        return cls(progressions=(Progression(start, step),))

    @classmethod
    def from_elements(cls, elements) -> "OmegaSet":
        return cls(finite_part=frozenset(elements))

    # -- membership & enumeration ------------------------------------------

    def contains(self, n: int) -> bool:
        if n in self.finite_part:
            return True
        if n in self.excluded:
            return False
        return any(p.contains(n) for p in self.progressions)

    def __contains__(self, n: int) -> bool:
        return self.contains(n)

    def is_finite(self) -> bool:
        return not self.progressions

    def min_element(self) -> int:
        """Least member; error on the empty set."""
        best = min(self.finite_part) if self.finite_part else None
        for p in self.progressions:
            n = p.start
            while n in self.excluded and (best is None or n < best):
                n += p.step
            if best is None or n < best:
                best = n
        if best is None:
            raise PreconditionError("empty omega-set has no minimum")
        return best

    def elements_up_to(self, j: int) -> list[int]:
        """Sorted members <= j (explicit scan; fine at desk-scale windows)."""
        out: set[int] = set()
        for p in self.progressions:
            out.update(range(p.start, j + 1, p.step))
        out -= self.excluded
        out.update(n for n in self.finite_part if n <= j)
        return sorted(out)

    def iter_elements(self):
        """Ascending member iterator (heap-merged progressions)."""
        import heapq

        heap: list[tuple[int, int]] = []  # (value, progression index); -1 = finite
        for idx, p in enumerate(self.progressions):
            heapq.heappush(heap, (p.start, idx))
        for n in sorted(self.finite_part):
            heapq.heappush(heap, (n, -1))
        last = None
        while heap:
            n, idx = heapq.heappop(heap)
            if idx >= 0:
                heapq.heappush(heap, (n + self.progressions[idx].step, idx))
            if n == last:
                continue
            last = n
            if idx >= 0 and n in self.excluded and n not in self.finite_part:
                continue
            yield n

    def shift_down(self, delta: int) -> "OmegaSet":
        """{n - delta : n in S}; requires min S >= delta."""
        if any(n < delta for n in self.finite_part):
            raise PreconditionError("shift_down would produce negative elements")
        if any(p.start < delta for p in self.progressions):
            raise PreconditionError("shift_down would produce negative elements")
        return OmegaSet(
            finite_part=frozenset(n - delta for n in self.finite_part),
            progressions=tuple(Progression(p.start - delta, p.step) for p in self.progressions),
            excluded=frozenset(n - delta for n in self.excluded if n >= delta),
        )

    def union(self, other: "OmegaSet") -> "OmegaSet":
        # an exclusion survives only where neither operand supplies the point
        excl = frozenset(
            {x for x in self.excluded if not other.contains(x)}
            | {x for x in other.excluded if not self.contains(x)}
        )
        finite = frozenset(self.finite_part | other.finite_part)
        return OmegaSet(
            finite_part=finite,
            progressions=self.progressions + other.progressions,
            excluded=excl - finite,
        )

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "finite": sorted(self.finite_part),
            "progressions": [{"start": p.start, "step": p.step} for p in self.progressions],
            "excluded": sorted(self.excluded),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OmegaSet":
        return cls(
            finite_part=frozenset(obj.get("finite", ())),
            progressions=tuple(
                Progression(int(p["start"]), int(p["step"])) for p in obj.get("progressions", ())
            ),
            excluded=frozenset(obj.get("excluded", ())),
        )


@dataclass(frozen=True)
class DensityReport:
    """Empirical liminf/limsup bracket of card(S & (j+1))/(j+1) over a window."""

    window_end: int
    prefix_ratios: dict[int, Fraction] = field(compare=False)
    lower_estimate: Fraction = Fraction(0)
    upper_estimate: Fraction = Fraction(0)
    exact_density: Fraction | None = None

    def to_json(self) -> dict:
        from .exact import rational_to_json

        return {
            "window_end": self.window_end,
            "prefix_ratios": {
                str(j): rational_to_json(r) for j, r in sorted(self.prefix_ratios.items())
            },
            "lower_estimate": rational_to_json(self.lower_estimate),
            "upper_estimate": rational_to_json(self.upper_estimate),
            "exact_density": (
                rational_to_json(self.exact_density) if self.exact_density is not None else None
            ),
        }


def count_prefix(s: OmegaSet, j: int) -> int:
    """Exact card(S & {0..j}) via inclusion-exclusion over progressions."""
    if j < 0:
        return 0
    progs = s.progressions
    total = 0
    for mask in range(1, 1 << len(progs)):
        subset = tuple(progs[i] for i in range(len(progs)) if mask >> i & 1)
        sign = -1 if bin(mask).count("1") % 2 == 0 else 1
        total += sign * _subset_count(subset, j)
    in_union = lambda n: any(p.contains(n) for p in progs)
    total += sum(1 for n in s.finite_part if n <= j and not in_union(n))
    total -= sum(1 for n in s.excluded if n <= j and in_union(n))
    return total


def density_exact(s: OmegaSet) -> Fraction:
    """Exact asymptotic density; finite modifications contribute nothing."""
    progs = s.progressions
    total = Fraction(0)
    for mask in range(1, 1 << len(progs)):
        subset = tuple(progs[i] for i in range(len(progs)) if mask >> i & 1)
        sign = -1 if bin(mask).count("1") % 2 == 0 else 1
        total += sign * _subset_density(subset)
    return total


def density_estimate(s: OmegaSet, j_max: int, samples: int = 32) -> DensityReport:
    """Min/max prefix ratio over a deterministic grid in [j_max/2, j_max].

    The grid sits in the upper half of the window to suppress
    initial-segment noise; evenly spaced, endpoints included.
    """
    if not (j_max >= samples >= 1):
        raise PreconditionError("need j_max >= samples >= 1")
    lo = j_max // 2
    if samples == 1:
        grid = [j_max]
    else:
        grid = sorted({lo + (j_max - lo) * t // (samples - 1) for t in range(samples)})
    ratios = {j: Fraction(count_prefix(s, j), j + 1) for j in grid}
    values = list(ratios.values())
    return DensityReport(
        window_end=j_max,
        prefix_ratios=ratios,
        lower_estimate=min(values),
        upper_estimate=max(values),
        exact_density=density_exact(s),
    )


def partition_dyadic(m: int, j_count: int) -> list[OmegaSet]:
    """The dyadic partition pieces 2**(m+j+1) + 2**(m+j+2)*omega, j < j_count.

    Pairwise disjoint; together with all later pieces they exhaust
    2**(m+1)*(omega+1).
    """
    return [OmegaSet.progression(2 ** (m + j + 1), 2 ** (m + j + 2)) for j in range(j_count)]


def dyadic_piece_index(n: int, m: int) -> int:
    """The j with n in the piece 2**(m+j+1) + 2**(m+j+2)*omega (n a positive
    multiple of 2**(m+1)); derived from the dyadic valuation of n."""
    if n <= 0 or n % 2 ** (m + 1) != 0:
        raise PreconditionError(f"{n} not in 2**{m + 1}*(omega+1)")
    v = (n & -n).bit_length() - 1
    return v - m - 1


# -- CLI micro-syntax ------------------------------------------------------

_PROG_RE = re.compile(r"^(\d+)\s*\+\s*(\d+)\s*w$")
_SCALED_RE = re.compile(r"^(\d+)\s*\*\s*\(\s*w\s*\+\s*1\s*\)$")


def parse_omega_set(text: str) -> OmegaSet:
    """Parse the compact omega-set notation.

    Terms joined by "|": "a+qw" (progression), "(w+1)", "k*(w+1)", "w",
    "{1,5,9}" (finite).
    """
    result = OmegaSet.empty()
    for term in text.split("|"):
        term = term.strip()
        if not term:
            raise PreconditionError("empty term in omega-set expression")
        if term == "w":
            part = OmegaSet.naturals()
        elif re.fullmatch(r"\(\s*w\s*\+\s*1\s*\)", term):
            part = OmegaSet.omega_plus_one()
        elif m := _SCALED_RE.match(term):
            part = OmegaSet.multiples(int(m.group(1)))
        elif m := _PROG_RE.match(term):
            part = OmegaSet.progression(int(m.group(1)), int(m.group(2)))
        elif term.startswith("{") and term.endswith("}"):
            inner = term[1:-1].strip()
            elems = [int(x) for x in inner.split(",")] if inner else []
            part = OmegaSet.from_elements(elems)
        else:
            raise PreconditionError(f"cannot parse omega-set term {term!r}")
        result = result.union(part)
    return result
