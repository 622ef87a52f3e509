"""Cover attempts and their verification machinery.

A CoverAttempt is a finite window of an indexed interval sequence (J_d) for
d in a structured index set D, together with a length-constraint family:
geometric (|J_d| <= eps**(d+1), decided exactly) or logarithmic
(|J_d| <= eps**ln(d+2), decided by directed-rounding precision escalation
with an explicit indeterminate status at the precision cap).
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Callable

from mpmath.libmp import from_int, mpf_log, to_rational

from .exact import (
    Interval,
    PreconditionError,
    WindowInsufficientError,
    distance,
    intersects,
    rational_from_json,
    rational_to_json,
    seventh_power,
)
from .omega import OmegaSet, count_prefix, density_estimate, density_exact

if TYPE_CHECKING:
    from .spacing import PlacedFamily

OK = "ok"
VIOLATION = "violation"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class GeometricConstraint:
    """|J_d| <= eps**(d+1); decided by exact rational comparison."""

    eps: Fraction
    kind: str = field(default="geometric", init=False)

    def bound(self, d: int) -> Fraction:
        return self.eps ** (d + 1)

    def to_json(self) -> dict:
        return {"kind": self.kind, "eps": rational_to_json(self.eps)}


@dataclass(frozen=True)
class LogarithmicConstraint:
    """|J_d| <= eps**ln(d+2); transcendental bound, directed rounding."""

    eps: Fraction
    kind: str = field(default="logarithmic", init=False)

    def __post_init__(self):
        if not (0 < self.eps < 1):
            raise PreconditionError("logarithmic constraint needs 0 < eps < 1")

    def to_json(self) -> dict:
        return {"kind": self.kind, "eps": rational_to_json(self.eps)}


Constraint = GeometricConstraint | LogarithmicConstraint


def constraint_from_json(obj: dict) -> Constraint:
    eps = rational_from_json(obj["eps"])
    if obj["kind"] == "geometric":
        return GeometricConstraint(eps)
    if obj["kind"] == "logarithmic":
        return LogarithmicConstraint(eps)
    raise PreconditionError(f"unknown constraint kind {obj['kind']!r}")


@dataclass(frozen=True)
class CoverAttempt:
    """Finite window of (J_d)_{d in D} under a length-constraint family.

    Indices of D beyond the stored window are treated as absent; the window
    itself is part of the value and is echoed in every report.
    """

    D: OmegaSet
    intervals: dict[int, Interval] = field(compare=False)
    constraint: Constraint = GeometricConstraint(Fraction(1, 7))
    window_end: int = 0

    def __post_init__(self):
        object.__setattr__(self, "intervals", dict(self.intervals))
        for d in self.intervals:
            if d < 0 or d > self.window_end:
                raise PreconditionError(f"stored index {d} outside window 0..{self.window_end}")
            if not self.D.contains(d):
                raise PreconditionError(f"stored index {d} not a member of D")

    def sorted_items(self) -> list[tuple[int, Interval]]:
        return sorted(self.intervals.items())

    def to_json(self) -> dict:
        return {
            "D": self.D.to_json(),
            "constraint": self.constraint.to_json(),
            "window_end": self.window_end,
            "intervals": [{"d": d, "J": J.to_json()} for d, J in self.sorted_items()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CoverAttempt":
        return cls(
            D=OmegaSet.from_json(obj["D"]),
            intervals={int(e["d"]): Interval.from_json(e["J"]) for e in obj["intervals"]},
            constraint=constraint_from_json(obj["constraint"]),
            window_end=int(obj["window_end"]),
        )


@dataclass(frozen=True)
class ValidationReport:
    statuses: dict[int, str] = field(compare=False)
    precision_bits: int = 0

    @property
    def all_ok(self) -> bool:
        return all(s == OK for s in self.statuses.values())

    @property
    def violations(self) -> list[int]:
        return sorted(d for d, s in self.statuses.items() if s == VIOLATION)

    @property
    def indeterminate(self) -> list[int]:
        return sorted(d for d, s in self.statuses.items() if s == INDETERMINATE)

    def to_json(self) -> dict:
        return {
            "statuses": {str(d): s for d, s in sorted(self.statuses.items())},
            "precision_bits": self.precision_bits,
        }


@lru_cache(maxsize=4096)
def _ln_bounds(n: int, prec: int) -> tuple[Fraction, Fraction]:
    """Certified rational bracket of ln(n) for an integer n >= 1."""
    if n == 1:
        return Fraction(0), Fraction(0)
    x = from_int(n)
    lo = Fraction(*to_rational(mpf_log(x, prec, "d")))
    hi = Fraction(*to_rational(mpf_log(x, prec, "u")))
    return lo, hi


def _ln_rational_bounds(r: Fraction, prec: int) -> tuple[Fraction, Fraction]:
    plo, phi = _ln_bounds(r.numerator, prec)
    qlo, qhi = _ln_bounds(r.denominator, prec)
    return plo - qhi, phi - qlo


def _interval_mul(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]):
    products = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(products), max(products)


def _log_status(length: Fraction, eps: Fraction, d: int, precision_cap: int) -> tuple[str, int]:
    """Decide length <= eps**ln(d+2) via ln(length) <= ln(eps)*ln(d+2)."""
    if length == 0:
        return OK, 0
    prec = 64
    while prec <= precision_cap:
        lhs = _ln_rational_bounds(length, prec)
        rhs = _interval_mul(_ln_rational_bounds(eps, prec), _ln_bounds(d + 2, prec))
        if lhs[1] <= rhs[0]:
            return OK, prec
        if lhs[0] > rhs[1]:
            return VIOLATION, prec
        prec *= 2
    return INDETERMINATE, precision_cap


def validate(cover: CoverAttempt, precision_cap: int = 256) -> ValidationReport:
    """Per-index length-constraint check.

    Geometric bounds are exact rational comparisons and never indeterminate;
    logarithmic bounds escalate precision up to the cap and report
    indeterminate rather than letting rounding fabricate a verdict.
    """
    statuses: dict[int, str] = {}
    max_prec = 0
    c = cover.constraint
    for d, J in cover.intervals.items():
        if isinstance(c, GeometricConstraint):
            statuses[d] = OK if J.length <= c.bound(d) else VIOLATION
        else:
            statuses[d], prec = _log_status(J.length, c.eps, d, precision_cap)
            max_prec = max(max_prec, prec)
    return ValidationReport(statuses=statuses, precision_bits=max_prec)


def _region_gap(pieces: list[Interval], r: Interval) -> Interval | None:
    """Leftmost maximal uncovered gap of r (closure), or None when covered.

    ``pieces`` must be sorted by lo; closed-interval semantics, so pieces
    touching at a point connect.
    """
    n = len(pieces)
    i = 0
    pos = r.lo
    reach: Fraction | None = None  # sup of the covered prefix [r.lo, reach]
    while True:
        while i < n and pieces[i].lo <= pos:
            if reach is None or pieces[i].hi > reach:
                reach = pieces[i].hi
            i += 1
        if reach is None or reach < pos:
            nxt = pieces[i].lo if i < n else None
            gap_hi = r.hi if (nxt is None or nxt > r.hi) else nxt
            return Interval(pos, gap_hi)
        if reach >= r.hi:
            return None
        if reach == pos:
            # covered exactly to pos and nothing starts at or before it
            nxt = pieces[i].lo if i < n else None
            gap_hi = r.hi if (nxt is None or nxt > r.hi) else nxt
            return Interval(pos, gap_hi)
        pos = reach


def covers_region(
    cover: CoverAttempt, region: list[Interval]
) -> tuple[bool, Interval | None]:
    """Does the union of stored cover intervals contain every region interval?

    On failure returns the closure of the leftmost maximal uncovered gap as
    a certificate (deterministic: leftmost region interval, leftmost gap).
    """
    pieces = sorted(cover.intervals.values(), key=lambda iv: (iv.lo, iv.hi))
    for r in sorted(region, key=lambda iv: iv.lo):
        gap = _region_gap(pieces, r)
        if gap is not None:
            return False, gap
    return True, None


@dataclass(frozen=True)
class CorollaryCertificate:
    """Least placed index a with I_a disjoint from every J_d, d in D & a,
    plus the full list of exactly re-checked disjointness facts."""

    witness: int
    checks: tuple[tuple[int, int], ...]  # (a, d) pairs verified disjoint
    hypothesis_ok: bool
    density_lower_estimate: Fraction
    density_threshold: Fraction
    window: int

    def to_json(self) -> dict:
        return {
            "witness": self.witness,
            "checks": [{"a": a, "d": d, "disjoint": True} for a, d in self.checks],
            "hypothesis_ok": self.hypothesis_ok,
            "density_lower_estimate": rational_to_json(self.density_lower_estimate),
            "density_threshold": rational_to_json(self.density_threshold),
            "window": self.window,
        }


def corollary_witness(
    placed: "PlacedFamily", cover: CoverAttempt, window: int | None = None, jobs: int = 1
) -> CorollaryCertificate:
    """Witness search for the low-density-covers-must-miss property.

    Records (not proves) the window hypothesis: the lower-density estimate
    of D over the window against density(A)/4.  Window exhaustion raises
    WindowInsufficientError; it is never a refutation.  jobs > 1 splits the
    blocking scan over index ranges; the merge is order-independent.
    """
    if window is None:
        window = cover.window_end
    threshold = density_exact(placed.A) / 4
    report = density_estimate(cover.D, window, samples=min(32, max(1, window)))
    hypothesis_ok = report.lower_estimate < threshold

    def blocked_for(items) -> set[int]:
        out: set[int] = set()
        for d, J in items:
            if d > window:
                continue
            for a in placed.hits(J, window):
                if d < a:
                    out.add(a)
        return out

    items = cover.sorted_items()
    if jobs <= 1 or len(items) < 2:
        blocked = blocked_for(items)
    else:
        from concurrent.futures import ThreadPoolExecutor

        size = (len(items) + jobs - 1) // jobs
        chunks = [items[i : i + size] for i in range(0, len(items), size)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocked = set().union(*pool.map(blocked_for, chunks))

    witness = None
    for member in placed.members:
        if member.a > window:
            break
        if member.a not in blocked:
            witness = member.a
            interval = member.interval
            break
    if witness is None:
        raise WindowInsufficientError(
            "no witness within window",
            telemetry={
                "window": window,
                "blocked": len(blocked),
                "density_lower_estimate": str(report.lower_estimate),
                "density_threshold": str(threshold),
            },
        )

    checks = []
    for d, J in cover.sorted_items():
        if d < witness and d <= window:
            if intersects(interval, J):
                raise AssertionError("witness certificate failed exact re-check")
            checks.append((witness, d))
    return CorollaryCertificate(
        witness=witness,
        checks=tuple(checks),
        hypothesis_ok=hypothesis_ok,
        density_lower_estimate=report.lower_estimate,
        density_threshold=threshold,
        window=window,
    )


def counting_witness_exists(placed: "PlacedFamily", cover: CoverAttempt, y_set, j: int) -> bool:
    """The counting fact behind the witness search: when card(D & (j+1)) <
    card(Y & (j+1)), some a in Y & (j+1) has I_a disjoint from all J_d, d <= j."""
    y_upto = [m for m in placed.members if m.a <= j and m.a in y_set]
    for m in y_upto:
        if all(
            not intersects(m.interval, J) for d, J in cover.intervals.items() if d <= j
        ):
            return True
    return False


# -- adversary generators ----------------------------------------------------


def derive_subseed(seed: int, counter: int) -> int:
    """Counter-based sub-seed derivation; trial i is reproducible alone."""
    digest = hashlib.sha256(f"{seed}/{counter}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


BudgetFn = Callable[[int], int]


def budget_from_spec(spec: dict) -> BudgetFn:
    """Prefix-cardinality budget j -> max card(D & (j+1)).

    kinds: "sqrt" (floor sqrt j), "linear" (floor j*num/den), "constant",
    "unbounded".
    """
    kind = spec.get("kind", "unbounded")
    if kind == "sqrt":
        return lambda j: math.isqrt(max(0, j))
    if kind == "linear":
        num, den = int(spec["num"]), int(spec["den"])
        return lambda j: j * num // den
    if kind == "constant":
        value = int(spec["value"])
        return lambda j: value
    if kind == "unbounded":
        return lambda j: j + 1
    raise PreconditionError(f"unknown budget kind {kind!r}")


def _budget_indices(budget: BudgetFn, m: int, window_end: int, limit: int | None = None) -> list[int]:
    """Greedy earliest indices >= m respecting the prefix budget exactly.

    Budgets are assumed nondecreasing, so adding d is safe iff the new count
    fits the budget at d itself.
    """
    out: list[int] = []
    for d in range(m, window_end + 1):
        if limit is not None and len(out) >= limit:
            break
        if len(out) + 1 <= budget(d):
            out.append(d)
    if limit is not None and len(out) < limit:
        raise PreconditionError(
            f"budget infeasible: only {len(out)} of {limit} indices fit in window"
        )
    return out


def _grid_point(rng: random.Random, lo: Fraction, hi: Fraction, grain: int) -> Fraction:
    """Uniform point of [lo, hi] on an exact 7-adic grid."""
    span = hi - lo
    steps = 7**grain
    return lo + span * Fraction(rng.randrange(steps + 1), steps)


def adversary_generate(strategy: str, params: dict, seed: int) -> CoverAttempt:
    """Deterministic seeded cover generators; output always passes validate.

    strategies:
      greedy-hit      target placed intervals in length order; each J_d is
                      anchored at a target's left endpoint with the full
                      allowed length.
      gap-straddle    each J_d spans the gap between two adjacent placed
                      intervals whenever its allowed length reaches across,
                      touching both (the strongest anti-privacy pressure).
      density-budget  earliest indices the prefix budget admits; positions
                      seeded on an exact 7-adic grid inside the ambient.
      random          randomly selected indices (still budget-respecting)
                      and random positions.
    """
    rng = random.Random(derive_subseed(seed, 0))
    window_end = int(params["window_end"])
    m = int(params.get("m", 0))
    eps = params.get("eps", Fraction(1, 7))
    constraint = params.get("constraint") or GeometricConstraint(eps)
    budget = budget_from_spec(params.get("budget", {"kind": "unbounded"}))
    ambient = params.get("ambient", Interval(Fraction(0), Fraction(1)))
    max_count = params.get("max_count")

    intervals: dict[int, Interval] = {}
    if strategy == "greedy-hit":
        targets = list(params["targets"])  # (a, Interval) pairs, a ascending
        indices = _budget_indices(budget, m, window_end, limit=None)
        for (a, tgt), d in zip(targets, indices):
            if max_count is not None and len(intervals) >= max_count:
                break
            length = constraint.bound(d) if isinstance(constraint, GeometricConstraint) else seventh_power(d + 1)
            intervals[d] = Interval(tgt.lo, tgt.lo + length)
    elif strategy == "gap-straddle":
        from bisect import bisect_right

        targets = sorted((iv for _, iv in params["targets"]), key=lambda iv: iv.lo)
        gaps = sorted(
            ((right.lo - left.hi, left.hi) for left, right in zip(targets, targets[1:]) if right.lo > left.hi),
        )
        widths = [g[0] for g in gaps]
        indices = _budget_indices(budget, m, window_end, limit=None)
        for d in indices:
            if max_count is not None and len(intervals) >= max_count:
                break
            allowed = constraint.bound(d) if isinstance(constraint, GeometricConstraint) else seventh_power(d + 1)
            feasible = bisect_right(widths, allowed)
            if feasible == 0:
                # nothing left to straddle at this length; hit a seeded target
                tgt = targets[rng.randrange(len(targets))]
                intervals[d] = Interval(tgt.lo, tgt.lo + allowed)
                continue
            lo = gaps[rng.randrange(feasible)][1]
            intervals[d] = Interval(lo, lo + allowed)
    elif strategy in ("density-budget", "random"):
        indices = _budget_indices(budget, m, window_end, limit=None)
        if strategy == "random" and indices:
            take = rng.randrange(1, len(indices) + 1)
            indices = sorted(rng.sample(indices, take))
        for d in indices:
            if max_count is not None and len(intervals) >= max_count:
                break
            length = constraint.bound(d) if isinstance(constraint, GeometricConstraint) else seventh_power(d + 1)
            grain = min(d + 2, 24)
            lo = _grid_point(rng, ambient.lo, ambient.hi - min(length, ambient.length), grain)
            intervals[d] = Interval(lo, lo + length)
    else:
        raise PreconditionError(f"unknown adversary strategy {strategy!r}")

    D = OmegaSet.from_elements(intervals.keys())
    cover = CoverAttempt(D=D, intervals=intervals, constraint=constraint, window_end=window_end)
    report = validate(cover)
    if not report.all_ok:
        raise AssertionError("generated adversary cover failed validation")
    return cover
