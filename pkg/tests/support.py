"""Shared oracles and generators for the test suite.

Everything here is deliberately the *slow, definitional* route: plain loops
that unfold the defining formulas, used to cross-check the optimized
library paths.
"""

from __future__ import annotations

import random
from fractions import Fraction

from microcover import (
    CoverAttempt,
    Digit7Stream,
    Interval,
    OmegaSet,
    digits_base7,
    intersects,
    shift,
)
from microcover.constructions import MicroXApprox, nondegenerate_prefix
from microcover.covers import GeometricConstraint, derive_subseed
from microcover.spacing import PlacedFamily, SpacingTree


def brute_membership_count(s: OmegaSet, j: int) -> int:
    return sum(1 for n in range(j + 1) if s.contains(n))


def brute_Y(placed: PlacedFamily, cover: CoverAttempt, window: int) -> set[int]:
    """Definitional private-hit set: nested loops, no index structures."""
    members = [(p.a, p.interval) for p in placed.members if p.a <= window]
    out = set()
    for a, iv in members:
        good = True
        for d, J in cover.intervals.items():
            if d > window or not intersects(iv, J):
                continue
            if any(a2 != a and intersects(iv2, J) for a2, iv2 in members):
                good = False
                break
        if good:
            out.add(a)
    return out


def brute_Z(placed, cover, shifts, window) -> set[int]:
    members = [(p.a, p.interval) for p in placed.members if p.a <= window]
    values = [s.value if isinstance(s, Digit7Stream) else Fraction(s) for s in shifts]
    out = set()
    for a in brute_Y(placed, cover, window):
        iv = placed.member(a).interval
        good = True
        for d, J in cover.intervals.items():
            if d > window or not intersects(iv, J):
                continue
            for r in values:
                if any(intersects(shift(iv2, r), J) for _, iv2 in members):
                    good = False
        if good:
            out.add(a)
    return out


def brute_witness(placed: PlacedFamily, cover: CoverAttempt, window: int) -> int | None:
    """Least placed a whose interval misses every J_d with d < a."""
    for p in placed.members:
        if p.a > window:
            break
        if all(
            not intersects(p.interval, J)
            for d, J in cover.intervals.items()
            if d < p.a and d <= window
        ):
            return p.a
    return None


def tree_invariant_violations(tree: SpacingTree) -> list[str]:
    """Exact-arithmetic check of every structural invariant of the hierarchy."""
    from microcover.exact import seventh_power

    bad = []
    for k in range(tree.depth + 1):
        unit = seventh_power(k + tree.m + 1)
        nodes = tree.levels[k]
        if len(nodes) != 4 * 3**k:
            bad.append(f"level {k}: node count {len(nodes)}")
        for j, iv in enumerate(nodes):
            if iv.length != unit:
                bad.append(f"K^{k}_{j}: length {iv.length}")
            parent = tree.root if k == 0 else tree.levels[k - 1][j % 3**k]
            if not parent.contains(iv):
                bad.append(f"K^{k}_{j}: not inside its parent")
        # anchors: inf-anchored child l, sup-anchored child 3^k + l
        for l in range(3**k):
            parent = tree.root if k == 0 else tree.levels[k - 1][l]
            if nodes[l].lo != parent.lo:
                bad.append(f"K^{k}_{l}: inf anchor broken")
            if nodes[3**k + l].hi != parent.hi:
                bad.append(f"K^{k}_{3 ** k + l}: sup anchor broken")
        # same-parent siblings are spaced at least one child length apart
        by_parent: dict[int, list[Interval]] = {}
        for j, iv in enumerate(nodes):
            by_parent.setdefault(j % 3**k if k else 0, []).append(iv)
        for sibs in by_parent.values():
            sibs = sorted(sibs, key=lambda iv: iv.lo)
            for a, b in zip(sibs, sibs[1:]):
                if b.lo - a.hi < unit:
                    bad.append(f"level {k}: sibling gap {b.lo - a.hi} < {unit}")
    return bad


def tree_pairwise_distance_ok(tree: SpacingTree, level: int) -> bool:
    """Full quadratic check: every two level nodes at distance >= their length."""
    from microcover.exact import distance, seventh_power

    nodes = tree.levels[level]
    unit = seventh_power(level + tree.m + 1)
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if distance(nodes[i], nodes[j]) < unit:
                return False
    return True


# -- shift experiment harness -----------------------------------------------


def make_shift_streams(seed: int, count: int = 4, prefix: int = 70) -> list[Digit7Stream]:
    """Clustered shift family c, c+q, ... with busy digit prefixes and
    nondegenerate pairwise differences; deterministic retry on the seed."""
    for attempt in range(64):
        rng = random.Random(derive_subseed(seed, 1000 + attempt))
        c = Digit7Stream(0, tuple([0] + [rng.randrange(1, 6) for _ in range(58)]), True).value
        q = Digit7Stream(0, tuple([0, 0, 0] + [rng.randrange(1, 6) for _ in range(56)]), True).value
        streams = [digits_base7(c + i * q, 0, prefix) for i in range(count)]
        if not all(s.exact for s in streams):
            continue
        ok = True
        for i in range(count):
            for j in range(i + 1, count):
                diff = abs(streams[i].value - streams[j].value)
                if not (0 < diff < 1) or not nondegenerate_prefix(
                    digits_base7(diff, 0, 64).digits
                ):
                    ok = False
        if ok:
            return streams
    raise RuntimeError("no nondegenerate shift family found")


def premise_forcing_cover(
    x: MicroXApprox, streams: list[Digit7Stream], window: int
) -> CoverAttempt:
    """Cover engineered so every shifted family member meets some J_k with
    k < a: one blanket interval over every shifted copy of the smallest
    member, then one degenerate point-hit per (shift, member) at fresh
    indices below the member."""
    values = [s.value for s in streams]
    fam = sorted(j for j in x.levels[1] if j % 4 == 2 and j <= window)
    smallest = x.levels[1][fam[0]]
    intervals = {0: Interval(values[0] + smallest.lo, values[-1] + smallest.hi)}
    for t, a in enumerate(fam[1:], start=1):
        iv = x.levels[1][a]
        mid = (iv.lo + iv.hi) / 2
        for i, r in enumerate(values):
            k = len(values) * (t - 1) + 1 + i
            intervals[k] = Interval(r + mid, r + mid)
    return CoverAttempt(
        D=OmegaSet.from_elements(intervals.keys()),
        intervals=intervals,
        constraint=GeometricConstraint(Fraction(1, 7)),
        window_end=window,
    )
