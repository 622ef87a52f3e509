"""The spacing construction: K-hierarchy, interval placement, Y/Z selection.

Geometry is fixed at base 1/7.  Each node of the hierarchy splits into four
children occupying, left to right, the child-index slots (l, 2*3^k+l,
3*3^k+l, 3^k+l); four child lengths plus three equal gaps exhaust the parent
exactly (4 + 3 = 7 sevenths), so the placement is forced once the two
endpoint anchors are fixed.  Terminal ("K-family") nodes are those with
index 3*3^i <= j < 4*3^i at level i; they occupy the third quarter of their
parent and acquire no children.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .covers import CoverAttempt
from .exact import (
    Digit7Stream,
    Interval,
    PreconditionError,
    DigitPrefixExhausted,
    intersects,
    seventh_power,
    shift,
)
from .omega import OmegaSet, density_exact

# child slot (j // 3^k) -> left offset within the parent, in child lengths
_SLOT_OFFSET = {0: 0, 1: 6, 2: 2, 3: 4}


def t_value(n: int) -> int:
    """Cumulative terminal count minus one: t_n = (3^(n+1) - 3) / 2."""
    return (3 ** (n + 1) - 3) // 2


def block_size(n: int) -> int:
    return 3 ** (n + 1)


def depth_for_terminals(count: int) -> int:
    """Least tree depth whose terminal count t_depth + 1 reaches ``count``."""
    depth = 0
    while t_value(depth) + 1 < count:
        depth += 1
    return depth


@dataclass(frozen=True)
class SpacingTree:
    """The K-hierarchy over a root of length 7**-m, canonically placed."""

    root: Interval
    m: int
    depth: int
    levels: tuple[tuple[Interval, ...], ...] = field(compare=False)

    def node(self, i: int, j: int) -> Interval:
        return self.levels[i][j]

    def level_count(self, i: int) -> int:
        return 4 * 3**i

    @staticmethod
    def is_terminal_index(i: int, j: int) -> bool:
        return 3 * 3**i <= j < 4 * 3**i

    def to_json(self) -> dict:
        return {
            "root": self.root.to_json(),
            "m": self.m,
            "depth": self.depth,
            "levels": [[iv.to_json() for iv in level] for level in self.levels],
        }


def build_k_hierarchy(root: Interval, m: int, depth: int) -> SpacingTree:
    """Canonical K-hierarchy of the given depth inside ``root``.

    Requires |root| = 7**-m.  Level k holds 4*3^k nodes of length
    7**-(k+m+1); node j sits in parent j mod 3^k with the slot order fixed
    by the module docstring.
    """
    if root.length != seventh_power(m):
        raise PreconditionError(f"root length {root.length} != 7**-{m}")
    levels: list[tuple[Interval, ...]] = []
    for k in range(depth + 1):
        unit = seventh_power(k + m + 1)
        pow3k = 3**k
        nodes = []
        for j in range(4 * pow3k):
            parent = root if k == 0 else levels[k - 1][j % pow3k]
            lo = parent.lo + _SLOT_OFFSET[j // pow3k] * unit
            nodes.append(Interval(lo, lo + unit))
        levels.append(tuple(nodes))
    return SpacingTree(root=root, m=m, depth=depth, levels=tuple(levels))


@dataclass(frozen=True)
class KMember:
    """A terminal node of the hierarchy: level, index, and its interval."""

    level: int
    index: int
    interval: Interval


def terminal_enumeration(tree: SpacingTree) -> list[KMember]:
    """Terminals sorted by non-increasing length (level-major), ties by
    ascending index within a level."""
    out = []
    for i in range(tree.depth + 1):
        for j in range(3 * 3**i, 4 * 3**i):
            out.append(KMember(level=i, index=j, interval=tree.levels[i][j]))
    return out


@dataclass(frozen=True)
class PlacedInterval:
    a: int
    interval: Interval
    terminal: KMember


@dataclass(frozen=True)
class PlacedFamily:
    """Intervals I_a of length 7**-a, one inside each terminal, left-anchored.

    ``members`` is in placement order (a ascending).  A position-sorted view
    supports O(log n) hit queries: the placed intervals are pairwise
    disjoint, so sorting by lo sorts by hi as well.
    """

    tree: SpacingTree
    A: OmegaSet
    members: tuple[PlacedInterval, ...]
    _sorted: tuple = field(default=(), compare=False, repr=False)
    _by_a: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        order = sorted(self.members, key=lambda p: p.interval.lo)
        los = [p.interval.lo for p in order]
        his = [p.interval.hi for p in order]
        avals = [p.a for p in order]
        object.__setattr__(self, "_sorted", (los, his, avals))
        object.__setattr__(self, "_by_a", {p.a: p for p in self.members})

    def member(self, a: int) -> PlacedInterval:
        return self._by_a[a]

    def hits(self, j: Interval, window: int | None = None) -> list[int]:
        """Placed indices a (<= window) whose interval meets ``j``."""
        los, his, avals = self._sorted
        start = bisect_left(his, j.lo)
        end = bisect_right(los, j.hi)
        found = [avals[k] for k in range(start, end)]
        if window is not None:
            found = [a for a in found if a <= window]
        return found

    def a_values(self, window: int | None = None) -> list[int]:
        out = [p.a for p in self.members]
        if window is not None:
            out = [a for a in out if a <= window]
        return out

    def to_json(self) -> dict:
        return {
            "m": self.tree.m,
            "A": self.A.to_json(),
            "members": [
                {
                    "a": p.a,
                    "interval": p.interval.to_json(),
                    "terminal": {"level": p.terminal.level, "index": p.terminal.index},
                }
                for p in self.members
            ],
        }


def place_intervals(tree: SpacingTree, A: OmegaSet, count: int) -> PlacedFamily:
    """Left-anchored placement of I_{a_i} inside the i-th terminal.

    Requires min A > m and a tree deep enough for ``count`` terminals; the
    fit 7**-a_i <= |K_i| is then automatic (a_i >= m+i+1) and asserted.
    """
    if count < 1:
        raise PreconditionError("count must be >= 1")
    if A.min_element() <= tree.m:
        raise PreconditionError(f"min A = {A.min_element()} must exceed m = {tree.m}")
    terminals = terminal_enumeration(tree)
    if len(terminals) < count:
        raise PreconditionError(
            f"tree depth {tree.depth} has {len(terminals)} terminals < count {count}"
        )
    a_values = []
    for a in A.iter_elements():
        a_values.append(a)
        if len(a_values) == count:
            break
    if len(a_values) < count:
        raise PreconditionError("index set exhausted before reaching count")
    members = []
    for i, a in enumerate(a_values):
        k = terminals[i]
        if seventh_power(a) > k.interval.length:
            raise AssertionError("placement would not fit its terminal")
        members.append(
            PlacedInterval(a=a, interval=Interval(k.interval.lo, k.interval.lo + seventh_power(a)), terminal=k)
        )
    return PlacedFamily(tree=tree, A=A, members=tuple(members))


@dataclass(frozen=True)
class BlockIndex:
    """Block n of the placement: members a_{t_n + 1} .. a_{t_{n+1}}."""

    n: int
    t_n: int
    members: tuple[int, ...]


def block_index(placed: PlacedFamily, n: int) -> BlockIndex:
    lo, hi = t_value(n), t_value(n + 1)
    if len(placed.members) <= hi:
        raise PreconditionError(f"block {n} needs {hi + 1} placed members, have {len(placed.members)}")
    return BlockIndex(
        n=n, t_n=lo, members=tuple(placed.members[i].a for i in range(lo + 1, hi + 1))
    )


def members_in_node(placed: PlacedFamily, level: int, index: int) -> list[int]:
    """Placed indices whose interval lies inside node (level, index)."""
    out = []
    for p in placed.members:
        t = p.terminal
        if t.level == level and t.index == index:
            out.append(p.a)
        elif t.level > level and t.index % 3 ** (level + 1) == index:
            out.append(p.a)
    return out


# -- Y and Z ------------------------------------------------------------------


def _hit_map(placed: PlacedFamily, cover: CoverAttempt, window: int) -> dict[int, list[int]]:
    """d -> placed indices (within window) whose interval meets J_d."""
    out = {}
    for d, J in cover.intervals.items():
        if d <= window:
            out[d] = placed.hits(J, window)
    return out


def _chunks(items: list, jobs: int) -> list[list]:
    size = (len(items) + jobs - 1) // jobs
    return [items[i : i + size] for i in range(0, len(items), size)] or [[]]


def compute_Y(
    placed: PlacedFamily, cover: CoverAttempt, window: int, jobs: int = 1
) -> frozenset[int]:
    """Indices a whose interval is only ever hit "privately": every cover
    interval meeting I_a meets no other placed interval.

    With jobs > 1 the cover indices are partitioned into disjoint sub-windows
    processed concurrently; the merged result equals the sequential one.
    """

    def blocked_for(items: list[tuple[int, Interval]]) -> set[int]:
        out: set[int] = set()
        for d, J in items:
            if d > window:
                continue
            hits = placed.hits(J, window)
            if len(hits) >= 2:
                out.update(hits)
        return out

    items = cover.sorted_items()
    if jobs <= 1 or len(items) < 2:
        blocked = blocked_for(items)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocked = set().union(*pool.map(blocked_for, _chunks(items, jobs)))
    return frozenset(a for a in placed.a_values(window) if a not in blocked)


def compute_Z(
    placed: PlacedFamily,
    cover: CoverAttempt,
    shifts: list[Digit7Stream],
    window: int,
) -> frozenset[int]:
    """The Y-subset additionally shielded from every shifted copy.

    a survives iff every J_d meeting I_a is disjoint from r_i + I_{a'} for
    all shifts r_i and all placed a'.  Decided by exact rational geometry on
    the shift values; the digit prefixes come along for diagnostics.
    """
    y = compute_Y(placed, cover, window)
    shift_values = [s.value if isinstance(s, Digit7Stream) else Fraction(s) for s in shifts]
    if not shift_values:
        return y
    blocked: set[int] = set()
    for d, J in cover.intervals.items():
        if d > window:
            continue
        hits = placed.hits(J, window)
        if not hits:
            continue
        if any(placed.hits(shift(J, -r), window) for r in shift_values):
            blocked.update(hits)
    return frozenset(a for a in y if a not in blocked)


# -- q-sequences ---------------------------------------------------------------


@dataclass(frozen=True)
class QSequence:
    """Digit-position sequence q(0) < q(1) < ... extracted from a prefix.

    q(0) is the first nonzero digit position; after an odd digit the next
    position is the first later digit != 6, after an even digit the first
    later digit != 0.  ``exhausted`` marks a prefix that ran out before
    ``requested`` positions were found.
    """

    values: tuple[int, ...]
    exhausted: bool
    requested: int


def q_sequence(stream: Digit7Stream, how_many: int) -> QSequence:
    digits = stream.digits
    if not digits:
        raise PreconditionError("empty digit stream")
    values: list[int] = []
    pos = 0
    needs = "nonzero"
    while len(values) < how_many:
        found = None
        for v in range(pos, len(digits)):
            if needs == "nonzero" and digits[v] != 0:
                found = v
                break
            if needs == "not-six" and digits[v] != 6:
                found = v
                break
        if found is None:
            return QSequence(values=tuple(values), exhausted=True, requested=how_many)
        values.append(found)
        needs = "not-six" if digits[found] % 2 == 1 else "nonzero"
        pos = found + 1
    return QSequence(values=tuple(values), exhausted=False, requested=how_many)


def _q_values(stream: Digit7Stream, how_many: int, label: str) -> tuple[int, ...]:
    q = q_sequence(stream, how_many)
    if q.exhausted:
        raise DigitPrefixExhausted(
            f"shift {label}: needed {how_many} q-positions, prefix yielded {len(q.values)}"
        )
    return q.values


# -- step diagnostics ----------------------------------------------------------


def _terminal_of(placed: PlacedFamily, a: int) -> KMember:
    for p in placed.members:
        if p.a == a:
            return p.terminal
    raise KeyError(a)


def _ancestor_index(terminal: KMember, p: int) -> int | None:
    """Index of the level-p ancestor of a terminal node; None when p is at
    or below the terminal's own level (no such proper ancestor)."""
    if p >= terminal.level:
        return None
    return terminal.index % 3 ** (p + 1)


def _b_set(block: BlockIndex, placed: PlacedFamily, p: int, case: int) -> frozenset[int]:
    """Block members whose interval lies in the case-selected node family at
    level p: case 1 = inf-anchored nodes (l < 3^p), case 2 = sup-anchored
    nodes (3^p <= l < 2*3^p)."""
    out = set()
    for a in block.members:
        anc = _ancestor_index(_terminal_of(placed, a), p)
        if anc is None:
            continue
        if case == 1 and anc < 3**p:
            out.add(a)
        elif case == 2 and 3**p <= anc < 2 * 3**p:
            out.add(a)
    return frozenset(out)


@dataclass(frozen=True)
class BSetReport:
    shift_index: int
    j: int
    p: int
    case_by_digit: int
    case_by_index: int | None
    consequence_digit_ok: bool
    members: frozenset[int]
    fraction: Fraction
    expected_third: bool
    geometry_disjoint: bool | None  # None when level p is not materialized


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-block report for the three counting steps of the construction.

    All shielding conditions are phrased against the shifted intervals
    r_i + I_a.
    """

    n: int
    block: BlockIndex
    window: int
    delta: Fraction
    y_fraction: Fraction
    z_fraction: Fraction
    y_at_least_half: bool
    big_indices: tuple[int, ...]
    big_hit_fraction: Fraction
    big_hit_bound: Fraction
    big_hit_within_bound: bool
    small_single_hit: bool
    s: int | None = None
    k: int | None = None
    alpha: Fraction | None = None
    alpha_pow_s: Fraction | None = None
    alpha_pow_s1: Fraction | None = None
    p_table: dict | None = None
    p_final: int | None = None
    p_prime: int | None = None
    n_exceeds_p: bool | None = None
    b_sets: tuple[BSetReport, ...] = ()
    b_fraction: Fraction | None = None
    a_prime_fraction: Fraction | None = None
    b_subset_a_prime: bool | None = None
    f_set: frozenset[int] = frozenset()
    f_card_within_p_prime: bool | None = None
    n_past_f_blocks: bool | None = None


def step_diagnostics(
    placed: PlacedFamily,
    cover: CoverAttempt,
    shifts: list[Digit7Stream],
    n: int,
    window: int | None = None,
    delta: Fraction = Fraction(1, 4),
) -> StepDiagnostics:
    """Counting diagnostics for block n against a cover and a shift family.

    Reports the private-hit (Y) and shielded (Z) fractions of the block, the
    step-1 inequality checks, and — when shifts are present — the q-sequence
    machinery: the position table p(i,j), the guard position p', the
    case-selected node families and their tallies, and the empirical
    shielded-from-shifts fraction.  Both readings of the ambiguous case
    condition (digit parity at the previous q-position vs parity of the
    position itself) are reported; the digit reading selects the families.
    """
    m = placed.tree.m
    if window is None:
        window = cover.window_end
    block = block_index(placed, n)
    card = len(block.members)
    y = compute_Y(placed, cover, window)
    z = compute_Z(placed, cover, shifts, window)
    y_frac = Fraction(sum(1 for a in block.members if a in y), card)
    z_frac = Fraction(sum(1 for a in block.members if a in z), card)

    # step-1 inequalities: indices below n+m+1 jointly meet fewer than half
    # of the block intervals; indices at or above meet at most one each
    member_ivs = {a: placed.member(a).interval for a in block.members}
    big = tuple(sorted(d for d in cover.intervals if m <= d < n + m + 1 and d <= window))
    big_hit = {
        a
        for a in block.members
        if any(intersects(member_ivs[a], cover.intervals[d]) for d in big)
    }
    bound = Fraction(1 - Fraction(1, 3 ** (n + 1)), 2)  # 1/3 + ... + 3^-(n+1)
    small_single = all(
        len([a for a in block.members if intersects(member_ivs[a], J)]) <= 1
        for d, J in cover.intervals.items()
        if d >= n + m + 1 and d <= window
    )

    diag = dict(
        n=n,
        block=block,
        window=window,
        delta=delta,
        y_fraction=y_frac,
        z_fraction=z_frac,
        y_at_least_half=sum(1 for a in block.members if a in y) * 2 >= card,
        big_indices=big,
        big_hit_fraction=Fraction(len(big_hit), card),
        big_hit_bound=bound,
        big_hit_within_bound=Fraction(len(big_hit), card) <= bound,
        small_single_hit=small_single,
    )
    if not shifts:
        return StepDiagnostics(**diag)

    s = len(shifts) - 1
    k = 0
    while (1 - Fraction(2, 3) ** (k + 1)) ** (s + 1) <= 1 - delta:
        k += 1
    alpha = 1 - Fraction(2, 3) ** (k + 1)

    # p(i, j) table from the q-sequences, walked lazily per shift
    p_table: dict[tuple[int, int], int] = {}
    q_cache: dict[int, tuple[int, ...]] = {}
    l_offsets: dict[int, int] = {0: 0}
    q_cache[0] = _q_values(shifts[0], k + 2, "r_0")
    for j in range(k + 1):
        p_table[(0, j)] = q_cache[0][j]
    for i in range(1, s + 1):
        prev_p = p_table[(i - 1, k)]
        need = k + 2
        while True:
            qs = _q_values(shifts[i], need, f"r_{i}")
            l_i = next((idx for idx, v in enumerate(qs) if v > prev_p), None)
            if l_i is not None and len(qs) >= l_i + k + 2:
                break
            need += k + 2
        l_offsets[i] = l_i
        q_cache[i] = qs
        for j in range(k + 1):
            p_table[(i, j)] = qs[l_i + j]
    p_final = p_table[(s, k)]
    guards = [q_cache[0][k + 1]] + [q_cache[i][l_offsets[i] + k + 1] for i in range(1, s + 1)]
    p_prime = max(guards) + 1

    # case-selected node families and their block tallies
    b_reports = []
    b_i_sets = []
    shift_values = [sh.value for sh in shifts]
    for i in range(s + 1):
        union_i: set[int] = set()
        for j in range(k + 1):
            p = p_table[(i, j)]
            prev_idx = l_offsets[i] + j - 1
            if (i, j) == (0, 0) or prev_idx < 0:
                case_digit, case_index = 1, None
            else:
                prev_pos = q_cache[i][prev_idx]
                case_digit = 1 if shifts[i].digits[prev_pos] % 2 == 0 else 2
                case_index = 1 if prev_pos % 2 == 0 else 2
            digit_at_p = shifts[i].digits[p]
            consequence_ok = digit_at_p != 0 if case_digit == 1 else digit_at_p != 6
            members = _b_set(block, placed, p, case_digit)
            union_i |= members
            if p <= placed.tree.depth:
                lo3, hi3 = (0, 3**p) if case_digit == 1 else (3**p, 2 * 3**p)
                disjoint = all(
                    not placed.hits(shift(placed.tree.node(p, l), -shift_values[i]))
                    for l in range(lo3, hi3)
                )
            else:
                disjoint = None
            b_reports.append(
                BSetReport(
                    shift_index=i,
                    j=j,
                    p=p,
                    case_by_digit=case_digit,
                    case_by_index=case_index,
                    consequence_digit_ok=consequence_ok,
                    members=members,
                    fraction=Fraction(len(members), card),
                    expected_third=len(members) * 3 == card,
                    geometry_disjoint=disjoint,
                )
            )
        b_i_sets.append(union_i)
    b_all = frozenset(set.intersection(*b_i_sets)) if b_i_sets else frozenset()

    # empirical shielded-from-shifts fraction of the block
    a_prime = set()
    for a in block.members:
        iv = member_ivs[a]
        if all(not placed.hits(shift(iv, -r)) for r in shift_values):
            a_prime.add(a)

    f_set = frozenset(
        a
        for a in y
        if any(
            intersects(placed.member(a).interval, J)
            for d, J in cover.intervals.items()
            if d < p_prime + m and d <= window
        )
    )
    f_blocks = []
    for a in f_set:
        for bn in range(n + 1):
            t_lo, t_hi = t_value(bn), t_value(bn + 1)
            if t_hi < len(placed.members) and a in {
                placed.members[i].a for i in range(t_lo + 1, t_hi + 1)
            }:
                f_blocks.append(bn)

    diag.update(
        s=s,
        k=k,
        alpha=alpha,
        alpha_pow_s=alpha**s,
        alpha_pow_s1=alpha ** (s + 1),
        p_table={f"{i},{j}": p for (i, j), p in sorted(p_table.items())},
        p_final=p_final,
        p_prime=p_prime,
        n_exceeds_p=n > p_final,
        b_sets=tuple(b_reports),
        b_fraction=Fraction(len(b_all), card),
        a_prime_fraction=Fraction(len(a_prime), card),
        b_subset_a_prime=b_all <= a_prime,
        f_set=f_set,
        f_card_within_p_prime=len(f_set) <= p_prime,
        n_past_f_blocks=all(bn < n for bn in f_blocks),
    )
    return StepDiagnostics(**diag)
