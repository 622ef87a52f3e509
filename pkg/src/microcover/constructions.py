"""Nested interval constructions and cover re-indexing transforms.

The finite-depth approximation of the fractal set X: level 0 places
intervals I^0_j (j in omega+1, |I^0_j| = 7**-j) on [0,1] by the spacing
construction; level i+1 refines each I^i_{2^i(n+1)} using the dyadic
partition piece with matching index.  Chains of nested intervals certified
disjoint from a cover witness points outside it.

All omega-quantified statements are evaluated on explicit finite windows;
truncation effects are recorded in a ledger, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .covers import (
    CoverAttempt,
    GeometricConstraint,
    LogarithmicConstraint,
    ValidationReport,
    covers_region,
    validate,
)
from .exact import (
    Digit7Stream,
    Interval,
    PreconditionError,
    WindowInsufficientError,
    digits_base7,
    intersects,
    seventh_power,
    shift,
)
from .omega import (
    OmegaSet,
    count_prefix,
    density_estimate,
    density_exact,
    dyadic_piece_index,
    partition_dyadic,
)
from .spacing import build_k_hierarchy, depth_for_terminals, place_intervals


@dataclass(frozen=True)
class TruncationEntry:
    """A parent whose child family was cut off (or emptied) by the cutoff."""

    level: int
    parent_index: int
    materialized: int
    first_unmaterialized: int


@dataclass(frozen=True)
class MicroXApprox:
    """Finite-depth, index-cutoff approximation of the nested set X."""

    depth: int
    index_cutoff: int
    levels: tuple[dict[int, Interval], ...] = field(compare=False)
    truncation_ledger: tuple[TruncationEntry, ...] = ()
    base: Interval = Interval(Fraction(0), Fraction(1))

    def level_intervals(self, i: int) -> list[Interval]:
        return [self.levels[i][j] for j in sorted(self.levels[i])]

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "index_cutoff": self.index_cutoff,
            "levels": [
                [{"j": j, "interval": iv.to_json()} for j, iv in sorted(level.items())]
                for level in self.levels
            ],
            "truncation_ledger": [
                {
                    "level": e.level,
                    "parent_index": e.parent_index,
                    "materialized": e.materialized,
                    "first_unmaterialized": e.first_unmaterialized,
                }
                for e in self.truncation_ledger
            ],
        }


def _sub_family(parent: Interval, base_exp: int, A: OmegaSet, cutoff: int):
    """Run the spacing construction inside ``parent`` for the indices of A
    up to the cutoff; returns {a: I_a} (empty when no index fits)."""
    a_values = []
    for a in A.iter_elements():
        if a > cutoff:
            break
        a_values.append(a)
    if not a_values:
        return {}
    tree = build_k_hierarchy(parent, base_exp, depth_for_terminals(len(a_values)))
    placed = place_intervals(tree, A, len(a_values))
    return {p.a: p.interval for p in placed.members}


def build_X(depth: int, index_cutoff: int) -> MicroXApprox:
    """Materialize X's hierarchy to the given depth and index cutoff.

    Level 0 = spacing construction on [0,1] with omega+1; each level-i
    interval I^i_{2^i(n+1)} hosts the next level's intervals for the dyadic
    piece with index n.
    """
    if index_cutoff < 2**depth:
        raise PreconditionError(
            f"cutoff {index_cutoff} leaves level {depth} empty (needs >= {2**depth})"
        )
    base = Interval(Fraction(0), Fraction(1))
    levels: list[dict[int, Interval]] = []
    ledger: list[TruncationEntry] = []

    level0 = _sub_family(base, 0, OmegaSet.omega_plus_one(), index_cutoff)
    levels.append(level0)
    if index_cutoff + 1 not in level0:
        ledger.append(
            TruncationEntry(
                level=0, parent_index=-1, materialized=len(level0), first_unmaterialized=index_cutoff + 1
            )
        )

    for i in range(depth):
        nxt: dict[int, Interval] = {}
        for parent_j in sorted(levels[i]):
            if parent_j % 2**i != 0:
                continue
            k = parent_j // 2**i - 1
            piece = OmegaSet.progression(2 ** (i + k + 1), 2 ** (i + k + 2))
            first = 2 ** (i + k + 1)
            if first > index_cutoff:
                ledger.append(
                    TruncationEntry(
                        level=i + 1, parent_index=parent_j, materialized=0, first_unmaterialized=first
                    )
                )
                continue
            family = _sub_family(levels[i][parent_j], parent_j, piece, index_cutoff)
            nxt.update(family)
            last = max(family)
            ledger.append(
                TruncationEntry(
                    level=i + 1,
                    parent_index=parent_j,
                    materialized=len(family),
                    first_unmaterialized=last + 2 ** (i + k + 2),
                )
            )
        levels.append(nxt)
    return MicroXApprox(
        depth=depth,
        index_cutoff=index_cutoff,
        levels=tuple(levels),
        truncation_ledger=tuple(ledger),
        base=base,
    )


def verify_microscopic(x: MicroXApprox, eps_prime: Fraction, m: int) -> CoverAttempt:
    """The canonical small-eps cover of the truncated level m: J_j =
    I^m_{2^m(j+1)}, valid under Geometric(eps_prime) because
    7**-(2^m) < eps_prime.  Also checks the cover contains level m."""
    if m > x.depth:
        raise PreconditionError(f"level {m} not materialized (depth {x.depth})")
    if seventh_power(2**m) >= eps_prime:
        raise PreconditionError(f"level {m} too small for eps' = {eps_prime}: 7**-{2**m} >= eps'")
    intervals = {}
    for j in sorted(x.levels[m]):
        intervals[j // 2**m - 1] = x.levels[m][j]
    window_end = max(intervals) if intervals else 0
    cover = CoverAttempt(
        D=OmegaSet.naturals(),
        intervals=intervals,
        constraint=GeometricConstraint(eps_prime),
        window_end=window_end,
    )
    report = validate(cover)
    if not report.all_ok:
        raise AssertionError("canonical cover failed its own length constraint")
    ok, gap = covers_region(cover, x.level_intervals(m))
    if not ok:
        raise AssertionError(f"canonical cover does not contain level {m}: gap {gap}")
    return cover


@dataclass(frozen=True)
class ChainLevel:
    n: int
    j: int
    interval: Interval
    certified_indices: tuple[int, ...]  # d in D & j (window) verified disjoint


@dataclass(frozen=True)
class WitnessChain:
    """Nested chain I^0_{j_0} > I^1_{j_1} > ... certified disjoint from a
    cover; the limit point avoids every certified J_d."""

    levels: tuple[ChainLevel, ...]
    window: int
    telemetry: dict = field(default_factory=dict, compare=False)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(l.j for l in self.levels)

    def replay(self, cover: CoverAttempt) -> bool:
        """Exact re-verification of every certificate."""
        for lvl in self.levels:
            for d in lvl.certified_indices:
                if intersects(lvl.interval, cover.intervals[d]):
                    return False
            expected = [d for d in cover.intervals if d < lvl.j and d <= self.window]
            if sorted(expected) != sorted(lvl.certified_indices):
                return False
        for a, b in zip(self.levels, self.levels[1:]):
            if not a.interval.contains(b.interval):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "chain": [
                {"n": l.n, "j": l.j, "interval": l.interval.to_json()} for l in self.levels
            ],
            "certificates": [
                {"n": l.n, "checks": [{"d": d, "disjoint": True} for d in l.certified_indices]}
                for l in self.levels
            ],
            "window": self.window,
        }


def extract_uncovered_point(
    x: MicroXApprox, cover: CoverAttempt, target_depth: int
) -> WitnessChain:
    """Build the uncovered-point chain level by level.

    At level 0 the witness j_0 is the least materialized index whose interval
    misses every J_d with d < j_0; at level n+1 the candidates are the
    materialized children of I^n_{j_n} and only the fresh indices
    j_n <= d < j are checked (the rest follows from nesting).  Density
    telemetry per level is recorded, not proven.
    """
    if target_depth > x.depth:
        raise PreconditionError(f"target depth {target_depth} exceeds materialized {x.depth}")
    report = validate(cover)
    if not report.all_ok:
        raise PreconditionError("cover must validate before witness extraction")
    window = cover.window_end
    cover_ds = sorted(d for d in cover.intervals if d <= window)
    telemetry: dict = {
        "window": window,
        "density_lower_estimate": str(
            density_estimate(cover.D, window, samples=min(32, max(1, window))).lower_estimate
        ),
        "per_level_thresholds": {},
    }

    chain: list[ChainLevel] = []
    prev_j = None
    for n in range(target_depth + 1):
        if n == 0:
            candidates = sorted(x.levels[0])
            threshold = Fraction(1, 4)  # density(omega+1)/4
        else:
            k = prev_j // 2 ** (n - 1) - 1
            piece_density = Fraction(1, 2 ** (n - 1 + k + 2))
            threshold = piece_density / 4
            candidates = [
                j
                for j in sorted(x.levels[n])
                if dyadic_piece_index(j, n - 1) == k and x.levels[n - 1][prev_j].contains(x.levels[n][j])
            ]
        telemetry["per_level_thresholds"][n] = str(threshold)
        # blocked candidates, found per cover interval via a positional index
        # (the candidates are pairwise disjoint and position-sorted)
        from bisect import bisect_left, bisect_right

        by_pos = sorted(candidates, key=lambda j: x.levels[n][j].lo)
        los = [x.levels[n][j].lo for j in by_pos]
        his = [x.levels[n][j].hi for j in by_pos]
        lo_d = 0 if prev_j is None else prev_j
        blocked: set[int] = set()
        for d in cover_ds:
            if d < lo_d:
                continue
            J = cover.intervals[d]
            for idx in range(bisect_left(his, J.lo), bisect_right(los, J.hi)):
                if d < by_pos[idx]:
                    blocked.add(by_pos[idx])
        witness = None
        for j in candidates:
            if j not in blocked:
                witness = j
                break
        if witness is None:
            telemetry["failed_level"] = n
            telemetry["candidates_tried"] = len(candidates)
            raise WindowInsufficientError(
                f"no witness at level {n} within cutoff {x.index_cutoff}", telemetry
            )
        iv = x.levels[n][witness]
        certified = tuple(d for d in cover_ds if d < witness)
        for d in certified:
            if intersects(iv, cover.intervals[d]):
                raise AssertionError("chain certificate failed exact re-check")
        chain.append(ChainLevel(n=n, j=witness, interval=iv, certified_indices=certified))
        prev_j = witness
    return WitnessChain(levels=tuple(chain), window=window, telemetry=telemetry)


# -- shifted-family experiment ---------------------------------------------


@dataclass(frozen=True)
class ShiftSetReport:
    shift_index: int
    Y: frozenset[int]
    Z: frozenset[int]
    Z_prime: frozenset[int]
    phi: dict[int, int] = field(compare=False)
    phi_unique: bool = True
    premise_fraction: Fraction = Fraction(0)
    z_prefix_ratio: Fraction = Fraction(0)
    z_prime_prefix_ratio: Fraction = Fraction(0)


@dataclass(frozen=True)
class ShiftExperiment:
    """Outcome of the shifted-copies selection mechanism over a window."""

    level_pair: tuple[int, int]
    window: int
    shift_values: tuple[Fraction, ...]
    per_shift: tuple[ShiftSetReport, ...]
    pairwise_disjoint: bool
    premise_all: bool
    nondegenerate_differences: bool
    phi_monotone: bool  # phi(a) <= a in every premise-satisfying run

    def to_json(self) -> dict:
        from .exact import rational_to_json

        return {
            "level_pair": list(self.level_pair),
            "window": self.window,
            "shifts": [rational_to_json(r) for r in self.shift_values],
            "per_shift": [
                {
                    "i": r.shift_index,
                    "Y": sorted(r.Y),
                    "Z": sorted(r.Z),
                    "Z_prime": sorted(r.Z_prime),
                    "phi": {str(a): k for a, k in sorted(r.phi.items())},
                    "phi_unique": r.phi_unique,
                    "premise_fraction": rational_to_json(r.premise_fraction),
                    "z_prefix_ratio": rational_to_json(r.z_prefix_ratio),
                    "z_prime_prefix_ratio": rational_to_json(r.z_prime_prefix_ratio),
                }
                for r in self.per_shift
            ],
            "pairwise_disjoint": self.pairwise_disjoint,
            "premise_all": self.premise_all,
            "nondegenerate_differences": self.nondegenerate_differences,
            "phi_monotone": self.phi_monotone,
        }


def nondegenerate_prefix(digits: tuple[int, ...], max_run: int = 8) -> bool:
    """Finite surrogate for an irrational shift difference: after the first
    nonzero digit, no run of 0s or of 6s longer than max_run within the
    prefix."""
    try:
        first = next(i for i, d in enumerate(digits) if d != 0)
    except StopIteration:
        return False
    run_char, run_len = None, 0
    for d in digits[first + 1 :]:
        if d in (0, 6) and d == run_char:
            run_len += 1
            if run_len > max_run:
                return False
        elif d in (0, 6):
            run_char, run_len = d, 1
        else:
            run_char, run_len = None, 0
    return True


def shift_family_experiment(
    x: MicroXApprox,
    shifts: list[Digit7Stream],
    cover: CoverAttempt,
    level_pair: tuple[int, int],
    window: int,
    prefix_len: int = 64,
) -> ShiftExperiment:
    """Run the shifted-family selection over the children of I^n_{m_idx}.

    For each shift r_i: Y_i is the private-hit set of the shifted family
    (r_i + I^{n+1}_a), Z_i its subset whose hits avoid all later-shift
    copies, Z'_i the cover indices charged by Z_i, and phi_i the least-index
    charge map.  Pairwise disjointness of the Z'_i is checked by exact scan;
    phi(a) <= a is asserted only when the premise "every shifted interval
    meets some earlier-indexed J_k" holds for the whole window.
    """
    n, m_idx = level_pair
    if n + 1 > x.depth:
        raise PreconditionError("level pair requires depth n+1")
    if m_idx not in x.levels[n]:
        raise PreconditionError(f"I^{n}_{m_idx} not materialized")
    if len(shifts) < 1:
        raise PreconditionError("need at least one shift")
    values = [s.value for s in shifts]
    if len(set(values)) != len(values):
        raise PreconditionError("shifts must be pairwise distinct")

    nondeg = True
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            diff = abs(values[i] - values[j])
            if not (0 < diff < 1):
                nondeg = False
                continue
            stream = digits_base7(diff, 0, prefix_len)
            if not nondegenerate_prefix(stream.digits):
                nondeg = False

    k_parent = m_idx // 2**n - 1
    family = [
        (j, x.levels[n + 1][j])
        for j in sorted(x.levels[n + 1])
        if j <= window
        and dyadic_piece_index(j, n) == k_parent
        and x.levels[n][m_idx].contains(x.levels[n + 1][j])
    ]
    if not family:
        raise PreconditionError("no materialized family members inside the chosen parent")
    cover_items = [(d, J) for d, J in cover.sorted_items() if d <= window]

    # position-sorted view of the (pairwise disjoint) family for hit queries
    from bisect import bisect_left, bisect_right

    by_pos = sorted(family, key=lambda e: e[1].lo)
    los = [iv.lo for _, iv in by_pos]
    his = [iv.hi for _, iv in by_pos]
    avals = [a for a, _ in by_pos]

    def family_hits(J: Interval, r: Fraction) -> list[int]:
        # members a with (r + I_a) meeting J, via the shifted-back query J - r
        lo, hi = J.lo - r, J.hi - r
        return avals[bisect_left(his, lo) : bisect_right(los, hi)]

    s = len(shifts) - 1
    # hit sets per (shift, cover index): shifted family members meeting J_k
    hits: list[dict[int, list[int]]] = []
    for r in values:
        table: dict[int, list[int]] = {}
        for d, J in cover_items:
            got = family_hits(J, r)
            if got:
                table[d] = got
        hits.append(table)

    reports = []
    all_premise = True
    phi_monotone = True
    for i in range(s + 1):
        table = hits[i]
        multi = {a for got in table.values() if len(got) >= 2 for a in got}
        Y = frozenset(a for a, _ in family if a not in multi)
        later_blocked: set[int] = set()
        for d, got in table.items():
            if any(hits[j].get(d) for j in range(i + 1, s + 1)):
                later_blocked.update(got)
        Z = frozenset(a for a in Y if a not in later_blocked)
        phi: dict[int, int] = {}
        phi_unique = True
        for a in sorted(Z):
            charging = sorted(d for d, got in table.items() if a in got)
            if charging:
                phi[a] = charging[0]
                if len(charging) > 1:
                    phi_unique = False
        Z_prime = frozenset(
            d for d, got in table.items() if any(a in Z for a in got)
        )
        premise_set = {a for d, got in table.items() for a in got if d < a}
        premise_fraction = Fraction(len(premise_set & {a for a, _ in family}), len(family))
        if premise_fraction != 1:
            all_premise = False
        reports.append(
            ShiftSetReport(
                shift_index=i,
                Y=Y,
                Z=Z,
                Z_prime=Z_prime,
                phi=phi,
                phi_unique=phi_unique,
                premise_fraction=premise_fraction,
                z_prefix_ratio=Fraction(len([a for a in Z if a <= window]), window + 1),
                z_prime_prefix_ratio=Fraction(len([d for d in Z_prime if d <= window]), window + 1),
            )
        )

    disjoint = True
    for i in range(s + 1):
        for j in range(i + 1, s + 1):
            if reports[i].Z_prime & reports[j].Z_prime:
                disjoint = False
    if all_premise:
        for r in reports:
            for a, k in r.phi.items():
                if k > a:
                    phi_monotone = False
    return ShiftExperiment(
        level_pair=level_pair,
        window=window,
        shift_values=tuple(values),
        per_shift=tuple(reports),
        pairwise_disjoint=disjoint,
        premise_all=all_premise,
        nondegenerate_differences=nondeg,
        phi_monotone=phi_monotone,
    )


# -- re-indexing transforms --------------------------------------------------


def thin_reindex(cover: CoverAttempt, k: int, eps: Fraction = Fraction(1, 7)) -> CoverAttempt:
    """Re-index a cover onto (k+1)*(omega+1): J_{(k+1)(n+1)} = J'_n.

    The input must satisfy the strengthened bound |J'_n| <= eps**((k+2)(n+1))
    (one exponent step beyond the naive requirement), which closes the
    off-by-one between (k+1)(n+1) and the needed (k+1)(n+1)+1.
    """
    if not isinstance(cover.constraint, GeometricConstraint):
        raise PreconditionError("thin_reindex expects a geometric input cover")
    items = cover.sorted_items()
    if [d for d, _ in items] != list(range(len(items))):
        raise PreconditionError("input cover must be indexed consecutively from 0")
    strengthened = GeometricConstraint(eps ** (k + 2))
    for n, (d, J) in enumerate(items):
        if J.length > strengthened.bound(n):
            raise PreconditionError(
                f"input J'_{n} violates the eps**{k + 2} bound needed for re-indexing"
            )
    intervals = {(k + 1) * (n + 1): J for n, (_, J) in enumerate(items)}
    out = CoverAttempt(
        D=OmegaSet.multiples(k + 1),
        intervals=intervals,
        constraint=GeometricConstraint(eps),
        window_end=(k + 1) * (len(items) + 1),
    )
    report = validate(out)
    if not report.all_ok:
        raise AssertionError("thin re-index produced an invalid cover")
    return out


def union_reindex_Mprime(covers: list[CoverAttempt]) -> CoverAttempt:
    """Merge covers on D_k inside 2**(k+1)*(omega+1) by shifting each down
    2**k; the shifted index sets land in disjoint dyadic residue classes."""
    if not covers:
        raise PreconditionError("need at least one input cover")
    eps = covers[0].constraint.eps
    intervals: dict[int, Interval] = {}
    D = OmegaSet.empty()
    window_end = 0
    shifted_sets = []
    for k, cov in enumerate(covers):
        if not isinstance(cov.constraint, GeometricConstraint) or cov.constraint.eps != eps:
            raise PreconditionError("inputs must share one geometric constraint")
        if not validate(cov).all_ok:
            raise PreconditionError(f"input cover {k} fails validation")
        step = 2 ** (k + 1)
        for d in cov.intervals:
            if d <= 0 or d % step != 0:
                raise PreconditionError(f"cover {k} index {d} not in {step}*(omega+1)")
        shifted = cov.D.shift_down(2**k)
        shifted_sets.append(shifted)
        D = D.union(shifted)
        for d, J in cov.intervals.items():
            nd = d - 2**k
            if nd in intervals:
                raise PreconditionError(f"re-indexed collision at {nd}")
            intervals[nd] = J
        window_end = max(window_end, cov.window_end)
    # disjointness of the shifted index sets, verified on the window
    for i in range(len(shifted_sets)):
        for j in range(i + 1, len(shifted_sets)):
            a = set(shifted_sets[i].elements_up_to(window_end))
            if a & set(shifted_sets[j].elements_up_to(window_end)):
                raise PreconditionError("shifted index sets are not disjoint")
    out = CoverAttempt(
        D=D, intervals=intervals, constraint=GeometricConstraint(eps), window_end=window_end
    )
    report = validate(out)
    if not report.all_ok:
        raise AssertionError("union re-index produced an invalid cover")
    return out


def _certify_quarter_threshold(D: OmegaSet, scan_to: int, strict: bool = False) -> int:
    """Least k with card(D & (j+1))/(j+1) <= 1/4 (or < 1/4) for all k < j <=
    scan_to; raises when even the window end misses the bound."""
    count = 0
    k = None
    for j in range(scan_to + 1):
        if D.contains(j):
            count += 1
        ratio_bad = (4 * count > j + 1) if not strict else (4 * count >= j + 1)
        if ratio_bad:
            k = j
    if k == scan_to:
        raise WindowInsufficientError(
            "cannot certify the 1/4 density threshold on this window",
            {"scan_to": scan_to},
        )
    return 0 if k is None else k


@dataclass(frozen=True)
class ReindexResult:
    index_set: OmegaSet
    cover: CoverAttempt
    t_sequence: tuple[int, ...]
    validation: ValidationReport
    sandwich_ok: bool
    density_bound_ok: bool

    def to_json(self) -> dict:
        return {
            "index_set": self.index_set.to_json(),
            "cover": self.cover.to_json(),
            "t_sequence": list(self.t_sequence),
            "validation": self.validation.to_json(),
            "sandwich_ok": self.sandwich_ok,
            "density_bound_ok": self.density_bound_ok,
        }


def _greedy_avoid(D: OmegaSet, taken: set[int], cap: int, floor: int) -> int:
    """Greatest t <= cap with t not in D and not yet taken; the proofs
    guarantee one at or above ``floor`` — going below it means the
    hypothesis failed, so fail loudly."""
    t = cap
    while t >= floor:
        if t not in taken and not D.contains(t):
            return t
        t -= 1
    raise PreconditionError(
        f"greedy selection fell below its guaranteed floor {floor} (cap {cap})"
    )


def reindex_ln_avoid(
    m_cover_factory,
    D: OmegaSet,
    eps: Fraction,
    count: int,
    window_end: int = 10**4,
    m: int | None = None,
) -> ReindexResult:
    """Move a logarithmic-family cover onto a fresh density-zero index set
    E disjoint from D.

    t_i is the greatest index <= (i+2)**m - 2 avoiding D and earlier picks;
    the sandwich (i+2)**m / 2 <= t_i + 2 <= (i+2)**m is checked exactly, as
    is the density bound card(E & (j+1)) <= (2(j+2))**(1/m) - 1.
    """
    if count < 1:
        raise PreconditionError("count must be >= 1")
    k = _certify_quarter_threshold(D, window_end)
    if m is None:
        m = 2
        while 2**m <= k:
            m += 1
    else:
        if m < 2 or 2**m <= k:
            raise PreconditionError(f"m={m} needs m >= 2 and 2**m > k (k={k})")
    scan_to = max(window_end, (count + 1) ** m)
    _certify_quarter_threshold(D, scan_to)

    source = m_cover_factory(m)
    if not isinstance(source.constraint, LogarithmicConstraint) or source.constraint.eps != eps**m:
        raise PreconditionError("factory must supply a Logarithmic(eps**m) cover")
    src_report = validate(source)
    if src_report.violations:
        raise PreconditionError("factory cover violates its logarithmic bound")
    src_items = source.sorted_items()
    if len(src_items) < count:
        raise PreconditionError("factory cover too short for requested count")

    taken: set[int] = set()
    ts: list[int] = []
    sandwich_ok = True
    for i in range(count):
        cap = (i + 2) ** m - 2
        floor = -((-((i + 2) ** m)) // 2) - 2  # ceil((i+2)^m / 2) - 2
        t_i = _greedy_avoid(D, taken, cap, max(0, floor))
        if not (2 * (t_i + 2) >= (i + 2) ** m and t_i + 2 <= (i + 2) ** m):
            sandwich_ok = False
        taken.add(t_i)
        ts.append(t_i)

    E = OmegaSet.from_elements(ts)
    intervals = {t: src_items[i][1] for i, t in enumerate(ts)}
    out = CoverAttempt(
        D=E,
        intervals=intervals,
        constraint=LogarithmicConstraint(eps),
        window_end=max(ts),
    )
    report = validate(out)
    if report.violations:
        raise AssertionError("ln re-index produced a violating cover")

    density_ok = True
    sorted_ts = sorted(ts)
    for j in range(window_end + 1):
        card = sum(1 for t in sorted_ts if t <= j)
        if card > 0 and (card + 1) ** m > 2 * (j + 2):
            density_ok = False
            break
    return ReindexResult(
        index_set=E,
        cover=out,
        t_sequence=tuple(ts),
        validation=report,
        sandwich_ok=sandwich_ok,
        density_bound_ok=density_ok,
    )


def reindex_density_avoid(
    m_cover: CoverAttempt,
    D: OmegaSet,
    eps: Fraction,
    m: int,
    window_end: int = 10**4,
) -> ReindexResult:
    """Move a cover indexed by a density-zero set E (with |I_e| <=
    eps**(m(e+1))) onto a fresh density-zero set F disjoint from D.

    m must be even and >= 4; t_i is the greatest index <= m(e_i+1) - 1
    avoiding D and earlier picks, with the sandwich m(e_i+1)/2 <= t_i + 1
    checked exactly and card(F & (j+1)) <= card(E & ceil(2(j+1)/m)) verified
    across the window.
    """
    if m < 4 or m % 2 != 0:
        raise PreconditionError("m must be an even natural >= 4")
    scan_to = window_end
    src_items = m_cover.sorted_items()
    if src_items:
        scan_to = max(window_end, m * (src_items[-1][0] + 1))
    k = _certify_quarter_threshold(D, scan_to, strict=True)
    if k >= m:
        raise PreconditionError(
            f"density threshold certified only beyond {k}, but needs to hold from {m}"
        )
    strengthened = GeometricConstraint(eps**m)
    for e, J in src_items:
        if J.length > strengthened.bound(e):
            raise PreconditionError(f"input I_{e} violates the eps**{m} bound")

    taken: set[int] = set()
    ts: list[int] = []
    sandwich_ok = True
    for i, (e, _) in enumerate(src_items):
        cap = m * (e + 1) - 1
        floor = -((-(m * (e + 1))) // 2) - 1
        t_i = _greedy_avoid(D, taken, cap, max(0, floor))
        if not (2 * (t_i + 1) >= m * (e + 1) and t_i + 1 <= m * (e + 1)):
            sandwich_ok = False
        taken.add(t_i)
        ts.append(t_i)

    F = OmegaSet.from_elements(ts)
    intervals = {t: src_items[i][1] for i, t in enumerate(ts)}
    out = CoverAttempt(
        D=F,
        intervals=intervals,
        constraint=GeometricConstraint(eps),
        window_end=max(ts) if ts else 0,
    )
    report = validate(out)
    if not report.all_ok:
        raise AssertionError("density re-index produced an invalid cover")

    e_values = [e for e, _ in src_items]
    density_ok = True
    for j in range(window_end + 1):
        card_f = sum(1 for t in ts if t <= j)
        bound = -((-2 * (j + 1)) // m)  # ceil(2(j+1)/m)
        card_e = sum(1 for e in e_values if e < bound)
        if card_f > card_e:
            density_ok = False
            break
    return ReindexResult(
        index_set=F,
        cover=out,
        t_sequence=tuple(ts),
        validation=report,
        sandwich_ok=sandwich_ok,
        density_bound_ok=density_ok,
    )
