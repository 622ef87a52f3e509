from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from microcover.covers import CoverAttempt, GeometricConstraint, adversary_generate
from microcover.exact import (
    Digit7Stream,
    DigitPrefixExhausted,
    Interval,
    PreconditionError,
    digits_base7,
    intersects,
    seventh_power,
    shift,
)
from microcover.omega import OmegaSet, density_exact
from microcover.spacing import (
    block_index,
    build_k_hierarchy,
    compute_Y,
    compute_Z,
    depth_for_terminals,
    members_in_node,
    place_intervals,
    q_sequence,
    step_diagnostics,
    t_value,
    terminal_enumeration,
)
from support import brute_Y, brute_Z, tree_invariant_violations, tree_pairwise_distance_ok

UNIT = Interval(F(0), F(1))


def geo_cover(intervals: dict, window: int, eps=F(1, 7)) -> CoverAttempt:
    return CoverAttempt(
        D=OmegaSet.from_elements(intervals.keys()),
        intervals=intervals,
        constraint=GeometricConstraint(eps),
        window_end=window,
    )


EMPTY = CoverAttempt(D=OmegaSet.empty(), intervals={}, window_end=10**4)


class TestHierarchy:
    def test_level0_forced_endpoints(self, unit_tree_d3):
        lvl = unit_tree_d3.levels[0]
        assert lvl[0] == Interval(F(0), F(1, 7))
        assert lvl[2] == Interval(F(2, 7), F(3, 7))
        assert lvl[3] == Interval(F(4, 7), F(5, 7))
        assert lvl[1] == Interval(F(6, 7), F(1))

    def test_level1_children_of_first_node(self, unit_tree_d3):
        lvl = unit_tree_d3.levels[1]
        assert lvl[0] == Interval(F(0), F(1, 49))
        assert lvl[6] == Interval(F(2, 49), F(3, 49))
        assert lvl[9] == Interval(F(4, 49), F(5, 49))
        assert lvl[3] == Interval(F(6, 49), F(7, 49))

    def test_node_counts(self, unit_tree_d3):
        for i in range(4):
            assert len(unit_tree_d3.levels[i]) == 4 * 3**i
            terminal_count = sum(
                1 for j in range(4 * 3**i) if unit_tree_d3.is_terminal_index(i, j)
            )
            assert terminal_count == 3**i

    def test_all_invariants(self, unit_tree_d3):
        assert tree_invariant_violations(unit_tree_d3) == []

    def test_pairwise_distance_full(self, unit_tree_d3):
        for level in range(4):
            assert tree_pairwise_distance_ok(unit_tree_d3, level)

    def test_root_length_checked(self):
        with pytest.raises(PreconditionError):
            build_k_hierarchy(Interval(F(0), F(1, 2)), 0, 1)

    def test_other_base_exponent(self):
        tree = build_k_hierarchy(Interval(F(1), F(1) + F(1, 49)), 2, 2)
        assert tree_invariant_violations(tree) == []


class TestTerminals:
    def test_depth1_enumeration(self, unit_tree_d3):
        tree1 = build_k_hierarchy(UNIT, 0, 1)
        terms = terminal_enumeration(tree1)
        assert [(t.level, t.index) for t in terms] == [(0, 3), (1, 9), (1, 10), (1, 11)]
        assert terms[0].interval.length == F(1, 7)
        assert all(t.interval.length == F(1, 49) for t in terms[1:])

    def test_counts_match_t(self):
        for n in range(5):
            tree = build_k_hierarchy(UNIT, 0, n)
            assert len(terminal_enumeration(tree)) == t_value(n) + 1

    def test_depth0_single(self):
        tree = build_k_hierarchy(UNIT, 0, 0)
        terms = terminal_enumeration(tree)
        assert len(terms) == 1 and terms[0].index == 3

    def test_lengths_nonincreasing(self, unit_tree_d3):
        terms = terminal_enumeration(unit_tree_d3)
        for a, b in zip(terms, terms[1:]):
            assert a.interval.length >= b.interval.length


class TestPlacement:
    def test_first_two_examples(self, placed_small):
        assert placed_small.member(1).interval == Interval(F(4, 7), F(5, 7))
        assert placed_small.member(2).interval == Interval(F(4, 49), F(5, 49))

    def test_feasibility(self, placed_small):
        for p in placed_small.members:
            assert p.interval.length == seventh_power(p.a)
            assert p.terminal.interval.contains(p.interval)
            assert p.interval.lo == p.terminal.interval.lo  # left anchored

    def test_pairwise_disjoint(self, placed_small):
        ms = sorted(placed_small.members, key=lambda p: p.interval.lo)
        for a, b in zip(ms, ms[1:]):
            assert a.interval.hi < b.interval.lo

    def test_min_A_precondition(self, unit_tree_d3):
        with pytest.raises(PreconditionError):
            place_intervals(unit_tree_d3, OmegaSet.naturals(), 4)

    def test_depth_precondition(self):
        tree = build_k_hierarchy(UNIT, 0, 0)
        with pytest.raises(PreconditionError):
            place_intervals(tree, OmegaSet.omega_plus_one(), 5)

    def test_per_node_density_third(self, placed_3280):
        # members inside the first level-0 node approach one third of all
        inside = members_in_node(placed_3280, 0, 0)
        total = len(placed_3280.members)
        assert abs(F(len(inside), total) - F(1, 3)) < F(1, 100)
        # level-1 nodes hold ~ 1/9 each
        inside19 = members_in_node(placed_3280, 1, 2)
        assert abs(F(len(inside19), total) - F(1, 9)) < F(1, 100)

    def test_hits_match_linear_scan(self, placed_small):
        probes = [
            Interval(F(0), F(1, 7)),
            Interval(F(4, 49), F(4, 49)),
            Interval(F(1, 2), F(3, 4)),
            Interval(F(9, 10), F(1)),
        ]
        for J in probes:
            expect = sorted(p.a for p in placed_small.members if intersects(p.interval, J))
            assert sorted(placed_small.hits(J)) == expect


class TestBlocks:
    def test_t_values(self):
        assert [t_value(n) for n in range(4)] == [0, 3, 12, 39]

    def test_block_cards_and_levels(self, placed_3280):
        for n in range(7):
            b = block_index(placed_3280, n)
            assert len(b.members) == 3 ** (n + 1)
            assert b.t_n == t_value(n)
            for a in b.members:
                assert placed_3280.member(a).terminal.level == n + 1

    def test_insufficient_members(self, placed_small):
        with pytest.raises(PreconditionError):
            block_index(placed_small, 3)


class TestY:
    def test_empty_cover_all(self, placed_small):
        y = compute_Y(placed_small, EMPTY, 100)
        assert y == frozenset(placed_small.a_values(100))

    def test_double_hit_excludes_both(self, placed_small):
        by_pos = sorted(placed_small.members, key=lambda p: p.interval.lo)
        left, right = by_pos[0], by_pos[1]
        bridge = Interval(left.interval.hi, right.interval.lo)  # touches both only
        cover = geo_cover({0: bridge}, 100, eps=F(1, 1))
        y = compute_Y(placed_small, cover, 100)
        assert left.a not in y and right.a not in y
        assert y == frozenset(placed_small.a_values(100)) - {left.a, right.a}

    def test_private_singletons_keep_everything(self, placed_small):
        intervals = {}
        for d, p in enumerate(placed_small.members[:6]):
            mid = (p.interval.lo + p.interval.hi) / 2
            intervals[d + 7] = Interval(mid, mid)
        cover = geo_cover(intervals, 100)
        y = compute_Y(placed_small, cover, 100)
        assert y == frozenset(placed_small.a_values(100))

    def test_matches_brute_force(self, placed_small):
        targets = [(p.a, p.interval) for p in placed_small.members]
        for seed in range(5):
            cover = adversary_generate(
                "gap-straddle",
                {"window_end": 13, "m": 0, "budget": {"kind": "unbounded"}, "targets": targets},
                seed,
            )
            assert compute_Y(placed_small, cover, 13) == frozenset(
                brute_Y(placed_small, cover, 13)
            )

    def test_window_restriction(self, placed_small):
        y = compute_Y(placed_small, EMPTY, 5)
        assert y == frozenset({1, 2, 3, 4, 5})

    def test_parallel_matches_sequential(self, placed_small):
        targets = [(p.a, p.interval) for p in placed_small.members]
        cover = adversary_generate(
            "gap-straddle",
            {"window_end": 13, "m": 0, "budget": {"kind": "unbounded"}, "targets": targets},
            9,
        )
        seq = compute_Y(placed_small, cover, 13, jobs=1)
        assert compute_Y(placed_small, cover, 13, jobs=4) == seq


def small_stream(value: F, prefix: int = 24) -> Digit7Stream:
    return digits_base7(value, 0, prefix)


class TestZ:
    def test_empty_shifts_is_Y(self, placed_small):
        targets = [(p.a, p.interval) for p in placed_small.members]
        cover = adversary_generate(
            "greedy-hit",
            {"window_end": 13, "m": 0, "budget": {"kind": "unbounded"}, "targets": targets},
            3,
        )
        assert compute_Z(placed_small, cover, [], 13) == compute_Y(placed_small, cover, 13)

    def test_far_shift_leaves_placed_disjoint(self):
        # any shift at least the root length separates the shifted copies
        # from every placed interval
        tree = build_k_hierarchy(Interval(F(0), F(1, 7)), 1, 3)
        placed = place_intervals(tree, OmegaSet.progression(2, 1), 13)
        r = F(1, 7)
        for p in placed.members:
            for q in placed.members:
                assert not intersects(p.interval, shift(q.interval, r))

    def test_margin_shift_gives_Z_equal_Y(self):
        # with r >= 7^-m + 7^-(m+1) even cover intervals hanging off the
        # right edge cannot reach the shifted family
        tree = build_k_hierarchy(Interval(F(0), F(1, 7)), 1, 3)
        placed = place_intervals(tree, OmegaSet.progression(2, 1), 13)
        r = small_stream(F(8, 49))  # 7^-1 + 7^-2
        rightmost = max(placed.members, key=lambda p: p.interval.hi)
        cover = geo_cover({1: Interval(rightmost.interval.hi, rightmost.interval.hi + F(1, 49))}, 50)
        y = compute_Y(placed, cover, 50)
        assert compute_Z(placed, cover, [r], 50) == y

    def test_sub_margin_shift_can_shrink_Z(self):
        # a shift of exactly the root length admits a bridge interval that
        # touches a placed interval and a shifted copy simultaneously
        tree = build_k_hierarchy(Interval(F(0), F(1, 7)), 1, 3)
        placed = place_intervals(tree, OmegaSet.progression(2, 1), 13)
        r = small_stream(F(1, 7))
        rightmost = max(placed.members, key=lambda p: p.interval.hi)
        leftmost = min(placed.members, key=lambda p: p.interval.lo)
        bridge_lo = rightmost.interval.hi
        bridge_hi = leftmost.interval.lo + r.value
        assert bridge_hi - bridge_lo <= F(1, 49)
        cover = geo_cover({1: Interval(bridge_lo, bridge_hi)}, 50)
        z = compute_Z(placed, cover, [r], 50)
        y = compute_Y(placed, cover, 50)
        assert rightmost.a in y and rightmost.a not in z

    def test_matches_brute_force(self, placed_small):
        shifts = [small_stream(F(1, 2)), small_stream(F(3, 5)), small_stream(F(9, 13))]
        targets = [(p.a, p.interval) for p in placed_small.members]
        for seed in range(3):
            cover = adversary_generate(
                "gap-straddle",
                {"window_end": 13, "m": 0, "budget": {"kind": "unbounded"}, "targets": targets},
                seed,
            )
            assert compute_Z(placed_small, cover, shifts, 13) == frozenset(
                brute_Z(placed_small, cover, shifts, 13)
            )

    def test_Z_subset_Y(self, placed_small):
        shifts = [small_stream(F(1, 3))]
        targets = [(p.a, p.interval) for p in placed_small.members]
        cover = adversary_generate(
            "density-budget",
            {"window_end": 13, "m": 0, "budget": {"kind": "unbounded"}, "targets": targets},
            11,
        )
        assert compute_Z(placed_small, cover, shifts, 13) <= compute_Y(placed_small, cover, 13)


class TestQSequence:
    def test_all_threes(self):
        st_ = small_stream(F(1, 2), 8)
        assert st_.digits == (3,) * 8
        assert q_sequence(st_, 5).values == (0, 1, 2, 3, 4)

    def test_even_restart(self):
        st_ = Digit7Stream(0, (0, 0, 2, 0, 5, 1, 1, 1), False)
        q = q_sequence(st_, 2)
        assert q.values == (2, 4) and not q.exhausted

    def test_six_stall_exhaustion(self):
        st_ = Digit7Stream(0, (3, 6, 6, 6), False)
        q = q_sequence(st_, 3)
        assert q.values == (0,) and q.exhausted

    def test_all_zero_prefix(self):
        q = q_sequence(Digit7Stream(0, (0, 0, 0), False), 1)
        assert q.values == () and q.exhausted


class TestStepDiagnostics:
    def test_empty_cover(self, placed_3280):
        d = step_diagnostics(placed_3280, EMPTY, [], 2)
        assert d.y_fraction == 1 and d.z_fraction == 1
        assert d.y_at_least_half and d.big_hit_within_bound and d.small_single_hit

    def test_b_tallies_thirds(self, placed_3280):
        # one shift with digits 3,3,3,...: q = 0,1,2,...; with delta = 1/2
        # the machinery stops at k = 1 and each selected family holds
        # exactly one third of the block
        r = small_stream(F(1, 2), 64)
        d = step_diagnostics(placed_3280, EMPTY, [r], 3, delta=F(1, 2))
        assert d.k == 1 and d.alpha == F(5, 9)
        assert d.n_exceeds_p
        for rep in d.b_sets:
            assert rep.fraction == F(1, 3)
            assert rep.expected_third
            assert rep.consequence_digit_ok
        assert d.b_fraction == d.alpha_pow_s1 == F(5, 9)
        assert d.b_subset_a_prime

    def test_adversary_cover_keeps_half(self, placed_3280):
        targets = [(p.a, p.interval) for p in placed_3280.members]
        cover = adversary_generate(
            "gap-straddle",
            {"window_end": 3280, "m": 0, "budget": {"kind": "sqrt"}, "targets": targets},
            17,
        )
        for n in (2, 4):
            d = step_diagnostics(placed_3280, cover, [], n)
            assert d.y_at_least_half
            assert d.big_hit_within_bound
            assert d.small_single_hit

    def test_exhaustion_propagates(self, placed_3280):
        stalled = Digit7Stream(0, (3,) + (6,) * 12, False)
        with pytest.raises(DigitPrefixExhausted):
            step_diagnostics(placed_3280, EMPTY, [stalled], 2)

    def test_two_shift_table(self, placed_3280):
        r0 = small_stream(F(1, 2), 64)
        r1 = small_stream(F(2, 5), 64)
        d = step_diagnostics(placed_3280, EMPTY, [r0, r1], 5, delta=F(1, 2))
        assert d.s == 1
        # positions strictly increase in lexicographic (i, j) order
        flat = [d.p_table[f"{i},{j}"] for i in range(2) for j in range(d.k + 1)]
        assert flat == sorted(flat) and len(set(flat)) == len(flat)
        assert d.p_prime > max(flat)
        assert d.f_set == frozenset()


@st.composite
def admissible_cover(draw):
    """Seeded small admissible adversary: indices >= m, |J_d| <= 7^-(d+1)."""
    seed = draw(st.integers(0, 10**6))
    strategy = draw(st.sampled_from(["gap-straddle", "greedy-hit", "density-budget"]))
    return seed, strategy


@given(admissible_cover())
@settings(max_examples=12, deadline=None)
def test_step1_bound_property(params):
    seed, strategy = params
    tree = build_k_hierarchy(UNIT, 0, depth_for_terminals(40))
    placed = place_intervals(tree, OmegaSet.omega_plus_one(), 40)
    targets = [(p.a, p.interval) for p in placed.members]
    cover = adversary_generate(
        strategy,
        {"window_end": 40, "m": 0, "budget": {"kind": "unbounded"}, "targets": targets},
        seed,
    )
    y = compute_Y(placed, cover, 40)
    for n in range(3):
        b = block_index(placed, n)
        got = sum(1 for a in b.members if a in y)
        assert got * 2 >= len(b.members)


def test_lower_density_conclusion(placed_3280):
    # prefix-ratio of Z at block boundaries stays near density(A)/4 or above
    targets = [(p.a, p.interval) for p in placed_3280.members]
    shifts = [small_stream(F(1, 2), 64)]
    threshold = density_exact(placed_3280.A) / 4
    for seed in (1, 2):
        cover = adversary_generate(
            "gap-straddle",
            {"window_end": 3280, "m": 0, "budget": {"kind": "sqrt"}, "targets": targets},
            seed,
        )
        z = compute_Z(placed_3280, cover, shifts, 3280)
        for n in range(2, 7):
            boundary = placed_3280.members[t_value(n)].a
            ratio = F(sum(1 for a in z if a <= boundary), boundary + 1)
            assert ratio >= threshold - F(1, 8)
