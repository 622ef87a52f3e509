import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from microcover import Interval, OmegaSet, build_X, build_k_hierarchy, place_intervals


@pytest.fixture(scope="session")
def unit_tree_d3():
    return build_k_hierarchy(Interval(Fraction(0), Fraction(1)), 0, 3)


@pytest.fixture(scope="session")
def placed_small(unit_tree_d3):
    """13 placed intervals over omega+1 (depth-2 terminals)."""
    return place_intervals(unit_tree_d3, OmegaSet.omega_plus_one(), 13)


@pytest.fixture(scope="session")
def placed_3280():
    """Full family through block 6: 3280 members over omega+1."""
    tree = build_k_hierarchy(Interval(Fraction(0), Fraction(1)), 0, 7)
    return place_intervals(tree, OmegaSet.omega_plus_one(), 3280)


@pytest.fixture(scope="session")
def x_depth4():
    return build_X(4, 5000)


@pytest.fixture(scope="session")
def x_depth1():
    return build_X(1, 3000)
