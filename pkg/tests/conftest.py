import pytest

from satprop.instance import Instance


@pytest.fixture
def ex1():
    """The unweighted 3-variable, 6-clause working example."""
    return Instance.from_lits(
        3,
        [
            (1, [-1, 2]),
            (1, [-2, 3]),
            (1, [-3, 1]),
            (1, [-1, -2, -3]),
            (1, [1, 2, 3]),
            (1, [1, 2]),
        ],
    )


@pytest.fixture
def ex2():
    """The weighted variant: same clauses, weights 1..6."""
    return Instance.from_lits(
        3,
        [
            (1, [-1, 2]),
            (2, [-2, 3]),
            (3, [-3, 1]),
            (4, [-1, -2, -3]),
            (5, [1, 2, 3]),
            (6, [1, 2]),
        ],
    )


ALL_CONFIGS_3 = [
    (-1, -1, -1),
    (-1, -1, +1),
    (-1, +1, -1),
    (-1, +1, +1),
    (+1, -1, -1),
    (+1, -1, +1),
    (+1, +1, -1),
    (+1, +1, +1),
]
