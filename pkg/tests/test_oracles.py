import itertools
from fractions import Fraction as F

import pytest

from src.baselines import srev, brev
from src.errors import BudgetExceededError
from src.iid2 import Iid2Instance, solve_iid2, iid2_distribution
from src.market import (
    ItemDistribution, ProductDistribution, expected_revenue, enumerate_valuations,
    bundle_value, nonempty_bundles,
)
from src.oracles import (
    AllocationMap, min_utilities, drev_bruteforce, rev_lp, symmetric_rev_lp, solve_symmetric_lp,
    mechanism_prices, verify_price_ip, mechanism_menu, allocation_count, standard_lp, symmetric_lp,
)

LONG_BUDGET = 16777216


@pytest.fixture
def coin():
    return ProductDistribution((ItemDistribution.of([(1, F(1, 2)), (2, F(1, 2))]),))


@pytest.fixture
def certain():
    return ProductDistribution((ItemDistribution.of([(1, 1)]),))


def test_min_utilities_both_allocated(coin):
    alloc = AllocationMap([(F(1),), (F(2),)], [(0,), (0,)])
    assert min_utilities(coin, alloc).values == [0, 1]


def test_min_utilities_none_allocated(coin):
    alloc = AllocationMap([(F(1),), (F(2),)], [(), ()])
    assert min_utilities(coin, alloc).values == [0, 0]


def test_min_utilities_positive_cycle(coin):
    alloc = AllocationMap([(F(1),), (F(2),)], [(0,), ()])
    assert min_utilities(coin, alloc) is None


def test_min_utilities_size_mismatch(coin):
    with pytest.raises(ValueError):
        min_utilities(coin, AllocationMap([(F(1),)], [(0,)]))


def test_drev_examples(certain, coin, coin12):
    assert drev_bruteforce(certain).revenue == 1
    assert drev_bruteforce(coin).revenue == 1
    assert drev_bruteforce(coin12).revenue == F(9, 4)
    assert allocation_count(coin12) == 256


def test_drev_witness_is_a_valid_mechanism(coin12):
    result = drev_bruteforce(coin12)
    prices = mechanism_prices(coin12, result.alloc, result.utilities)
    assert verify_price_ip(coin12, result.alloc, prices) == []
    menu = mechanism_menu(coin12, result.alloc, prices)
    assert expected_revenue(menu, coin12) == result.revenue


def test_drev_parallel_matches_serial(coin12):
    serial = drev_bruteforce(coin12, workers=1)
    parallel = drev_bruteforce(coin12, workers=2)
    assert parallel.revenue == serial.revenue
    assert parallel.alloc.bundles == serial.alloc.bundles


def test_drev_budget(coin12):
    with pytest.raises(BudgetExceededError):
        drev_bruteforce(coin12, budget=255)


def test_verify_price_ip_flags_envy(coin):
    alloc = AllocationMap([(F(1),), (F(2),)], [(0,), (0,)])
    violations = verify_price_ip(coin, alloc, [F(1), F(2)])
    assert violations


def test_rev_lp_examples(certain, coin, coin12):
    assert rev_lp(certain) == 1
    assert rev_lp(coin) == 1
    assert rev_lp(coin12) == F(9, 4)


def test_standard_lp_shape(coin12):
    lp = standard_lp(coin12)
    assert lp.num_variables == 4 * 2 + 4
    assert len(lp.constraints) == 4 * 3


def test_rev_lp_budget(coin12):
    with pytest.raises(BudgetExceededError):
        rev_lp(coin12, max_variables=5)


def test_symmetric_lp_examples(coin12):
    assert symmetric_rev_lp(1, F(2), F(1, 2)) == 1
    assert symmetric_rev_lp(2, F(2), F(1, 2)) == F(9, 4)
    expanded = ProductDistribution.iid(2, [(1, F(1, 2)), (3, F(1, 2))])
    assert symmetric_rev_lp(2, F(3), F(1, 2)) == rev_lp(expanded)


def test_symmetric_lp_solution_is_bounded():
    solved = solve_symmetric_lp(3, F(5, 2), F(1, 4))
    assert len(solved.solution.x) == 3
    assert len(solved.solution.pi) == 4
    assert all(0 <= x <= 1 for x in solved.solution.x + solved.solution.y)


def test_symmetric_lp_needs_normalized_support():
    with pytest.raises(ValueError):
        symmetric_rev_lp(2, F(1), F(1, 2))


IID_GRID = [
    (n, b, p)
    for n in (1, 2, 3)
    for b in (F(2), F(3), F(5, 2))
    for p in (F(1, 4), F(1, 2))
]


@pytest.mark.parametrize("n, b, p", [case for case in IID_GRID if case[0] < 3])
def test_iid2_equals_oracles(n, b, p):
    inst = Iid2Instance(n, F(1), b, p)
    dist = iid2_distribution(inst)
    revenue = solve_iid2(inst).revenue
    assert revenue == rev_lp(dist)
    assert revenue == symmetric_rev_lp(n, b, p)
    assert revenue == drev_bruteforce(dist).revenue


@pytest.mark.long
@pytest.mark.parametrize("n, b, p", [case for case in IID_GRID if case[0] == 3])
def test_iid2_equals_oracles_three_items(n, b, p):
    inst = Iid2Instance(n, F(1), b, p)
    dist = iid2_distribution(inst)
    revenue = solve_iid2(inst).revenue
    assert revenue == rev_lp(dist)
    assert revenue == symmetric_rev_lp(n, b, p)
    assert revenue == drev_bruteforce(dist, budget=LONG_BUDGET).revenue


@pytest.mark.parametrize("n, b, p", [case for case in IID_GRID if case[0] < 3])
def test_dominance_chain(n, b, p):
    dist = iid2_distribution(Iid2Instance(n, F(1), b, p))
    drev = drev_bruteforce(dist).revenue
    assert srev(dist).revenue <= drev
    assert brev(dist).revenue <= drev
    assert drev <= rev_lp(dist)


def _lottery_utility(solution, n, b, level, other, overlap):
    x = F(0) if other == 0 else solution.x[other - 1]
    y = F(0) if other == n else solution.y[other]
    high = b * overlap + (other - overlap)
    low = b * (level - overlap) + (n - level - other + overlap)
    return x * high + y * low - solution.pi[other]


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("b", [F(3, 2), F(3)])
@pytest.mark.parametrize("p", [F(1, 4), F(3, 4)])
def test_symmetric_lp_point_meets_every_envy_pair(n, b, p):
    solution = solve_symmetric_lp(n, b, p).solution
    for level in range(n + 1):
        own = _lottery_utility(solution, n, b, level, level, level)
        assert own >= 0
        for other in range(n + 1):
            for overlap in range(max(0, level + other - n), min(level, other) + 1):
                assert own >= _lottery_utility(solution, n, b, level, other, overlap)


def test_symmetric_lp_keeps_same_level_rows():
    n = 3
    lp = symmetric_lp(n, F(2), F(1, 2))
    for level in range(1, n):
        x_col, y_col = level - 1, n + level
        rows = [
            row.coefficients for row in lp.constraints
            if {i for i, a in enumerate(row.coefficients) if a} == {x_col, y_col}
        ]
        assert rows
        assert all(row[x_col] == -row[y_col] > 0 for row in rows)


def test_min_utilities_are_tight_paths(rng):
    dist = ProductDistribution((
        ItemDistribution.of([(0, F(1, 2)), (2, F(1, 2))]),
        ItemDistribution.of([(1, F(1, 3)), (3, F(2, 3))]),
    ))
    grid = [v for v, _ in enumerate_valuations(dist)]
    bundles = [()] + nonempty_bundles(2)
    feasible = 0
    for _ in range(300):
        alloc = AllocationMap(grid, [bundles[int(i)] for i in rng.integers(0, len(bundles), size=len(grid))])
        result = min_utilities(dist, alloc)
        if result is None:
            continue
        feasible += 1
        u = result.values
        gains = [bundle_value(v, b) for v, b in zip(grid, alloc.bundles)]

        def weight(a, b):
            return bundle_value(grid[b], alloc.bundles[a]) - gains[a]

        assert all(x >= 0 for x in u)
        for a in range(len(grid)):
            for b in range(len(grid)):
                if a != b:
                    assert u[b] >= u[a] + weight(a, b)

        reached = {a for a, x in enumerate(u) if x == 0}
        grown = True
        while grown:
            grown = False
            for b in range(len(grid)):
                if b not in reached and any(u[b] == u[a] + weight(a, b) for a in reached if a != b):
                    reached.add(b)
                    grown = True
        assert reached == set(range(len(grid)))
    assert feasible > 0


@pytest.mark.parametrize("values", [(1, 2, 3), (0, 2, 5), (1, F(3, 2), 4)])
def test_single_item_allocations_are_upward_closed(values):
    dist = ProductDistribution((ItemDistribution.of([(v, F(1, 3)) for v in values]),))
    grid = [v for v, _ in enumerate_valuations(dist)]
    for sold in itertools.product([False, True], repeat=len(grid)):
        alloc = AllocationMap(grid, [(0,) if s else () for s in sold])
        upward_closed = all(later for earlier, later in zip(sold, sold[1:]) if earlier)
        assert (min_utilities(dist, alloc) is not None) == upward_closed
