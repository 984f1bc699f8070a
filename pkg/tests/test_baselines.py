from fractions import Fraction as F

import pytest

from src.baselines import srev, brev, srev_menu, brev_menu, sum_distribution, myerson_price
from src.market import ItemDistribution, ProductDistribution, expected_revenue


def single(*pairs):
    return ProductDistribution((ItemDistribution.of(pairs),))


@pytest.mark.parametrize("dist, price, revenue", [
    (single((1, 1)), 1, 1),
    (single((1, F(1, 2)), (2, F(1, 2))), 1, 1),
    (single((1, F(1, 2)), (3, F(1, 2))), 3, F(3, 2)),
])
def test_srev_single_item(dist, price, revenue):
    result = srev(dist)
    assert result.prices == [price]
    assert result.revenue == revenue


def test_brev_examples(coin12):
    assert brev(single((1, 1))).revenue == 1
    result = brev(coin12)
    assert result.prices == [3]
    assert result.revenue == F(9, 4)

    fixed = ProductDistribution((ItemDistribution.of([(0, 1)]), ItemDistribution.of([(5, 1)])))
    assert brev(fixed).prices == [5]
    assert brev(fixed).revenue == 5


def test_srev_adds_items(coin12):
    result = srev(coin12)
    assert result.prices == [1, 1]
    assert result.revenue == 2


def test_myerson_price_smallest_on_tie():
    assert myerson_price(ItemDistribution.of([(2, F(1, 2)), (4, F(1, 2))])) == (2, 2)


def test_sum_distribution_is_a_distribution(coin12):
    sums = sum_distribution(coin12)
    assert sums == {2: F(1, 4), 3: F(1, 2), 4: F(1, 4)}
    assert sum(sums.values()) == 1


def test_witness_menus_reproduce_revenue():
    dist = ProductDistribution((
        ItemDistribution.of([(1, F(1, 4)), (3, F(3, 4))]),
        ItemDistribution.of([(0, F(1, 2)), (2, F(1, 4)), (5, F(1, 4))]),
    ))
    s = srev(dist)
    b = brev(dist)
    assert expected_revenue(srev_menu(s), dist) == s.revenue
    assert expected_revenue(brev_menu(dist, b), dist) == b.revenue


@pytest.mark.parametrize("dist", [
    ProductDistribution.iid(2, [(1, F(1, 2)), (2, F(1, 2))]),
    ProductDistribution((
        ItemDistribution.of([(1, F(1, 4)), (3, F(3, 4))]),
        ItemDistribution.of([(0, F(1, 2)), (2, F(1, 4)), (5, F(1, 4))]),
    )),
    ProductDistribution((
        ItemDistribution.of([(F(1, 2), F(2, 3)), (4, F(1, 3))]),
        ItemDistribution.of([(1, F(1, 5)), (2, F(3, 5)), (7, F(1, 5))]),
    )),
])
def test_brev_beats_finer_price_grid(dist):
    best = brev(dist).revenue
    sums = sum_distribution(dist)
    points = [F(0)] + sorted(sums)
    for lo, hi in zip(points, points[1:]):
        for step in range(17):
            price = lo + (hi - lo) * F(step, 16)
            sells = sum((q for s, q in sums.items() if s >= price), F(0))
            assert price * sells <= best
