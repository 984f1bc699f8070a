from fractions import Fraction as F

import pytest

from src.errors import ParseError, BudgetExceededError
from src.market import (
    ItemDistribution, ProductDistribution, Menu, MenuEntry, NO_PURCHASE,
    enumerate_valuations, buyer_choice, expected_revenue, choice_table,
    discounted_item_pricing_menu, item_pricing_menu, grand_bundle_menu, bundle_value,
)


def test_singleton_grid():
    dist = ProductDistribution((ItemDistribution.of([(1, 1)]),))
    assert enumerate_valuations(dist) == [((F(1),), F(1))]


def test_uniform_product_grid(coin12):
    grid = enumerate_valuations(coin12)
    assert len(grid) == 4
    assert all(prob == F(1, 4) for _, prob in grid)
    assert [v for v, _ in grid] == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_degenerate_second_item():
    dist = ProductDistribution((
        ItemDistribution.of([(1, F(1, 3)), (2, F(2, 3))]),
        ItemDistribution.of([(0, 1)]),
    ))
    assert enumerate_valuations(dist) == [((1, 0), F(1, 3)), ((2, 0), F(2, 3))]


def test_grid_budget():
    dist = ProductDistribution.iid(13, [(1, F(1, 2)), (2, F(1, 2))])
    with pytest.raises(BudgetExceededError):
        enumerate_valuations(dist)


@pytest.mark.parametrize("support", [
    [(1, F(1, 2)), (2, F(5, 8))],
    [(2, F(1, 2)), (1, F(1, 2))],
    [(1, F(1, 2)), (1, F(1, 2))],
    [(-1, 1)],
    [(1, 0), (2, 1)],
    [],
])
def test_invalid_item_support(support):
    with pytest.raises(ParseError):
        ItemDistribution.of(support)


def test_from_dict_round_trip():
    data = {"items": [{"support": [{"value": "3/2", "prob": "1/4"}, {"value": "2", "prob": "3/4"}]}]}
    dist = ProductDistribution.from_dict(data)
    assert dist.items[0].values == [F(3, 2), 2]
    assert ProductDistribution.from_dict(dist.to_dict()) == dist


def test_from_dict_missing_key():
    with pytest.raises(ParseError):
        ProductDistribution.from_dict({"items": [{"values": []}]})


def test_tie_goes_to_higher_price():
    menu = Menu.of([((0,), 2), ((0, 1), 3)])
    choice = buyer_choice(menu, (F(1), F(2)))
    assert choice.chosen == 1
    assert choice.utility == 0
    assert choice.price_paid == 3


def test_negative_utility_only():
    menu = Menu.of([((0,), 2)])
    assert buyer_choice(menu, (F(1),)) == NO_PURCHASE


def test_symmetric_tie_smallest_index():
    menu = Menu.of([((0,), 1), ((1,), 1)])
    assert buyer_choice(menu, (F(1), F(1))).chosen == 0


def test_menu_dedup_and_validation():
    menu = Menu.of([((0,), 1), ((0,), 1), ((1, 0), 2)])
    assert len(menu) == 2
    assert menu.entries[1].bundle == (0, 1)
    with pytest.raises(ParseError):
        Menu.of([((), 1)])
    with pytest.raises(ParseError):
        Menu.of([((0,), -1)])


def test_menu_file_is_one_based():
    menu = Menu.from_dict({"entries": [{"bundle": [1, 3], "price": "7/2"}]})
    assert menu.entries[0] == MenuEntry((0, 2), F(7, 2))
    assert menu.to_dict() == {"entries": [{"bundle": [1, 3], "price": "7/2"}]}
    with pytest.raises(ParseError):
        Menu.from_dict({"entries": [{"bundle": [0], "price": "1"}]})


def test_expected_revenue_examples(coin12):
    assert expected_revenue(Menu(), coin12) == 0
    assert expected_revenue(grand_bundle_menu(2, F(3)), coin12) == F(9, 4)
    one = ProductDistribution((ItemDistribution.of([(1, 1)]),))
    assert expected_revenue(Menu.of([((0,), 1)]), one) == 1


def test_discounted_item_pricing():
    assert discounted_item_pricing_menu([F(2)], F(2)) == Menu.of([((0,), 2)])
    menu = discounted_item_pricing_menu([F(2), F(2)], F(3))
    assert [(e.bundle, e.price) for e in menu.entries] == [
        ((0,), 2), ((1,), 2), ((0, 1), 4), ((0, 1), 3),
    ]


def test_discounted_item_pricing_revenue(coin12):
    menu = discounted_item_pricing_menu([F(2), F(2)], F(3))
    assert expected_revenue(menu, coin12) == F(9, 4)


def test_item_pricing_menu_covers_all_subsets():
    menu = item_pricing_menu([F(1), F(2), F(4)])
    assert len(menu) == 7
    assert menu.entries[-1] == MenuEntry((0, 1, 2), F(7))


def _random_menu(rng, n):
    entries = []
    for _ in range(int(rng.integers(0, 6))):
        size = int(rng.integers(1, n + 1))
        bundle = tuple(sorted(int(i) for i in rng.choice(n, size=size, replace=False)))
        entries.append((bundle, F(int(rng.integers(0, 13)), int(rng.integers(1, 4)))))
    return Menu.of(entries)


def test_buyer_model_properties(rng):
    n = 3
    for _ in range(10000):
        menu = _random_menu(rng, n)
        v = tuple(F(int(x), 2) for x in rng.integers(0, 9, size=n))
        choice = buyer_choice(menu, v)

        utilities = [bundle_value(v, e.bundle) - e.price for e in menu.entries]
        if choice.chosen is None:
            assert all(u < 0 for u in utilities)
            continue
        chosen = menu.entries[choice.chosen]
        # IR, maximality, tie-break.
        assert choice.utility >= 0
        assert choice.utility == max(utilities)
        tied = [i for i, u in enumerate(utilities) if u == choice.utility]
        top_price = max(menu.entries[i].price for i in tied)
        assert chosen.price == top_price
        assert choice.chosen == min(i for i in tied if menu.entries[i].price == top_price)
        assert buyer_choice(menu, v) == choice

        c = F(int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        scaled = buyer_choice(menu.scaled(c), tuple(x * c for x in v))
        assert scaled.chosen == choice.chosen
        assert scaled.utility == choice.utility * c


def test_choice_table_matches_revenue(coin12):
    menu = discounted_item_pricing_menu([F(2), F(2)], F(3))
    table = choice_table(menu, coin12)
    assert sum(prob * choice.price_paid for _, prob, choice in table) == expected_revenue(menu, coin12)
    assert [choice.chosen for _, _, choice in table] == [None, 3, 3, 3]


def test_menu_item_out_of_range():
    with pytest.raises(ValueError):
        buyer_choice(Menu.of([((2,), 1)]), (F(1), F(1)))


def _random_distribution(rng, n):
    items = []
    for _ in range(n):
        size = int(rng.integers(1, 4))
        values = sorted(set(int(x) for x in rng.integers(0, 8, size=size)))
        weights = [int(w) for w in rng.integers(1, 5, size=len(values))]
        items.append(ItemDistribution.of([(v, F(w, sum(weights))) for v, w in zip(values, weights)]))
    return ProductDistribution(tuple(items))


def test_expected_revenue_scales(rng):
    for _ in range(200):
        dist = _random_distribution(rng, 3)
        menu = _random_menu(rng, 3)
        c = F(int(rng.integers(1, 7)), int(rng.integers(1, 7)))
        scaled_dist, scaled_menu = dist.scaled(c), menu.scaled(c)
        assert expected_revenue(scaled_menu, scaled_dist) == c * expected_revenue(menu, dist)
        original = [choice.chosen for _, _, choice in choice_table(menu, dist)]
        assert [choice.chosen for _, _, choice in choice_table(scaled_menu, scaled_dist)] == original


def test_added_entry_keeps_buyer_invariants(rng):
    n = 3
    for _ in range(2000):
        menu = _random_menu(rng, n)
        extra = _random_menu(rng, n).entries[:1]
        extended = Menu(menu.entries + extra)
        v = tuple(F(int(x), 2) for x in rng.integers(0, 9, size=n))
        before, after = buyer_choice(menu, v), buyer_choice(extended, v)

        assert after.utility >= before.utility
        if after.chosen is None:
            assert all(bundle_value(v, e.bundle) < e.price for e in extended.entries)
        else:
            assert after.utility >= 0
            assert all(after.utility >= bundle_value(v, e.bundle) - e.price for e in extended.entries)


@pytest.mark.parametrize("bundle", [[1.5], [1, 2.0], [True]])
def test_menu_file_rejects_non_integer_items(bundle):
    with pytest.raises(ParseError):
        Menu.from_dict({"entries": [{"bundle": bundle, "price": "1"}]})
