"""
Market model: discrete product distributions, menus and deterministic buyer behavior.

A single additive buyer values a bundle at the sum of its item values and buys the
entry of maximum utility, or nothing if every entry has negative utility. Ties in
utility go to the higher price, then to the smallest entry index.
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Dict, Any, Sequence, Tuple

from src.errors import ParseError, check_budget
from src.rational import parse_rational, parse_int, format_rational

DEFAULT_VALUATION_BUDGET = 4096

Valuation = Tuple[Fraction, ...]
Bundle = Tuple[int, ...]


def nonempty_bundles(n: int) -> List[Bundle]:
    """All nonempty subsets of range(n), ordered by size then lexicographically."""
    return [
        bundle
        for size in range(1, n + 1)
        for bundle in itertools.combinations(range(n), size)
    ]


@dataclass(frozen=True)
class ItemDistribution:
    """A single item's discrete value distribution."""
    support: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if not self.support:
            raise ParseError("Item support is empty")
        values = [v for v, _ in self.support]
        probs = [q for _, q in self.support]
        if any(v < 0 for v in values):
            raise ParseError(f"Negative support value in {values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ParseError("Support values must be strictly increasing")
        if any(q <= 0 or q > 1 for q in probs):
            raise ParseError("Support probabilities must lie in (0, 1]")
        total = sum(probs, Fraction(0))
        if total != 1:
            raise ParseError(f"Support probabilities sum to {format_rational(total)}, not 1")

    @classmethod
    def of(cls, pairs: Sequence[Tuple[Any, Any]]) -> "ItemDistribution":
        """Build from (value, prob) pairs of any rational-like type."""
        return cls(tuple((parse_rational(v), parse_rational(q)) for v, q in pairs))

    @property
    def values(self) -> List[Fraction]:
        return [v for v, _ in self.support]

    def prob_at_least(self, price: Fraction) -> Fraction:
        return sum((q for v, q in self.support if v >= price), Fraction(0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "support": [
                {"value": format_rational(v), "prob": format_rational(q)} for v, q in self.support
            ]
        }


@dataclass(frozen=True)
class ProductDistribution:
    """n independent item distributions; the valuation grid is their product."""
    items: Tuple[ItemDistribution, ...]

    def __post_init__(self):
        if not self.items:
            raise ParseError("A distribution needs at least one item")

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def grid_size(self) -> int:
        size = 1
        for item in self.items:
            size *= len(item.support)
        return size

    @classmethod
    def iid(cls, n: int, pairs: Sequence[Tuple[Any, Any]]) -> "ProductDistribution":
        item = ItemDistribution.of(pairs)
        return cls(tuple(item for _ in range(n)))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProductDistribution":
        """
        Parse the instance-file structure.

        Args:
            data: {"items": [{"support": [{"value": ..., "prob": ...}, ...]}, ...]}

        Returns:
            ProductDistribution

        Raises:
            ParseError: On missing keys or invariant violations
        """
        try:
            items = data["items"]
            return cls(tuple(
                ItemDistribution.of([(p["value"], p["prob"]) for p in item["support"]])
                for item in items
            ))
        except (KeyError, TypeError) as e:
            raise ParseError(f"Malformed instance: missing or invalid field {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {"items": [item.to_dict() for item in self.items]}

    def scaled(self, c: Fraction) -> "ProductDistribution":
        """Multiply every support value by c > 0."""
        return ProductDistribution(tuple(
            ItemDistribution(tuple((v * c, q) for v, q in item.support)) for item in self.items
        ))


@dataclass(frozen=True)
class MenuEntry:
    """A bundle (0-based item indices, sorted) and its price."""
    bundle: Bundle
    price: Fraction


@dataclass(frozen=True)
class Menu:
    """Finite list of (bundle, price) entries. Duplicates are dropped, keeping the first."""
    entries: Tuple[MenuEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        unique = []
        for entry in self.entries:
            bundle = tuple(sorted(set(entry.bundle)))
            if not bundle:
                raise ParseError("Menu bundles must be nonempty")
            if any(i < 0 for i in bundle):
                raise ParseError(f"Negative item index in bundle {bundle}")
            price = Fraction(entry.price)
            if price < 0:
                raise ParseError(f"Negative price {format_rational(price)}")
            key = (bundle, price)
            if key in seen:
                continue
            seen.add(key)
            unique.append(MenuEntry(bundle, price))
        object.__setattr__(self, "entries", tuple(unique))

    @classmethod
    def of(cls, pairs: Sequence[Tuple[Sequence[int], Any]]) -> "Menu":
        """Build from (0-based bundle, price) pairs."""
        return cls(tuple(MenuEntry(tuple(b), parse_rational(p)) for b, p in pairs))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Menu":
        """Parse the menu-file structure (1-based bundles)."""
        try:
            entries = []
            for e in data["entries"]:
                bundle = [parse_int(i, "bundle index") for i in e["bundle"]]
                if any(i < 1 for i in bundle):
                    raise ParseError(f"Bundle indices are 1-based: {bundle}")
                entries.append(MenuEntry(tuple(i - 1 for i in bundle), parse_rational(e["price"])))
            return cls(tuple(entries))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed menu: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entries": [
                {"bundle": [i + 1 for i in e.bundle], "price": format_rational(e.price)}
                for e in self.entries
            ]
        }

    def __len__(self) -> int:
        return len(self.entries)

    def scaled(self, c: Fraction) -> "Menu":
        return Menu(tuple(MenuEntry(e.bundle, e.price * c) for e in self.entries))

    def max_item(self) -> int:
        return max((max(e.bundle) for e in self.entries), default=-1)


@dataclass(frozen=True)
class BuyerChoice:
    """The buyer's decision; chosen is None for "buy nothing"."""
    chosen: Optional[int]
    utility: Fraction
    price_paid: Fraction


NO_PURCHASE = BuyerChoice(None, Fraction(0), Fraction(0))


def enumerate_valuations(
    dist: ProductDistribution,
    budget: Optional[int] = None
) -> List[Tuple[Valuation, Fraction]]:
    """
    All valuations of the grid with their exact probabilities, in lexicographic order.

    Args:
        dist: Product distribution
        budget: Maximum grid size (default DEFAULT_VALUATION_BUDGET)

    Returns:
        List of (valuation, probability)
    """
    check_budget(
        "valuation grid", dist.grid_size,
        DEFAULT_VALUATION_BUDGET if budget is None else budget,
    )
    grid = []
    for combo in itertools.product(*(item.support for item in dist.items)):
        prob = Fraction(1)
        for _, q in combo:
            prob *= q
        grid.append((tuple(v for v, _ in combo), prob))
    return grid


def bundle_value(v: Valuation, bundle: Bundle) -> Fraction:
    return sum((v[i] for i in bundle), Fraction(0))


def buyer_choice(menu: Menu, v: Valuation) -> BuyerChoice:
    """
    Utility-maximizing entry among those with nonnegative utility.

    Ties go to the higher price, then to the smallest entry index.

    Args:
        menu: Menu offered
        v: Valuation

    Returns:
        BuyerChoice (NO_PURCHASE if every entry has negative utility)
    """
    if menu.max_item() >= len(v):
        raise ValueError(f"Menu refers to item {menu.max_item() + 1} but valuation has {len(v)} items")
    best = None
    best_key = None
    for index, entry in enumerate(menu.entries):
        utility = bundle_value(v, entry.bundle) - entry.price
        if utility < 0:
            continue
        key = (utility, entry.price)
        if best_key is None or key > best_key:
            best_key = key
            best = BuyerChoice(index, utility, entry.price)
    return best if best is not None else NO_PURCHASE


def choice_table(
    menu: Menu,
    dist: ProductDistribution,
    budget: Optional[int] = None
) -> List[Tuple[Valuation, Fraction, BuyerChoice]]:
    """Per-valuation buyer choices over the whole grid."""
    return [(v, prob, buyer_choice(menu, v)) for v, prob in enumerate_valuations(dist, budget)]


def expected_revenue(menu: Menu, dist: ProductDistribution, budget: Optional[int] = None) -> Fraction:
    """
    Exact expected payment of the buyer.

    Args:
        menu: Menu offered
        dist: Product distribution
        budget: Maximum grid size

    Returns:
        Sum over valuations of Pr[v] times the price paid
    """
    return sum(
        (prob * choice.price_paid for _, prob, choice in choice_table(menu, dist, budget)),
        Fraction(0),
    )


def item_pricing_menu(item_prices: Sequence[Fraction]) -> Menu:
    """Every nonempty subset at the sum of its item prices."""
    prices = [Fraction(p) for p in item_prices]
    return Menu(tuple(
        MenuEntry(bundle, sum((prices[i] for i in bundle), Fraction(0)))
        for bundle in nonempty_bundles(len(prices))
    ))


def grand_bundle_menu(n: int, price: Fraction) -> Menu:
    return Menu((MenuEntry(tuple(range(n)), Fraction(price)),))


def discounted_item_pricing_menu(item_prices: Sequence[Fraction], bundle_price: Fraction) -> Menu:
    """
    Item prices plus one grand-bundle price.

    Args:
        item_prices: Price of each individual item
        bundle_price: Price of the grand bundle

    Returns:
        Menu with every nonempty subset at its summed price, then the grand bundle
    """
    if not item_prices:
        raise ValueError("discounted item pricing needs at least one item")
    base = item_pricing_menu(item_prices)
    grand = MenuEntry(tuple(range(len(item_prices))), Fraction(bundle_price))
    return Menu(base.entries + (grand,))
