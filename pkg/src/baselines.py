"""
Baseline pricings: optimal separate item pricing (SRev) and optimal grand-bundle pricing (BRev).

Both search over attainable values only: price * Pr[X >= price] increases between two
consecutive attainable points, so an optimum always sits on one of them.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Dict, Any, Optional, Sequence, Tuple

from src.errors import check_budget
from src.market import (
    ProductDistribution, ItemDistribution, Menu,
    item_pricing_menu, grand_bundle_menu, DEFAULT_VALUATION_BUDGET,
)
from src.rational import format_rational, format_vector


@dataclass
class PricingResult:
    """Revenue and prices of an item pricing (one price per item) or bundle pricing (one price)."""
    revenue: Fraction
    prices: List[Fraction]

    def to_dict(self) -> Dict[str, Any]:
        return {"revenue": format_rational(self.revenue), "prices": format_vector(self.prices)}


def best_price(candidates: Sequence[Tuple[Fraction, Fraction]]) -> Tuple[Fraction, Fraction]:
    """
    Pick the revenue-maximizing price, smallest price on ties.

    Args:
        candidates: (price, Pr[X >= price]) pairs

    Returns:
        (price, revenue)
    """
    best = None
    for price, tail in sorted(candidates):
        revenue = price * tail
        if best is None or revenue > best[1]:
            best = (price, revenue)
    return best


def myerson_price(item: ItemDistribution) -> Tuple[Fraction, Fraction]:
    """Optimal posted price for one item and its revenue."""
    return best_price([(v, item.prob_at_least(v)) for v in item.values])


def srev(dist: ProductDistribution) -> PricingResult:
    """
    Optimal separate item pricing.

    Args:
        dist: Product distribution

    Returns:
        PricingResult with one price per item; revenue is the sum of per-item optima
    """
    prices, revenue = [], Fraction(0)
    for item in dist.items:
        price, item_revenue = myerson_price(item)
        prices.append(price)
        revenue += item_revenue
    return PricingResult(revenue, prices)


def sum_distribution(dist: ProductDistribution) -> Dict[Fraction, Fraction]:
    """Exact distribution of the total value, by convolution."""
    sums = {Fraction(0): Fraction(1)}
    for item in dist.items:
        nxt: Dict[Fraction, Fraction] = {}
        for s, q in sums.items():
            for v, r in item.support:
                nxt[s + v] = nxt.get(s + v, Fraction(0)) + q * r
        sums = nxt
    return sums


def brev(dist: ProductDistribution, budget: Optional[int] = None) -> PricingResult:
    """
    Optimal grand-bundle price.

    Args:
        dist: Product distribution
        budget: Maximum valuation grid size

    Returns:
        PricingResult with a single price
    """
    check_budget(
        "valuation grid", dist.grid_size,
        DEFAULT_VALUATION_BUDGET if budget is None else budget,
    )
    sums = sum_distribution(dist)
    ordered = sorted(sums)
    tail = Fraction(0)
    candidates = []
    for s in reversed(ordered):
        tail += sums[s]
        candidates.append((s, tail))
    price, revenue = best_price(candidates)
    return PricingResult(revenue, [price])


def srev_menu(result: PricingResult) -> Menu:
    return item_pricing_menu(result.prices)


def brev_menu(dist: ProductDistribution, result: PricingResult) -> Menu:
    return grand_bundle_menu(dist.n, result.prices[0])
