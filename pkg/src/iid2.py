"""
Optimal pricing for i.i.d. items with two-point support {a, b}.

When every item takes value b with probability p and a otherwise, the revenue of
the best lottery menu is achieved by a discounted item pricing: every item at b and
the grand bundle at k*b + (n-k)*a, where k is the first level at which the threshold
expression turns nonnegative.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Dict, Any

from src.errors import ConsistencyError
from src.market import (
    ProductDistribution, Menu, buyer_choice, discounted_item_pricing_menu, enumerate_valuations,
)
from src.rational import format_rational, format_vector

logger = logging.getLogger("bundlepricing.iid2")


@dataclass(frozen=True)
class Iid2Instance:
    """n i.i.d. items on {a, b}; b has probability p."""
    n: int
    a: Fraction
    b: Fraction
    p: Fraction

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Need at least one item, got n={self.n}")
        if not (0 <= self.a < self.b):
            raise ValueError(f"Need 0 <= a < b, got a={self.a}, b={self.b}")
        if not (0 < self.p < 1):
            raise ValueError(f"Need 0 < p < 1, got p={self.p}")


@dataclass
class Iid2Solution:
    """Threshold level k, the discounted item pricing it defines, and its revenue."""
    k: int
    bundle_price: Fraction
    item_price: Fraction
    revenue: Fraction
    level_probs: List[Fraction] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "bundle_price": format_rational(self.bundle_price),
            "item_price": format_rational(self.item_price),
            "revenue": format_rational(self.revenue),
            "level_probs": format_vector(self.level_probs),
        }


def level_probabilities(n: int, p: Fraction) -> List[Fraction]:
    """Binomial probabilities of having exactly i high items, i = 0..n."""
    p = Fraction(p)
    if not (0 < p < 1):
        raise ValueError(f"Need 0 < p < 1, got p={p}")
    return [comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(n + 1)]


def _suffix_sums(probs: List[Fraction]) -> List[Fraction]:
    """suffix[i] = probs[i] + ... + probs[-1]; suffix[len] = 0."""
    suffix = [Fraction(0)] * (len(probs) + 1)
    for i in range(len(probs) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + probs[i]
    return suffix


def threshold_terms(n: int, b: Fraction, p: Fraction) -> List[Fraction]:
    """(n - i) P_i - (b - 1)(P_{i+1} + ... + P_n) for i = 0..n."""
    probs = level_probabilities(n, p)
    suffix = _suffix_sums(probs)
    b = Fraction(b)
    return [(n - i) * probs[i] - (b - 1) * suffix[i + 1] for i in range(n + 1)]


def marginal_terms(n: int, p: Fraction) -> List[Fraction]:
    """P_i (n - i) + sum_{j > i} P_j (n - i/p) for i = 1..n-1; all strictly positive."""
    p = Fraction(p)
    probs = level_probabilities(n, p)
    suffix = _suffix_sums(probs)
    return [probs[i] * (n - i) + suffix[i + 1] * (n - Fraction(i) / p) for i in range(1, n)]


def ratio_terms(n: int, p: Fraction) -> List[Fraction]:
    """(n - i) P_i / sum_{j > i} P_j for i = 0..n-1; strictly increasing in i."""
    probs = level_probabilities(n, p)
    suffix = _suffix_sums(probs)
    return [(n - i) * probs[i] / suffix[i + 1] for i in range(n)]


def find_k(n: int, b: Fraction, p: Fraction) -> int:
    """
    Smallest level i whose threshold term is nonnegative.

    Args:
        n: Item count
        b: High value of the normalized support {1, b}, b > 1
        p: Probability of b

    Returns:
        k in [0, n]

    Raises:
        ConsistencyError: If the terms are not negative-then-nonnegative
    """
    if Fraction(b) <= 1:
        raise ValueError(f"find_k expects a normalized support with b > 1, got b={b}")
    terms = threshold_terms(n, b, p)
    k = next(i for i, t in enumerate(terms) if t >= 0)
    if any(t < 0 for t in terms[k:]):
        raise ConsistencyError(f"Threshold terms change sign more than once: {format_vector(terms)}")
    return k


def normalized_revenue(n: int, b: Fraction, k: int, probs: List[Fraction]) -> Fraction:
    """Revenue of the pricing on support {1, b} with bundle level k."""
    below = sum((b * i * probs[i] for i in range(1, k)), Fraction(0))
    return below + (k * b + n - k) * sum(probs[k:], Fraction(0))


def solve_iid2(inst: Iid2Instance) -> Iid2Solution:
    """
    Optimal discounted item pricing for an i.i.d. two-point instance.

    Args:
        inst: Instance

    Returns:
        Iid2Solution in the instance's own units
    """
    n, a, b, p = inst.n, Fraction(inst.a), Fraction(inst.b), Fraction(inst.p)
    probs = level_probabilities(n, p)

    if a == 0:
        # Every item at b; a zero-valued item is never worth bundling.
        return Iid2Solution(
            k=n, bundle_price=n * b, item_price=b, revenue=n * b * p, level_probs=probs
        )

    ratio = b / a
    k = find_k(n, ratio, p)
    revenue = normalized_revenue(n, ratio, k, probs) * a
    bundle_price = k * b + (n - k) * a
    logger.debug(f"solve_iid2(n={n}, a={a}, b={b}, p={p}): k={k}, revenue={revenue}")
    return Iid2Solution(k=k, bundle_price=bundle_price, item_price=b, revenue=revenue, level_probs=probs)


def iid2_distribution(inst: Iid2Instance) -> ProductDistribution:
    return ProductDistribution.iid(inst.n, [(inst.a, 1 - Fraction(inst.p)), (inst.b, inst.p)])


def iid2_menu(inst: Iid2Instance, solution: Iid2Solution) -> Menu:
    """The discounted item pricing of a solution as an explicit menu."""
    return discounted_item_pricing_menu([solution.item_price] * inst.n, solution.bundle_price)


def high_count(inst: Iid2Instance, v) -> int:
    return sum(1 for x in v if x == inst.b)


def bundle_buyers(inst: Iid2Instance, solution: Iid2Solution, budget=None) -> List[bool]:
    """
    Per valuation (grid order): True iff the buyer takes the grand bundle under the solution.

    Args:
        inst: Instance
        solution: Its solution
        budget: Valuation grid budget

    Returns:
        List of flags aligned with enumerate_valuations
    """
    menu = iid2_menu(inst, solution)
    grand = tuple(range(inst.n))
    flags = []
    for v, _ in enumerate_valuations(iid2_distribution(inst), budget):
        choice = buyer_choice(menu, v)
        flags.append(choice.chosen is not None and menu.entries[choice.chosen].bundle == grand)
    return flags
