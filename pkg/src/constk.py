"""
Exact bundle pricing for a constant number of items.

Buyer behavior only changes when a price vector crosses one of finitely many
hyperplanes (a bundle price equal to a bundle value, two bundles giving equal utility,
two prices equal). An optimal price vector sits at a vertex of that arrangement, so
the solver intersects every d-subset of planes, keeps the nonnegative solutions and
evaluates each one as a menu.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Dict, Any, Optional, Tuple, Iterator

from joblib import Parallel, delayed

from src.errors import check_budget
from src.market import (
    ProductDistribution, Menu, MenuEntry, Bundle,
    nonempty_bundles, enumerate_valuations, bundle_value, expected_revenue,
)
from src.rational import format_rational, format_vector
from src.simplex import linear_system_solve

logger = logging.getLogger("bundlepricing.constk")

VALUE_PRICE = "value-price"
BUNDLE_VS_BUNDLE = "bundle-vs-bundle"
PRICE_VS_PRICE = "price-vs-price"

DEFAULT_MAX_ITEMS = 3
DEFAULT_SUBSET_BUDGET = 2000000


@dataclass(frozen=True)
class Hyperplane:
    """coefficients · p = rhs over the d bundle prices."""
    coefficients: Tuple[Fraction, ...]
    rhs: Fraction
    kind: str

    def __post_init__(self):
        if not any(self.coefficients):
            raise ValueError("Hyperplane needs a nonzero coefficient")

    def normalized(self) -> "Hyperplane":
        """Scale so the first nonzero coefficient is 1."""
        lead = next(c for c in self.coefficients if c != 0)
        if lead == 1:
            return self
        return Hyperplane(tuple(c / lead for c in self.coefficients), self.rhs / lead, self.kind)

    def key(self) -> Tuple[Tuple[Fraction, ...], Fraction]:
        return self.coefficients, self.rhs

    def side(self, prices: List[Fraction]) -> int:
        """Sign of coefficients · p - rhs."""
        diff = sum((c * x for c, x in zip(self.coefficients, prices)), Fraction(0)) - self.rhs
        return (diff > 0) - (diff < 0)


@dataclass(frozen=True)
class PriceVector:
    """One price per nonempty bundle, in bundle_order."""
    prices: Tuple[Fraction, ...]

    def to_dict(self, k: int) -> List[Dict[str, Any]]:
        return [
            {"bundle": [i + 1 for i in bundle], "price": format_rational(price)}
            for bundle, price in zip(bundle_order(k), self.prices)
        ]


@dataclass
class Candidate:
    prices: PriceVector
    revenue: Fraction


@dataclass
class ConstkResult:
    """Best price vector over all arrangement vertices."""
    best_prices: PriceVector
    revenue: Fraction
    candidates_examined: int
    k: int
    planes: int = 0
    subsets: int = 0
    candidates: List[Candidate] = field(default_factory=list)

    def to_dict(self, emit_candidates: bool = False) -> Dict[str, Any]:
        data = {
            "k": self.k,
            "revenue": format_rational(self.revenue),
            "best_prices": self.best_prices.to_dict(self.k),
            "candidates_examined": self.candidates_examined,
            "hyperplanes": self.planes,
            "subsets": self.subsets,
        }
        if emit_candidates:
            data["candidates"] = [
                {"prices": format_vector(c.prices.prices), "revenue": format_rational(c.revenue)}
                for c in self.candidates
            ]
        return data


def bundle_order(k: int) -> List[Bundle]:
    """The d = 2^k - 1 priced bundles: by size, then lexicographically."""
    return nonempty_bundles(k)


def iter_hyperplanes(dist: ProductDistribution, valuation_budget: Optional[int] = None) -> Iterator[Hyperplane]:
    """All planes of the three families, before normalization and dedup."""
    bundles = bundle_order(dist.n)
    d = len(bundles)

    def unit(j: int, jj: Optional[int] = None) -> Tuple[Fraction, ...]:
        row = [Fraction(0)] * d
        row[j] = Fraction(1)
        if jj is not None:
            row[jj] = Fraction(-1)
        return tuple(row)

    grid = enumerate_valuations(dist, valuation_budget)
    for v, _ in grid:
        for j, bundle in enumerate(bundles):
            yield Hyperplane(unit(j), bundle_value(v, bundle), VALUE_PRICE)
    for v, _ in grid:
        for j, jj in itertools.combinations(range(d), 2):
            yield Hyperplane(
                unit(j, jj), bundle_value(v, bundles[j]) - bundle_value(v, bundles[jj]), BUNDLE_VS_BUNDLE
            )
    for j, jj in itertools.combinations(range(d), 2):
        yield Hyperplane(unit(j, jj), Fraction(0), PRICE_VS_PRICE)


def build_hyperplanes(
    dist: ProductDistribution,
    max_items: int = DEFAULT_MAX_ITEMS,
    valuation_budget: Optional[int] = None,
) -> List[Hyperplane]:
    """
    Deduplicated hyperplane set of the buyer-behavior arrangement.

    Args:
        dist: Product distribution with k items
        max_items: Largest k accepted
        valuation_budget: Grid budget

    Returns:
        Normalized planes in first-seen order
    """
    check_budget("items for the constant-k solver", dist.n, max_items, "raise --max-items")
    seen = set()
    planes = []
    for plane in iter_hyperplanes(dist, valuation_budget):
        plane = plane.normalized()
        if plane.key() in seen:
            continue
        seen.add(plane.key())
        planes.append(plane)
    return planes


def enumerate_vertices(
    planes: List[Hyperplane],
    d: int,
    budget: int = DEFAULT_SUBSET_BUDGET,
    progress_tracker=None,
) -> List[PriceVector]:
    """
    Nonnegative intersection points of every d-subset of planes.

    Args:
        planes: Hyperplanes over d prices
        d: Dimension
        budget: Maximum number of subsets C(|H|, d)
        progress_tracker: Optional ProgressTracker

    Returns:
        Distinct vertices in discovery order
    """
    total = comb(len(planes), d)
    check_budget("hyperplane subsets", total, budget, "reduce items or support size")

    task = None
    if progress_tracker:
        task = progress_tracker.create_task(f"Intersecting {len(planes)} hyperplanes", total=total)

    seen = set()
    vertices = []
    singular = negative = 0
    for count, subset in enumerate(itertools.combinations(planes, d), 1):
        solution = linear_system_solve([p.coefficients for p in subset], [p.rhs for p in subset])
        if not solution.unique:
            singular += 1
        elif any(x < 0 for x in solution.point):
            negative += 1
        else:
            point = tuple(solution.point)
            if point not in seen:
                seen.add(point)
                vertices.append(PriceVector(point))
        if progress_tracker and count % 1000 == 0:
            progress_tracker.update_task(task, advance=1000)
    if progress_tracker:
        progress_tracker.update_task(task, advance=0, completed=total)

    logger.debug(
        f"{total:,} subsets: {singular:,} singular, {negative:,} negative, {len(vertices):,} vertices"
    )
    return vertices


def price_menu(prices: PriceVector, k: int) -> Menu:
    """Every nonempty bundle at its price."""
    return Menu(tuple(MenuEntry(bundle, price) for bundle, price in zip(bundle_order(k), prices.prices)))


def sign_pattern(planes: List[Hyperplane], prices: List[Fraction]) -> Tuple[int, ...]:
    return tuple(plane.side(prices) for plane in planes)


def _evaluate_chunk(chunk: List[PriceVector], dist: ProductDistribution, budget) -> List[Fraction]:
    return [expected_revenue(price_menu(pv, dist.n), dist, budget) for pv in chunk]


def evaluate_candidates(
    vertices: List[PriceVector],
    dist: ProductDistribution,
    workers: int = 1,
    valuation_budget: Optional[int] = None,
    progress_tracker=None,
) -> List[Candidate]:
    """Expected revenue of every vertex's menu, in input order."""
    if workers > 1 and len(vertices) > workers:
        size = -(-len(vertices) // workers)
        chunks = [vertices[i:i + size] for i in range(0, len(vertices), size)]
        results = Parallel(n_jobs=workers)(
            delayed(_evaluate_chunk)(chunk, dist, valuation_budget) for chunk in chunks
        )
        revenues = [r for part in results for r in part]
    else:
        task = None
        if progress_tracker:
            task = progress_tracker.create_task("Evaluating candidate prices", total=len(vertices))
        revenues = []
        for pv in vertices:
            revenues.append(expected_revenue(price_menu(pv, dist.n), dist, valuation_budget))
            if progress_tracker:
                progress_tracker.update_task(task, advance=1)
    return [Candidate(pv, r) for pv, r in zip(vertices, revenues)]


def solve_constk(
    dist: ProductDistribution,
    max_items: int = DEFAULT_MAX_ITEMS,
    subset_budget: int = DEFAULT_SUBSET_BUDGET,
    workers: int = 1,
    valuation_budget: Optional[int] = None,
    progress_tracker=None,
) -> ConstkResult:
    """
    Optimal bundle pricing for k items by vertex enumeration.

    Args:
        dist: Product distribution
        max_items: Largest k accepted
        subset_budget: Maximum number of plane subsets
        workers: joblib workers for candidate evaluation
        valuation_budget: Grid budget
        progress_tracker: Optional ProgressTracker

    Returns:
        ConstkResult; among maximizers the lexicographically smallest price vector
    """
    k = dist.n
    d = (1 << k) - 1
    planes = build_hyperplanes(dist, max_items, valuation_budget)
    vertices = enumerate_vertices(planes, d, subset_budget, progress_tracker)
    candidates = evaluate_candidates(vertices, dist, workers, valuation_budget, progress_tracker)

    best = None
    for candidate in candidates:
        if (
            best is None
            or candidate.revenue > best.revenue
            or (candidate.revenue == best.revenue and candidate.prices.prices < best.prices.prices)
        ):
            best = candidate
    logger.info(
        f"k={k}: {len(planes)} planes, {len(candidates)} candidates, best revenue {format_rational(best.revenue)}"
    )
    return ConstkResult(
        best_prices=best.prices,
        revenue=best.revenue,
        candidates_examined=len(candidates),
        k=k,
        planes=len(planes),
        subsets=comb(len(planes), d),
        candidates=candidates,
    )
