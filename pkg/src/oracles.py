"""
Ground-truth revenue oracles for tiny instances.

DRev is found by exhausting allocation maps: once every valuation is assigned a
bundle, the cheapest incentive-compatible prices follow from the pointwise-minimal
utilities of a difference-constraint graph, so the price dimension never has to be
searched. Rev is the optimum of the standard LP (fractional allocations), and the
symmetric LP computes the same value for i.i.d. two-point instances with O(n) variables.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Dict, Any, Tuple

from joblib import Parallel, delayed

from src.errors import check_budget, ConsistencyError, InfeasibleError
from src.iid2 import level_probabilities
from src.market import (
    ProductDistribution, Menu, MenuEntry, Valuation, Bundle,
    enumerate_valuations, bundle_value,
)
from src.rational import format_rational, format_vector
from src.simplex import LinearProgram, lp_solve, GE, INFEASIBLE, LpResult

logger = logging.getLogger("bundlepricing.oracles")

DEFAULT_ALLOCATION_BUDGET = 1048576


@dataclass
class AllocationMap:
    """The bundle allocated to each valuation, aligned with enumerate_valuations."""
    valuations: List[Valuation]
    bundles: List[Bundle]

    def __post_init__(self):
        if len(self.valuations) != len(self.bundles):
            raise ValueError("Allocation map must assign a bundle to every valuation")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valuations": [format_vector(v) for v in self.valuations],
            "bundles": [[i + 1 for i in b] for b in self.bundles],
        }


@dataclass
class UtilityAssignment:
    """Buyer utility per valuation (same order as the allocation map)."""
    values: List[Fraction]

    def to_dict(self) -> List[str]:
        return format_vector(self.values)


@dataclass
class DRevResult:
    """Optimal deterministic revenue with one witness mechanism."""
    revenue: Fraction
    alloc: AllocationMap
    utilities: UtilityAssignment
    feasible_maps: int = 0
    nodes_visited: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "revenue": format_rational(self.revenue),
            "allocation": self.alloc.to_dict(),
            "utilities": self.utilities.to_dict(),
            "feasible_maps": self.feasible_maps,
            "nodes_visited": self.nodes_visited,
        }


@dataclass
class SymmetricLpSolution:
    """x[l-1] for levels 1..n, y[l] for levels 0..n-1, pi[l] for levels 0..n."""
    x: List[Fraction]
    y: List[Fraction]
    pi: List[Fraction]

    def to_dict(self) -> Dict[str, Any]:
        return {"x": format_vector(self.x), "y": format_vector(self.y), "pi": format_vector(self.pi)}


@dataclass
class SymmetricLpResult:
    value: Fraction
    solution: SymmetricLpSolution
    constraints: int


def _mask_bundle(mask: int, n: int) -> Bundle:
    return tuple(i for i in range(n) if mask >> i & 1)


def _value_table(valuations: List[Valuation], n: int) -> List[List[Fraction]]:
    """table[a][mask] = value of bundle mask at valuation a."""
    table = []
    for v in valuations:
        row = [Fraction(0)] * (1 << n)
        for mask in range(1, 1 << n):
            low = mask & -mask
            row[mask] = row[mask ^ low] + v[low.bit_length() - 1]
        table.append(row)
    return table


def min_utilities(dist: ProductDistribution, alloc: AllocationMap) -> Optional[UtilityAssignment]:
    """
    Pointwise-minimal utilities compatible with an allocation map.

    Longest-path relaxation over u_w >= u_v + sum_i (w_i - v_i) x_{v,i} and u_v >= 0.

    Args:
        dist: Product distribution the map is defined on
        alloc: Allocation map aligned with enumerate_valuations(dist)

    Returns:
        UtilityAssignment, or None if the graph has a positive cycle
    """
    valuations = alloc.valuations
    size = len(valuations)
    if size != dist.grid_size:
        raise ValueError(f"Allocation map has {size} valuations, grid has {dist.grid_size}")

    gains = [bundle_value(v, b) for v, b in zip(valuations, alloc.bundles)]
    weights = [
        [bundle_value(w, alloc.bundles[a]) - gains[a] for w in valuations]
        for a in range(size)
    ]
    u = [Fraction(0)] * size

    def relax() -> bool:
        changed = False
        for a in range(size):
            row = weights[a]
            for b in range(size):
                if a != b and u[a] + row[b] > u[b]:
                    u[b] = u[a] + row[b]
                    changed = True
        return changed

    for _ in range(size):
        if not relax():
            return UtilityAssignment(u)
    if relax():
        return None
    return UtilityAssignment(u)


def _extend(values, masks, u_prev, k) -> Optional[List[Fraction]]:
    """
    Minimal utilities after appending valuation k to a feasible prefix.

    Starts from the prefix's minimal utilities and relaxes outward from k in rounds;
    without a positive cycle every change settles within k rounds.
    """
    u = u_prev + [Fraction(0)]
    for j in range(k):
        mj = masks[j]
        cand = u[j] + values[k][mj] - values[j][mj]
        if cand > u[k]:
            u[k] = cand

    active = [k]
    rounds = 0
    while active:
        rounds += 1
        if rounds > k + 2:
            return None
        changed = []
        marked = [False] * (k + 1)
        for a in active:
            ma = masks[a]
            base = u[a] - values[a][ma]
            for b in range(k + 1):
                if b == a:
                    continue
                cand = base + values[b][ma]
                if cand > u[b]:
                    u[b] = cand
                    if not marked[b]:
                        marked[b] = True
                        changed.append(b)
        active = changed
    return u


def _search_branch(values, probs, n_masks, first_mask) -> Tuple[Optional[Fraction], Optional[List[int]], int, int]:
    """
    Depth-first search over every map whose first valuation gets first_mask.

    Returns:
        (best revenue, best masks, feasible complete maps, nodes visited)
    """
    size = len(values)
    masks = [0] * size
    masks[0] = first_mask
    best = {"revenue": None, "masks": None, "leaves": 0, "nodes": 1}

    def settle(u: List[Fraction]):
        best["leaves"] += 1
        revenue = sum((probs[a] * (values[a][masks[a]] - u[a]) for a in range(size)), Fraction(0))
        if best["revenue"] is None or revenue > best["revenue"]:
            best["revenue"] = revenue
            best["masks"] = list(masks)

    def visit(k: int, u_prev: List[Fraction]):
        for m in range(n_masks):
            masks[k] = m
            best["nodes"] += 1
            u = _extend(values, masks, u_prev, k)
            if u is None:
                continue
            if k + 1 < size:
                visit(k + 1, u)
            else:
                settle(u)

    root = _extend(values, masks, [], 0)
    if size == 1:
        settle(root)
    else:
        visit(1, root)
    return best["revenue"], best["masks"], best["leaves"], best["nodes"]


def allocation_count(dist: ProductDistribution) -> int:
    """(2^n)^|D|: the number of allocation maps on the grid."""
    return (1 << dist.n) ** dist.grid_size


def drev_bruteforce(
    dist: ProductDistribution,
    budget: Optional[int] = None,
    workers: int = 1,
    progress_tracker=None,
    valuation_budget: Optional[int] = None,
) -> DRevResult:
    """
    Optimal deterministic revenue by exhaustive search over allocation maps.

    Partial maps whose constraint graph already contains a positive cycle are pruned;
    appending valuations only adds edges, so no feasible complete map is skipped.

    Args:
        dist: Product distribution
        budget: Maximum number of allocation maps (2^n)^|D|
        workers: joblib workers; the first valuation's bundle splits the work
        progress_tracker: Optional ProgressTracker
        valuation_budget: Grid budget passed to enumerate_valuations

    Returns:
        DRevResult with the exact optimum and the first optimal map in search order

    Raises:
        BudgetExceededError: If the map count exceeds the budget
    """
    check_budget(
        "allocation maps", allocation_count(dist),
        DEFAULT_ALLOCATION_BUDGET if budget is None else budget,
        "raise --budget-allocations or pass --long",
    )
    grid = enumerate_valuations(dist, valuation_budget)
    valuations = [v for v, _ in grid]
    probs = [q for _, q in grid]
    n_masks = 1 << dist.n
    values = _value_table(valuations, dist.n)

    task = None
    if progress_tracker:
        task = progress_tracker.create_task(
            f"Searching allocation maps ({len(valuations)} valuations)", total=n_masks
        )

    if workers > 1:
        logger.debug(f"Splitting allocation search over {workers} workers")
        branches = Parallel(n_jobs=workers)(
            delayed(_search_branch)(values, probs, n_masks, m) for m in range(n_masks)
        )
        if progress_tracker:
            progress_tracker.update_task(task, advance=n_masks)
    else:
        branches = []
        for m in range(n_masks):
            branches.append(_search_branch(values, probs, n_masks, m))
            if progress_tracker:
                progress_tracker.update_task(task, advance=1)

    best_revenue, best_masks = None, None
    leaves = nodes = 0
    for revenue, masks, branch_leaves, branch_nodes in branches:
        leaves += branch_leaves
        nodes += branch_nodes
        if revenue is not None and (best_revenue is None or revenue > best_revenue):
            best_revenue, best_masks = revenue, masks

    # The all-empty map is always feasible, so a witness exists.
    alloc = AllocationMap(valuations, [_mask_bundle(m, dist.n) for m in best_masks])
    utilities = min_utilities(dist, alloc)
    if utilities is None:
        raise ConsistencyError("Witness allocation map has a positive cycle")
    check = sum(
        (q * (bundle_value(v, b) - u) for v, b, q, u in zip(valuations, alloc.bundles, probs, utilities.values)),
        Fraction(0),
    )
    if check != best_revenue:
        raise ConsistencyError(
            f"Search revenue {format_rational(best_revenue)} != recomputed {format_rational(check)}"
        )
    logger.info(f"DRev = {format_rational(best_revenue)} ({leaves:,} feasible maps, {nodes:,} nodes)")
    return DRevResult(best_revenue, alloc, utilities, leaves, nodes)


def mechanism_prices(dist: ProductDistribution, alloc: AllocationMap, utilities: UtilityAssignment) -> List[Fraction]:
    """Price paid per valuation: value of the allocated bundle minus utility."""
    return [
        bundle_value(v, b) - u
        for v, b, u in zip(alloc.valuations, alloc.bundles, utilities.values)
    ]


def verify_price_ip(dist: ProductDistribution, alloc: AllocationMap, prices: List[Fraction]) -> List[str]:
    """
    Check the price-form IR and non-envy constraints of a deterministic mechanism.

    Args:
        dist: Product distribution
        alloc: Allocation map
        prices: Price per valuation

    Returns:
        Human-readable violations; empty when the mechanism is feasible
    """
    violations = []
    valuations, bundles = alloc.valuations, alloc.bundles
    for a, v in enumerate(valuations):
        own = bundle_value(v, bundles[a]) - prices[a]
        if own < 0:
            violations.append(f"IR violated at {format_vector(v)}: utility {format_rational(own)}")
        for b in range(len(valuations)):
            if b == a:
                continue
            other = bundle_value(v, bundles[b]) - prices[b]
            if other > own:
                violations.append(
                    f"{format_vector(v)} envies {format_vector(valuations[b])}: "
                    f"{format_rational(other)} > {format_rational(own)}"
                )
    return violations


def mechanism_menu(dist: ProductDistribution, alloc: AllocationMap, prices: List[Fraction]) -> Menu:
    """The menu a deterministic mechanism induces (nonempty bundles only)."""
    return Menu(tuple(
        MenuEntry(bundle, price)
        for bundle, price in zip(alloc.bundles, prices)
        if bundle and price >= 0
    ))


def standard_lp(dist: ProductDistribution, valuation_budget: Optional[int] = None) -> LinearProgram:
    """
    Utility-form standard LP.

    Variables per valuation a: x_{a,0..n-1} in [0, 1] then u_a >= 0.
    """
    grid = enumerate_valuations(dist, valuation_budget)
    n = dist.n
    width = len(grid) * (n + 1)

    def x_index(a: int, i: int) -> int:
        return a * (n + 1) + i

    def u_index(a: int) -> int:
        return a * (n + 1) + n

    objective = [Fraction(0)] * width
    for a, (v, q) in enumerate(grid):
        for i in range(n):
            objective[x_index(a, i)] = q * v[i]
        objective[u_index(a)] = -q
    lp = LinearProgram(objective)
    for a in range(len(grid)):
        for i in range(n):
            lp.set_bounds(x_index(a, i), Fraction(0), Fraction(1))

    # u_w - u_v - sum_i (w_i - v_i) x_{v,i} >= 0
    for a, (v, _) in enumerate(grid):
        for b, (w, _) in enumerate(grid):
            if a == b:
                continue
            row = [Fraction(0)] * width
            row[u_index(b)] += 1
            row[u_index(a)] -= 1
            for i in range(n):
                row[x_index(a, i)] -= w[i] - v[i]
            lp.add_constraint(row, GE, 0)
    return lp


def solve_rev_lp(
    dist: ProductDistribution,
    max_variables: Optional[int] = None,
    max_constraints: Optional[int] = None,
    valuation_budget: Optional[int] = None,
) -> LpResult:
    lp = standard_lp(dist, valuation_budget)
    logger.debug(f"Standard LP: {lp.num_variables} variables, {len(lp.constraints)} constraints")
    result = lp_solve(lp, max_variables, max_constraints)
    if result.status == INFEASIBLE:
        raise InfeasibleError("Standard LP is infeasible; the zero mechanism should satisfy it")
    if not result.is_optimal:
        raise ConsistencyError(f"Standard LP reported {result.status}; it is always feasible and bounded")
    return result


def rev_lp(
    dist: ProductDistribution,
    max_variables: Optional[int] = None,
    max_constraints: Optional[int] = None,
    valuation_budget: Optional[int] = None,
) -> Fraction:
    """
    Optimal lottery revenue via the standard LP.

    Args:
        dist: Product distribution
        max_variables: LP variable budget
        max_constraints: LP constraint budget
        valuation_budget: Grid budget

    Returns:
        Exact LP optimum
    """
    return solve_rev_lp(dist, max_variables, max_constraints, valuation_budget).value


class _SymmetricIndex:
    """Column layout of the symmetric LP: x_1..x_n, y_0..y_{n-1}, pi_0..pi_n."""

    def __init__(self, n: int):
        self.n = n
        self.width = 3 * n + 1

    def x(self, level: int) -> Optional[int]:
        return None if level == 0 else level - 1

    def y(self, level: int) -> Optional[int]:
        return None if level == self.n else self.n + level

    def pi(self, level: int) -> int:
        return 2 * self.n + level


def _lottery_utility(index: _SymmetricIndex, b: Fraction, level: int, other: int, overlap: int) -> List[Fraction]:
    """
    Row giving the utility of a level-`level` valuation for the level-`other` lottery
    when `overlap` positions are high in both.
    """
    n = index.n
    row = [Fraction(0)] * index.width
    x_coef = b * overlap + (other - overlap)
    y_coef = b * (level - overlap) + (n - level - other + overlap)
    xi, yi = index.x(other), index.y(other)
    if xi is not None:
        row[xi] += x_coef
    if yi is not None:
        row[yi] += y_coef
    row[index.pi(other)] -= 1
    return row


def symmetric_lp(n: int, b: Fraction, p: Fraction) -> LinearProgram:
    """
    The symmetric LP for n i.i.d. items on {1, b}.

    A level-l lottery sells each high item with probability x_l and each low item with
    probability y_l at price pi_l. Non-envy is imposed for every pair of levels and every
    possible overlap between their high positions.
    """
    b, p = Fraction(b), Fraction(p)
    if b <= 1:
        raise ValueError(f"symmetric LP expects b > 1, got {b}")
    probs = level_probabilities(n, p)
    index = _SymmetricIndex(n)

    objective = [Fraction(0)] * index.width
    for level in range(n + 1):
        objective[index.pi(level)] = probs[level]
    lp = LinearProgram(objective)
    for level in range(1, n + 1):
        lp.set_bounds(index.x(level), Fraction(0), Fraction(1))
    for level in range(n):
        lp.set_bounds(index.y(level), Fraction(0), Fraction(1))
    for level in range(n + 1):
        lp.set_bounds(index.pi(level), None, None)

    seen = set()

    def add(row: List[Fraction]):
        key = tuple(row)
        if key in seen or not any(row):
            return
        seen.add(key)
        lp.add_constraint(row, GE, 0)

    for level in range(n + 1):
        own = _lottery_utility(index, b, level, level, level)
        add(own)
        for other in range(n + 1):
            for overlap in range(max(0, level + other - n), min(level, other) + 1):
                envy = _lottery_utility(index, b, level, other, overlap)
                add([o - e for o, e in zip(own, envy)])
    return lp


def solve_symmetric_lp(n: int, b: Fraction, p: Fraction) -> SymmetricLpResult:
    """
    Solve the symmetric LP exactly.

    Args:
        n: Item count
        b: High value (support normalized to {1, b})
        p: Probability of b

    Returns:
        SymmetricLpResult with the optimum and its (x, y, pi)
    """
    lp = symmetric_lp(n, b, p)
    result = lp_solve(lp)
    if result.status == INFEASIBLE:
        raise InfeasibleError(f"Symmetric LP for n={n}, b={b}, p={p} is infeasible")
    if not result.is_optimal:
        raise ConsistencyError(f"Symmetric LP reported {result.status}")
    point = result.point
    solution = SymmetricLpSolution(
        x=point[:n], y=point[n:2 * n], pi=point[2 * n:],
    )
    logger.debug(f"Symmetric LP n={n}, b={b}, p={p}: {result.value} ({len(lp.constraints)} rows)")
    return SymmetricLpResult(result.value, solution, len(lp.constraints))


def symmetric_rev_lp(n: int, b: Fraction, p: Fraction) -> Fraction:
    return solve_symmetric_lp(n, b, p).value
