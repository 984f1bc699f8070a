"""
Hard instances for optimal bundle pricing, built from subset-sum counting.

A COMP instance (B, W, t) asks whether at least t half-size subsets of B reach the
sum w of W. The instance is first rewritten so two structural conditions hold (COMP*),
then turned into an (n+1)-item pricing instance whose optimum is one of two discounted
item pricings; which one wins encodes the answer. Everything is exact: sigma is a
bignum and the winner is decided by an exact revenue comparison.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Tuple, Dict, Any, Optional, Sequence

import numpy as np

from src.errors import ParseError, ConsistencyError, check_budget
from src.iid2 import level_probabilities
from src.market import (
    ProductDistribution, ItemDistribution, Menu,
    grand_bundle_menu, discounted_item_pricing_menu, expected_revenue,
)
from src.rational import parse_int, format_rational, format_vector

logger = logging.getLogger("bundlepricing.hardness")

SOLUTION1 = "solution1"
SOLUTION2 = "solution2"

DEFAULT_TSTAR_BUDGET = 1000000


@dataclass(frozen=True)
class CompInstance:
    """
    B: n nondecreasing integers in [0, 2^n]; W: 0-based indices of an n/2-subset; t: threshold.
    """
    B: Tuple[int, ...]
    W: Tuple[int, ...]
    t: int

    def __post_init__(self):
        n = len(self.B)
        if n < 2 or n % 2:
            raise ParseError(f"B must have an even, positive number of entries, got {n}")
        if any(not isinstance(b, int) or isinstance(b, bool) for b in self.B):
            raise ParseError("B entries must be integers")
        if any(b < 0 or b > 2 ** n for b in self.B):
            raise ParseError(f"B entries must lie in [0, 2^{n}]")
        if any(y < x for x, y in zip(self.B, self.B[1:])):
            raise ParseError("B must be nondecreasing")
        if len(set(self.W)) != n // 2 or len(self.W) != n // 2:
            raise ParseError(f"W must hold {n // 2} distinct indices")
        if any(i < 0 or i >= n for i in self.W):
            raise ParseError(f"W indices must lie in [1, {n}]")
        object.__setattr__(self, "W", tuple(sorted(self.W)))

    @property
    def n(self) -> int:
        return len(self.B)

    @property
    def w(self) -> int:
        return sum(self.B[i] for i in self.W)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CompInstance":
        """Parse {"B": [ints], "W": [1-based indices], "t": int}."""
        try:
            B = tuple(parse_int(b, "B entry") for b in data["B"])
            W = tuple(parse_int(i, "W index") - 1 for i in data["W"])
            t = parse_int(data["t"], "t")
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed COMP instance: {e}") from e
        return cls(B, W, t)

    def to_dict(self) -> Dict[str, Any]:
        return {"B": list(self.B), "W": [i + 1 for i in self.W], "t": self.t}


def condition_sums(B: Sequence[int]) -> Tuple[int, int]:
    """
    Extremal half-subset sums the two conditions compare against w.

    Returns:
        (smallest sum of an n/2-subset containing index n,
         largest sum of an n/2-subset avoiding index n and containing index 1 or 2)
    """
    n = len(B)
    half = n // 2
    low_with_last = sum(B[:half - 1]) + B[-1]
    if n == 2:
        high_without_last = B[0]
    else:
        high_without_last = B[1] + sum(B[half:n - 1])
    return low_with_last, high_without_last


def compstar_conditions(B: Sequence[int], W: Sequence[int]) -> Tuple[bool, bool]:
    """Whether (B, W) satisfies the two COMP* conditions."""
    w = sum(B[i] for i in W)
    low_with_last, high_without_last = condition_sums(B)
    return low_with_last >= w, high_without_last < w


@dataclass(frozen=True)
class CompStarInstance(CompInstance):
    """A COMP instance whose (B, W) satisfies both structural conditions."""

    def __post_init__(self):
        super().__post_init__()
        first, second = compstar_conditions(self.B, self.W)
        if not (first and second):
            raise ParseError(
                f"(B, W) violates COMP* condition {'1' if not first else '2'}"
            )

    @classmethod
    def of(cls, inst: CompInstance) -> "CompStarInstance":
        return cls(inst.B, inst.W, inst.t)


def count_comp(B: Sequence[int], w: int, size: int, budget: Optional[int] = None) -> int:
    """
    Number of size-subsets of B whose sum is at least w.

    Args:
        B: Integers
        w: Target
        size: Subset size
        budget: Maximum number of subsets enumerated

    Returns:
        Exact count
    """
    total = comb(len(B), size)
    if budget is not None:
        check_budget("subsets counted", total, budget)
    return sum(1 for subset in itertools.combinations(B, size) if sum(subset) >= w)


def count_tstar(inst: CompInstance, budget: Optional[int] = DEFAULT_TSTAR_BUDGET) -> int:
    """t*: the number of n/2-subsets of B whose sum reaches w."""
    return count_comp(inst.B, inst.w, inst.n // 2, budget)


def comp_to_compstar(inst: CompInstance) -> Tuple[CompStarInstance, int]:
    """
    Rewrite a COMP instance on n integers as a COMP* instance on 4n integers.

    Args:
        inst: Source instance

    Returns:
        (CompStarInstance with t set to t', t')

    Raises:
        ConsistencyError: If the output fails a COMP* condition
    """
    n = inst.n
    lifted = 2 ** (2 * n)
    heavy = 2 ** (3 * n)
    # (value, origin) where origin is ("b", i), ("top",), ("heavy", j) or ("zero", j)
    tagged = [(lifted + b, ("b", i)) for i, b in enumerate(inst.B)]
    tagged.append((2 ** (4 * n), ("top", 0)))
    tagged += [(heavy, ("heavy", j)) for j in range(3 * n // 2)]
    tagged += [(0, ("zero", j)) for j in range(3 * n // 2 - 1)]
    tagged.sort(key=lambda item: (item[0], item[1]))

    b_prime_set = tuple(value for value, _ in tagged)
    chosen = set(("b", i) for i in inst.W) | set(("heavy", j) for j in range(3 * n // 2))
    w_prime_indices = tuple(pos for pos, (_, origin) in enumerate(tagged) if origin in chosen)
    t_prime = comb(4 * n - 1, 2 * n - 1) + inst.t

    expected_w = (3 * n // 2) * heavy + (n // 2) * lifted + inst.w
    actual_w = sum(b_prime_set[i] for i in w_prime_indices)
    if actual_w != expected_w:
        raise ConsistencyError(f"Reduced target {actual_w} != {expected_w}")

    first, second = compstar_conditions(b_prime_set, w_prime_indices)
    if not (first and second):
        raise ConsistencyError(f"Reduced instance violates COMP* conditions: ({first}, {second})")
    logger.debug(f"COMP n={n} -> COMP* n={4 * n}, w'={actual_w}, t'={t_prime}")
    return CompStarInstance(b_prime_set, w_prime_indices, t_prime), t_prime


def random_compstar(n: int, rng: np.random.Generator, t: int = 1) -> CompStarInstance:
    """
    Random COMP* instance on n integers.

    b_n = 2^n, the others are uniform in [0, 2^n / (n/2)]; W is uniform among the
    n/2-subsets that satisfy both conditions (resampling B when none does).

    Args:
        n: Even size
        rng: numpy Generator
        t: Threshold stored on the instance

    Returns:
        CompStarInstance
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and positive, got {n}")
    top = 2 ** n
    cap = top // (n // 2)
    while True:
        rest = sorted(int(x) for x in rng.integers(0, cap + 1, size=n - 1))
        B = tuple(rest + [top])
        valid = [
            W for W in itertools.combinations(range(n), n // 2)
            if all(compstar_conditions(B, W))
        ]
        if valid:
            W = valid[int(rng.integers(len(valid)))]
            return CompStarInstance(B, W, t)


@dataclass
class HardInstance:
    """The (n+1)-item pricing instance and every parameter of its construction."""
    comp: CompStarInstance
    t: int
    h: Fraction
    p: Fraction
    delta: Fraction
    a: List[Fraction]
    hi: List[Fraction]
    c: Fraction
    alpha: Fraction
    sigma: Fraction
    tau: Fraction
    a_prime: Fraction
    rev_b_term: Fraction
    c_prime: Fraction
    eps: Fraction

    @property
    def n(self) -> int:
        return self.comp.n

    @property
    def special_low_prob(self) -> Fraction:
        return 1 - self.tau + self.eps

    @property
    def special_high_prob(self) -> Fraction:
        return self.tau - self.eps

    def parameters(self) -> Dict[str, Any]:
        return {
            "h": format_rational(self.h),
            "p": format_rational(self.p),
            "delta": format_rational(self.delta),
            "a": format_vector(self.a),
            "hi": format_vector(self.hi),
            "c": format_rational(self.c),
            "alpha": format_rational(self.alpha),
            "sigma": format_rational(self.sigma),
            "tau": format_rational(self.tau),
            "a_prime": format_rational(self.a_prime),
            "rev_b_term": format_rational(self.rev_b_term),
            "c_prime": format_rational(self.c_prime),
            "eps": format_rational(self.eps),
        }

    def to_dict(self) -> Dict[str, Any]:
        data = {"compstar": self.comp.to_dict(), "t": self.t}
        data.update(self.parameters())
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HardInstance":
        """Rebuild from compstar and t, then check any stored parameters against it."""
        try:
            comp = CompStarInstance.of(CompInstance.from_dict(data["compstar"]))
            t = parse_int(data["t"], "t")
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed hard instance: {e}") from e
        try:
            hard = build_hard_instance(comp, t)
        except ValueError as e:
            raise ParseError(f"Malformed hard instance: {e}") from e
        rebuilt = hard.parameters()
        for key, value in rebuilt.items():
            if key in data and data[key] != value:
                raise ParseError(f"Stored parameter {key} does not match the rebuilt instance")
        return hard


def _prob_more_than_half(n: int, p: Fraction) -> Fraction:
    probs = level_probabilities(n, p)
    return sum(probs[n // 2 + 1:], Fraction(0))


def build_hard_instance(comp: CompStarInstance, t: int) -> HardInstance:
    """
    Compute every construction parameter exactly.

    Args:
        comp: COMP* instance
        t: Threshold, 1 <= t <= 2^n

    Returns:
        HardInstance

    Raises:
        ValueError: On a bad n or t
        ConsistencyError: If the special item's probabilities leave (0, 1)
    """
    n = comp.n
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and at least 2, got {n}")
    if not 1 <= t <= 2 ** n:
        raise ValueError(f"t must lie in [1, 2^{n}], got {t}")

    h = Fraction(2 ** (2 * n))
    p = 1 / (2 * (h + 1))
    delta = Fraction(1, 2 ** (3 * n))
    a = [b * delta for b in comp.B]
    hi = [h + ai for ai in a]
    c = comp.w * delta
    alpha = Fraction(n, 2) * h + c
    sigma = 1 / p ** n
    tau = sigma / (sigma + alpha)

    top = n + sigma + alpha
    more_than_half = _prob_more_than_half(n, p)
    high_mass = sum((x + 1 for x in hi), Fraction(0)) * p
    a_prime = top * (1 - more_than_half) - high_mass
    rev_b_term = top * tau + (1 - tau) * high_mass
    c_prime = top * (1 - tau) * p ** (n // 2) * (1 - p) ** (n // 2)
    eps = (
        c_prime * (t - Fraction(1, 2))
        - alpha * n / (2 * (sigma + alpha))
        + (1 - tau) * p * sum(a, Fraction(0))
    ) / a_prime

    hard = HardInstance(
        comp=comp, t=t, h=h, p=p, delta=delta, a=a, hi=hi, c=c, alpha=alpha,
        sigma=sigma, tau=tau, a_prime=a_prime, rev_b_term=rev_b_term, c_prime=c_prime, eps=eps,
    )
    if not (0 < hard.special_high_prob < 1):
        raise ConsistencyError(f"tau - eps = {format_rational(hard.special_high_prob)} is not in (0, 1)")
    return hard


def hard_distribution(hard: HardInstance) -> ProductDistribution:
    """Items i on {1, h_i + 1} (high with probability p); the special item last on {sigma, sigma + alpha}."""
    items = [
        ItemDistribution(((Fraction(1), 1 - hard.p), (x + 1, hard.p))) for x in hard.hi
    ]
    items.append(ItemDistribution((
        (hard.sigma, hard.special_low_prob),
        (hard.sigma + hard.alpha, hard.special_high_prob),
    )))
    return ProductDistribution(tuple(items))


def solution1_menu(hard: HardInstance) -> Menu:
    return grand_bundle_menu(hard.n + 1, hard.sigma + hard.n)


def solution2_menu(hard: HardInstance) -> Menu:
    """Each item at its high value and the grand bundle at sigma + alpha + n."""
    prices = [x + 1 for x in hard.hi] + [hard.sigma + hard.alpha]
    return discounted_item_pricing_menu(prices, hard.sigma + hard.alpha + hard.n)


def low_sum_mass(hard: HardInstance, budget: Optional[int] = DEFAULT_TSTAR_BUDGET) -> Fraction:
    """
    Sum over sets S with sum_{i in S} h_i < alpha of Pr[S] * sum_{i in S} (h_i + 1).

    Levels below n/2 always qualify and are summed in closed form; level n/2 is enumerated.
    """
    n, p = hard.n, hard.p
    half = n // 2
    total_high = sum((x + 1 for x in hard.hi), Fraction(0))
    mass = Fraction(0)
    for j in range(1, half):
        mass += p ** j * (1 - p) ** (n - j) * comb(n - 1, j - 1) * total_high
    if budget is not None:
        check_budget("half-size subsets", comb(n, half), budget)
    level_prob = p ** half * (1 - p) ** half
    B, w = hard.comp.B, hard.comp.w
    for subset in itertools.combinations(range(n), half):
        if sum(B[i] for i in subset) < w:
            mass += level_prob * sum((hard.hi[i] + 1 for i in subset), Fraction(0))
    return mass


@dataclass
class SolutionPair:
    """Both candidate pricings with their exact revenues."""
    rev1: Fraction
    rev2: Fraction
    sol1_menu: Menu
    sol2_menu: Menu
    t_star: int
    a_prime: Fraction
    rev_b_term: Fraction
    c_prime: Fraction
    direct_checked: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rev1": format_rational(self.rev1),
            "rev2": format_rational(self.rev2),
            "t_star": self.t_star,
            "a_prime": format_rational(self.a_prime),
            "rev_b_term": format_rational(self.rev_b_term),
            "c_prime": format_rational(self.c_prime),
            "direct_checked": self.direct_checked,
            "solution1_menu": self.sol1_menu.to_dict(),
            "solution2_menu": self.sol2_menu.to_dict(),
        }


def solution2_revenue(hard: HardInstance, t_star: int, budget: Optional[int] = DEFAULT_TSTAR_BUDGET) -> Fraction:
    n, p = hard.n, hard.p
    top = n + hard.sigma + hard.alpha
    bundle_share = _prob_more_than_half(n, p) + t_star * p ** (n // 2) * (1 - p) ** (n // 2)
    return (
        top * (hard.special_high_prob + hard.special_low_prob * bundle_share)
        + hard.special_low_prob * low_sum_mass(hard, budget)
    )


def build_solutions(
    hard: HardInstance,
    tstar_budget: Optional[int] = DEFAULT_TSTAR_BUDGET,
    direct_eval_max_n: int = 0,
) -> SolutionPair:
    """
    Solutions 1 and 2 and their closed-form revenues.

    Args:
        hard: Hard instance
        tstar_budget: Subset budget for t* and the low-sum enumeration
        direct_eval_max_n: Cross-check the closed forms by evaluating both menus on the
            full grid when n is at most this

    Returns:
        SolutionPair

    Raises:
        ConsistencyError: If a closed form disagrees with direct evaluation
    """
    t_star = count_tstar(hard.comp, tstar_budget)
    rev1 = hard.n + hard.sigma
    rev2 = solution2_revenue(hard, t_star, tstar_budget)
    pair = SolutionPair(
        rev1=rev1, rev2=rev2,
        sol1_menu=solution1_menu(hard), sol2_menu=solution2_menu(hard),
        t_star=t_star, a_prime=hard.a_prime, rev_b_term=hard.rev_b_term, c_prime=hard.c_prime,
    )
    if hard.n <= direct_eval_max_n:
        direct1, direct2 = direct_revenues(hard, pair)
        if direct1 != rev1 or direct2 != rev2:
            raise ConsistencyError(
                f"Closed forms ({format_rational(rev1)}, {format_rational(rev2)}) disagree with "
                f"direct evaluation ({format_rational(direct1)}, {format_rational(direct2)})"
            )
        pair.direct_checked = True
    return pair


def direct_revenues(hard: HardInstance, pair: SolutionPair) -> Tuple[Fraction, Fraction]:
    """Expected revenue of both menus over the full valuation grid."""
    dist = hard_distribution(hard)
    return expected_revenue(pair.sol1_menu, dist), expected_revenue(pair.sol2_menu, dist)


@dataclass
class Verdict:
    """Winner of the exact comparison plus the audited residual."""
    winner: str
    margin: Fraction
    residual: Fraction
    residual_bound: Fraction

    @property
    def within_bound(self) -> bool:
        return abs(self.residual) < self.residual_bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "winner": self.winner,
            "margin": format_rational(self.margin),
            "residual": format_rational(self.residual),
            "residual_bound": format_rational(self.residual_bound),
            "within_bound": self.within_bound,
        }


def decide_winner(pair: SolutionPair, t: int) -> Verdict:
    """
    Solution 2 iff rev2 > rev1, exactly.

    Args:
        pair: Solutions of a hard instance
        t: Threshold the instance was built with

    Returns:
        Verdict with residual rev2 - rev1 - C'(t* - t + 1/2) and bound C'/2

    Raises:
        ConsistencyError: If the revenues tie
    """
    margin = pair.rev2 - pair.rev1
    if margin == 0:
        logger.error("Solution revenues tie exactly; the construction should separate them")
        raise ConsistencyError("rev1 == rev2")
    residual = margin - pair.c_prime * (pair.t_star - t + Fraction(1, 2))
    return Verdict(
        winner=SOLUTION2 if margin > 0 else SOLUTION1,
        margin=margin,
        residual=residual,
        residual_bound=pair.c_prime / 2,
    )


@dataclass
class ScanRow:
    n: int
    sample: int
    t: int
    t_star: int
    winner: str
    residual: Fraction
    residual_bound: Fraction
    eps_below_inverse_sigma: bool

    @property
    def within_bound(self) -> bool:
        return abs(self.residual) < self.residual_bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "sample": self.sample,
            "t": self.t,
            "t_star": self.t_star,
            "winner": self.winner,
            "residual": format_rational(self.residual),
            "residual_bound": format_rational(self.residual_bound),
            "within_bound": self.within_bound,
            "eps_below_inverse_sigma": self.eps_below_inverse_sigma,
        }


@dataclass
class ScanResult:
    """Residual measurements and the smallest n from which all of them are in bound."""
    rows: List[ScanRow] = field(default_factory=list)
    threshold: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"threshold": self.threshold, "rows": [row.to_dict() for row in self.rows]}


def residual_scan(
    ns: Sequence[int],
    samples: int,
    rng: np.random.Generator,
    tstar_budget: Optional[int] = DEFAULT_TSTAR_BUDGET,
    progress_tracker=None,
) -> ScanResult:
    """
    Measure the residual of the revenue gap on random instances.

    For each n and sample, a random COMP* instance is built with t = t* and t = t* + 1.

    Args:
        ns: Even sizes, ascending
        samples: Instances per n
        rng: numpy Generator
        tstar_budget: Subset budget
        progress_tracker: Optional ProgressTracker

    Returns:
        ScanResult
    """
    ns = sorted(ns)
    task = None
    if progress_tracker:
        task = progress_tracker.create_task("Scanning residuals", total=len(ns) * samples)

    result = ScanResult()
    for n in ns:
        for sample in range(samples):
            base = random_compstar(n, rng)
            t_star = count_tstar(base, tstar_budget)
            for t in (t_star, t_star + 1):
                if not 1 <= t <= 2 ** n:
                    continue
                hard = build_hard_instance(base, t)
                pair = build_solutions(hard, tstar_budget)
                verdict = decide_winner(pair, t)
                result.rows.append(ScanRow(
                    n=n, sample=sample, t=t, t_star=t_star, winner=verdict.winner,
                    residual=verdict.residual, residual_bound=verdict.residual_bound,
                    eps_below_inverse_sigma=abs(hard.eps) < 1 / hard.sigma,
                ))
            if progress_tracker:
                progress_tracker.update_task(task, advance=1)

    # Smallest scanned n such that every row at that n or above is within bound.
    for n in reversed(ns):
        if all(row.within_bound for row in result.rows if row.n == n):
            result.threshold = n
        else:
            break
    logger.info(f"Residual threshold over n={ns}: {result.threshold}")
    return result
