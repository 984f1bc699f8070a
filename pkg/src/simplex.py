"""
Exact linear programming over the rationals.

A dense two-phase tableau simplex with Bland's pivot rule, and exact Gaussian
elimination for square systems. Everything is ``Fraction`` arithmetic, so optimal
values are exact and a fixed input always yields the same pivots and the same point.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from src.errors import check_budget

logger = logging.getLogger("bundlepricing.simplex")

LE = "<="
EQ = "="
GE = ">="
RELATIONS = (LE, EQ, GE)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

Bound = Tuple[Optional[Fraction], Optional[Fraction]]


@dataclass(frozen=True)
class Constraint:
    """One row: coefficients · x (relation) rhs."""
    coefficients: Tuple[Fraction, ...]
    relation: str
    rhs: Fraction

    def activity(self, point: Sequence[Fraction]) -> Fraction:
        return sum((a * x for a, x in zip(self.coefficients, point)), Fraction(0))

    def holds(self, point: Sequence[Fraction]) -> bool:
        lhs = self.activity(point)
        if self.relation == LE:
            return lhs <= self.rhs
        if self.relation == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class LinearProgram:
    """
    Maximize objective · x subject to constraints and per-variable bounds.

    Bounds default to (0, None), i.e. x >= 0. Either side of a bound may be None.
    """
    objective: List[Fraction]
    constraints: List[Constraint] = field(default_factory=list)
    bounds: Optional[List[Bound]] = None

    def __post_init__(self):
        self.objective = [Fraction(c) for c in self.objective]
        if self.bounds is None:
            self.bounds = [(Fraction(0), None)] * len(self.objective)

    @property
    def num_variables(self) -> int:
        return len(self.objective)

    def add_constraint(self, coefficients: Sequence, relation: str, rhs) -> None:
        """
        Append a row.

        Args:
            coefficients: Row coefficients (same width as the objective)
            relation: One of "<=", "=", ">="
            rhs: Right-hand side
        """
        if relation not in RELATIONS:
            raise ValueError(f"Unknown relation {relation!r}")
        if len(coefficients) != self.num_variables:
            raise ValueError(
                f"Row width {len(coefficients)} does not match objective width {self.num_variables}"
            )
        self.constraints.append(
            Constraint(tuple(Fraction(a) for a in coefficients), relation, Fraction(rhs))
        )

    def set_bounds(self, index: int, lower: Optional[Fraction], upper: Optional[Fraction]) -> None:
        self.bounds[index] = (
            None if lower is None else Fraction(lower),
            None if upper is None else Fraction(upper),
        )

    def validate(self) -> None:
        """Check that every row and the bounds list match the objective width."""
        for row in self.constraints:
            if len(row.coefficients) != self.num_variables:
                raise ValueError("Constraint width does not match objective width")
            if row.relation not in RELATIONS:
                raise ValueError(f"Unknown relation {row.relation!r}")
        if len(self.bounds) != self.num_variables:
            raise ValueError("Bounds list does not match objective width")

    def value_at(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * x for c, x in zip(self.objective, point)), Fraction(0))

    def is_feasible(self, point: Sequence[Fraction]) -> bool:
        """True iff the point satisfies every row and every bound exactly."""
        for (lower, upper), x in zip(self.bounds, point):
            if lower is not None and x < lower:
                return False
            if upper is not None and x > upper:
                return False
        return all(row.holds(point) for row in self.constraints)

    def dual(self) -> "LinearProgram":
        """
        Dual of an LP whose variables are exactly x >= 0.

        Returned as a maximization of -b · y, so its optimal value is the negated
        primal optimum when both are finite.
        """
        if any(b != (Fraction(0), None) for b in self.bounds):
            raise ValueError("dual() requires every variable bounded by x >= 0 only")
        m = len(self.constraints)
        dual_lp = LinearProgram(objective=[-row.rhs for row in self.constraints])
        for i, row in enumerate(self.constraints):
            if row.relation == LE:
                dual_lp.set_bounds(i, Fraction(0), None)
            elif row.relation == GE:
                dual_lp.set_bounds(i, None, Fraction(0))
            else:
                dual_lp.set_bounds(i, None, None)
        for j, c in enumerate(self.objective):
            dual_lp.add_constraint([self.constraints[i].coefficients[j] for i in range(m)], GE, c)
        return dual_lp


@dataclass
class LpResult:
    """Outcome of lp_solve."""
    status: str
    value: Optional[Fraction] = None
    point: Optional[List[Fraction]] = None
    pivots: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class LinearSolution:
    """Outcome of linear_system_solve."""
    unique: bool
    point: Optional[List[Fraction]] = None


class _Tableau:
    """Dense simplex tableau; rows are kept with a basic variable per row."""

    def __init__(self, rows: List[List[Fraction]], rhs: List[Fraction], basis: List[int], width: int):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.width = width
        self.reduced = []
        self.value = Fraction(0)
        self.pivots = 0

    def load_objective(self, costs: List[Fraction]) -> None:
        """Set reduced costs d_j = c_j - c_B · column_j and the current value."""
        self.reduced = list(costs)
        self.value = Fraction(0)
        for i, var in enumerate(self.basis):
            cb = costs[var]
            if cb == 0:
                continue
            row = self.rows[i]
            for j in range(self.width):
                if row[j]:
                    self.reduced[j] -= cb * row[j]
            self.value += cb * self.rhs[i]

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        if piv != 1:
            row[:] = [a / piv for a in row]
            self.rhs[r] /= piv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[col]
            if f:
                for j in range(self.width):
                    if row[j]:
                        other[j] -= f * row[j]
                self.rhs[i] -= f * self.rhs[r]
        f = self.reduced[col]
        if f:
            for j in range(self.width):
                if row[j]:
                    self.reduced[j] -= f * row[j]
            self.value += f * self.rhs[r]
        self.basis[r] = col
        self.pivots += 1

    def run(self) -> str:
        """Bland's rule primal simplex on the loaded objective; returns OPTIMAL or UNBOUNDED."""
        while True:
            entering = next((j for j in range(self.width) if self.reduced[j] > 0), None)
            if entering is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], entering)


def _to_standard_form(lp: LinearProgram):
    """
    Rewrite bounded/free variables as nonnegative columns.

    Returns:
        (columns, offsets, substitution, rows) where x_j = offsets[j] + sum(sign * z_k)
        over substitution[j], and rows are (coefficients over z, relation, rhs).
    """
    substitution: List[List[Tuple[int, int]]] = []
    offsets: List[Fraction] = []
    extra_rows = []
    columns = 0
    for lower, upper in lp.bounds:
        if lower is not None:
            substitution.append([(columns, 1)])
            offsets.append(lower)
            if upper is not None:
                extra_rows.append((columns, upper - lower))
            columns += 1
        elif upper is not None:
            substitution.append([(columns, -1)])
            offsets.append(upper)
            columns += 1
        else:
            substitution.append([(columns, 1), (columns + 1, -1)])
            offsets.append(Fraction(0))
            columns += 2

    rows = []
    for con in lp.constraints:
        coeffs = [Fraction(0)] * columns
        rhs = con.rhs
        for j, a in enumerate(con.coefficients):
            if not a:
                continue
            rhs -= a * offsets[j]
            for k, sign in substitution[j]:
                coeffs[k] += sign * a
        rows.append((coeffs, con.relation, rhs))
    for k, width in extra_rows:
        coeffs = [Fraction(0)] * columns
        coeffs[k] = Fraction(1)
        rows.append((coeffs, LE, width))
    return columns, offsets, substitution, rows


def lp_solve(
    lp: LinearProgram,
    max_variables: Optional[int] = None,
    max_constraints: Optional[int] = None,
) -> LpResult:
    """
    Solve an LP exactly with the two-phase simplex method and Bland's rule.

    Args:
        lp: Program to maximize
        max_variables: Optional budget on the number of variables
        max_constraints: Optional budget on the number of constraints

    Returns:
        LpResult with status optimal, infeasible or unbounded
    """
    lp.validate()
    if max_variables is not None:
        check_budget("LP variables", lp.num_variables, max_variables, "raise --budget-lp")
    if max_constraints is not None:
        check_budget("LP constraints", len(lp.constraints), max_constraints, "raise --budget-lp")

    columns, offsets, substitution, std_rows = _to_standard_form(lp)

    # Normalize to rhs >= 0 and lay out slack/surplus then artificial columns.
    normalized = []
    for coeffs, relation, rhs in std_rows:
        if rhs < 0:
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            relation = {LE: GE, GE: LE, EQ: EQ}[relation]
        normalized.append((coeffs, relation, rhs))

    n_slack = sum(1 for _, rel, _ in normalized if rel != EQ)
    n_art = sum(1 for _, rel, _ in normalized if rel != LE)
    width = columns + n_slack + n_art
    first_art = columns + n_slack

    rows, rhs_col, basis = [], [], []
    slack_at, art_at = columns, first_art
    for coeffs, relation, rhs in normalized:
        row = coeffs + [Fraction(0)] * (n_slack + n_art)
        if relation == LE:
            row[slack_at] = Fraction(1)
            basis.append(slack_at)
            slack_at += 1
        elif relation == GE:
            row[slack_at] = Fraction(-1)
            slack_at += 1
            row[art_at] = Fraction(1)
            basis.append(art_at)
            art_at += 1
        else:
            row[art_at] = Fraction(1)
            basis.append(art_at)
            art_at += 1
        rows.append(row)
        rhs_col.append(rhs)

    tableau = _Tableau(rows, rhs_col, basis, width)

    if n_art:
        phase_one = [Fraction(0)] * first_art + [Fraction(-1)] * n_art
        tableau.load_objective(phase_one)
        tableau.run()
        if tableau.value < 0:
            logger.debug(f"Phase one ended at {tableau.value}; LP infeasible")
            return LpResult(INFEASIBLE, pivots=tableau.pivots)
        # Drive zero-valued artificials out of the basis; drop redundant rows.
        r = 0
        while r < len(tableau.rows):
            if tableau.basis[r] >= first_art:
                col = next((j for j in range(first_art) if tableau.rows[r][j] != 0), None)
                if col is None:
                    del tableau.rows[r]
                    del tableau.rhs[r]
                    del tableau.basis[r]
                    continue
                tableau.pivot(r, col)
            r += 1
        for row in tableau.rows:
            del row[first_art:]
        tableau.width = first_art

    costs = [Fraction(0)] * first_art
    constant = Fraction(0)
    for j, c in enumerate(lp.objective):
        constant += c * offsets[j]
        for k, sign in substitution[j]:
            costs[k] += sign * c
    tableau.load_objective(costs)
    status = tableau.run()
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, pivots=tableau.pivots)

    z = [Fraction(0)] * first_art
    for i, var in enumerate(tableau.basis):
        z[var] = tableau.rhs[i]
    point = [
        offsets[j] + sum((sign * z[k] for k, sign in substitution[j]), Fraction(0))
        for j in range(lp.num_variables)
    ]
    value = constant + tableau.value
    logger.debug(f"LP optimal after {tableau.pivots} pivots: {value}")
    return LpResult(OPTIMAL, value, point, tableau.pivots)


def linear_system_solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> LinearSolution:
    """
    Solve a square system exactly by Gaussian elimination.

    Args:
        rows: d x d coefficient matrix
        rhs: Right-hand side of length d

    Returns:
        LinearSolution(unique=True, point) if the matrix is nonsingular, else unique=False
    """
    d = len(rows)
    if len(rhs) != d or any(len(row) != d for row in rows):
        raise ValueError("linear_system_solve expects a square system")
    m = [[Fraction(a) for a in row] + [Fraction(b)] for row, b in zip(rows, rhs)]

    for col in range(d):
        pivot_row = next((r for r in range(col, d) if m[r][col] != 0), None)
        if pivot_row is None:
            return LinearSolution(unique=False)
        if pivot_row != col:
            m[col], m[pivot_row] = m[pivot_row], m[col]
        piv = m[col][col]
        for r in range(col + 1, d):
            f = m[r][col]
            if f:
                factor = f / piv
                for c in range(col, d + 1):
                    m[r][c] -= factor * m[col][c]

    x = [Fraction(0)] * d
    for r in range(d - 1, -1, -1):
        acc = m[r][d] - sum((m[r][c] * x[c] for c in range(r + 1, d)), Fraction(0))
        x[r] = acc / m[r][r]
    return LinearSolution(unique=True, point=x)
