"""
Exception hierarchy for the bundle-pricing toolkit.

Each error class carries the process exit code the CLI uses for it.
"""

from typing import Optional


class BundlePricingError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ParseError(BundlePricingError):
    """Malformed input: bad rational text, invalid distribution, menu or COMP data."""

    exit_code = 2


class BudgetExceededError(BundlePricingError):
    """A configured size budget would be exceeded."""

    exit_code = 3

    def __init__(self, what: str, size: int, budget: int, hint: Optional[str] = None):
        """
        Initialize budget error.

        Args:
            what: Name of the enumerated object (e.g. "allocation maps")
            size: Size that was requested
            budget: Configured limit
            hint: Optional hint on which flag raises the limit
        """
        self.what = what
        self.size = size
        self.budget = budget
        message = f"{what}: {size:,} exceeds budget {budget:,}"
        if hint:
            message += f" ({hint})"
        super().__init__(message)


class InfeasibleError(BundlePricingError):
    """An LP or allocation map admits no feasible solution where one was required."""

    exit_code = 4


class ConsistencyError(BundlePricingError):
    """An internal identity that must hold exactly did not."""

    exit_code = 5


def check_budget(what: str, size: int, budget: int, hint: Optional[str] = None):
    """
    Raise BudgetExceededError if size is above budget.

    Args:
        what: Name of the enumerated object
        size: Requested size
        budget: Configured limit
        hint: Optional hint for the error message
    """
    if size > budget:
        raise BudgetExceededError(what, size, budget, hint)
