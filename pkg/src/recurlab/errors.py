"""Structured errors shared across the package.

Budget errors are hard failures by design: exact modules never truncate
silently, and orbit code never degrades precision silently.
"""


class RecurlabError(Exception):
    """Base class for structured package errors."""


class ArcBudgetExceeded(RecurlabError):
    def __init__(self, needed: int, budget: int, what: str = "arcs"):
        self.needed = needed
        self.budget = budget
        super().__init__(
            f"operation needs {needed} {what}, exceeding the configured budget {budget}; "
            f"raise the budget explicitly to proceed"
        )


class BranchBudgetExceeded(RecurlabError):
    def __init__(self, needed: int, budget: int):
        self.needed = needed
        self.budget = budget
        super().__init__(
            f"branch composition needs {needed} branches, exceeding the budget {budget}"
        )


class NonExpandingSystemError(RecurlabError):
    pass


class PrecisionBudgetError(RecurlabError):
    def __init__(self, required_bits: int, available_bits: int):
        self.required_bits = required_bits
        self.available_bits = available_bits
        super().__init__(
            f"orbit needs {required_bits} fractional bits to stay accurate "
            f"(have {available_bits}); re-run with a larger precision budget"
        )


class RootOfUnityError(RecurlabError):
    def __init__(self, order: int):
        self.order = order
        super().__init__(f"matrix has an eigenvalue that is a root of unity (order {order})")


class EigenvalueLocationError(RecurlabError):
    pass


class ConfigError(RecurlabError):
    """Raised with the full list of validation problems, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
