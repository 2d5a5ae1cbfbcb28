"""Exception types raised across the package."""


class GibbsTreeError(Exception):
    """Base class for all package errors."""


class DomainError(GibbsTreeError, ValueError):
    """An argument lies outside the domain of a function."""


class InvalidDistributionError(GibbsTreeError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NoCriticalPointError(GibbsTreeError):
    pass


class DivergenceError(GibbsTreeError):
    """The partition-function orbit exceeded the divergence threshold."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"orbit diverged at step {step}")


class SeriesOrderError(GibbsTreeError, ValueError):
    pass


class EnumerationTooLarge(GibbsTreeError):
    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(f"enumeration would produce {count} trees (limit {limit})")


class SpinDecodeError(GibbsTreeError, ValueError):
    def __init__(self, label, message):
        self.label = label
        super().__init__(f"label {label}: {message}")


class FKGPreconditionError(GibbsTreeError):
    pass
