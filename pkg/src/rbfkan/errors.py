"""Exception hierarchy shared across the package."""


class RbfKanError(Exception):
    """Base class for all package errors."""


class DomainError(RbfKanError, ValueError):
    """Invalid argument: non-finite input, bad shape, out-of-range parameter."""


class NumericalRankError(RbfKanError, ArithmeticError):
    """Matrix is singular to working precision."""

    def __init__(self, message, h=None):
        super().__init__(message)
        self.h = h


class SearchFailedError(RbfKanError):
    """Every candidate of a shape-parameter search failed."""


class DegenerateDataError(RbfKanError, ValueError):
    """Too few distinct points to build an auxiliary problem."""


class NumericalDivergenceError(RbfKanError, ArithmeticError):
    """A forward pass or gradient produced a non-finite value."""

    def __init__(self, message, epoch=None, layer=None):
        super().__init__(message)
        self.epoch = epoch
        self.layer = layer
