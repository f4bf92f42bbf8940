"""Exception hierarchy shared by every module of the toolkit."""


class BirkhoffKitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(BirkhoffKitError, ValueError):
    """Malformed input: wrong arity, out-of-range parameter, bad file."""


class ComputationError(BirkhoffKitError):
    """A mathematical precondition failed while computing."""


class PoleError(ComputationError, ZeroDivisionError):
    """A denominator vanishes at the requested point."""


class SingularJacobianError(ComputationError):
    """The y-Jacobian at the base point is not of maximal rank."""


class NotRegularError(ComputationError):
    """The correspondence is not regular at the requested point."""


class TruncationError(ComputationError):
    """A truncation or stabilization request cannot be honoured."""


class IncoherentFamilyError(ComputationError):
    """A family of correspondences is not coherent under truncation."""


class MonotonicityError(ComputationError):
    """A span chain failed to be monotone (indicates a bug)."""
