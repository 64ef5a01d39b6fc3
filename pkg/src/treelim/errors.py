"""Exception types shared across the package."""


class TreelimError(Exception):
    """Base class for all treelim errors."""


class InvalidInput(TreelimError):
    """A precondition on an operation's input was violated."""


class OutOfDomain(TreelimError):
    """A numeric argument lies outside the function's domain."""


class CapExceeded(TreelimError):
    """An exhaustive operation was asked to run beyond its hard cap."""


class NonConvergence(TreelimError):
    """An iterative solver could not reach the requested precision."""


class InconsistentCounts(TreelimError):
    """An exact recurrence produced an impossible value (internal bug guard)."""


class MalformedPath(TreelimError):
    """A step sequence is not the contour of a binary plane tree."""


class SizeMismatch(TreelimError):
    """Reconstruction parts do not have the sizes the skeleton demands."""


class ForestConstraintViolated(TreelimError):
    """A two-tree forest violates the size window (max <= a < total)."""


class OrderViolation(TreelimError):
    """An unordered forest pair is not strictly size-ordered."""


class NotAGood(TreelimError):
    """The tree is not a-good, so the unordered skeleton is undefined."""


class NotInClass(TreelimError):
    """The excursion has ties that put it outside the admissible class."""
