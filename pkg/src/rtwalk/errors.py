"""Exception types shared across the package."""


class EmptyWalkError(ValueError):
    """The restriction vector admits no permutations."""


class CapExceededError(RuntimeError):
    """A configured resource cap would be exceeded."""


class NotTwoStepError(ValueError):
    """An operation that needs a two-step restriction got something else."""


class InconsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""
