class InconclusiveError(RuntimeError):
    """The solver could not decide (numerical failure), as opposed to a negative answer."""


class ConditioningOnNullEvent(ValueError):
    """The conditioning event is empty, or null for the assessments, so no updated value exists."""


class ChainValidationError(ValueError):
    pass
