"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A scalar parameter (band limit, threshold, index, ...) is out of range."""


class InvalidInputError(ValueError):
    """An input array or container is malformed or inconsistent."""


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition (e.g. an empty uncertain set)."""
