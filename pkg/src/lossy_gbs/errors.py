"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Malformed input: wrong shape, odd dimension, out-of-range index."""


class SizeLimitError(ValueError):
    """Input is valid but exceeds the guard for an exponential-cost routine."""


class DomainError(ValueError):
    """Parameters fall outside the region where a formula is defined."""
