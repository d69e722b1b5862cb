class NetworkError(ValueError):
    """Malformed or invalid network / cascade document."""


class CapExceeded(ValueError):
    """A brute-force routine was asked to work beyond its size cap."""


class InvariantViolation(RuntimeError):
    """An internal invariant of a diffusion run did not hold."""
