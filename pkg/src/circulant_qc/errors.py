"""Exception types shared across the package."""


class CircuitError(ValueError):
    """Invalid circuit construction or input (bad indices, shapes, parameters)."""


class PostSelectionError(CircuitError):
    """Requested post-selection outcome has (numerically) zero probability."""


class ResourceError(CircuitError):
    """Requested simulation exceeds the dense-statevector resource cap."""
