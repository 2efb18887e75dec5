"""Exception types shared across the package.

Validation failures (bad arguments, malformed inputs) and resource-cap
failures (vertex budgets, percolation windows) are kept distinct so the CLI
can map them to different exit codes.
"""


class ValidationError(ValueError):
    """Raised on malformed or out-of-range inputs."""


class ResourceCapError(RuntimeError):
    """Raised when a computation exceeds a declared resource budget."""


class BallCapExceeded(ResourceCapError):
    """Ball generation ran past the vertex cap.

    ``attained_radius`` is the largest radius whose ball was fully explored
    before the cap was hit.
    """

    def __init__(self, message: str, attained_radius: int):
        super().__init__(message)
        self.attained_radius = attained_radius


class WindowExceeded(ResourceCapError):
    """A coset walk left the materialized percolation window [-W, W]."""
