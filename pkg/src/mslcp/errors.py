"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative procedure exhausted its budget without meeting its target."""
