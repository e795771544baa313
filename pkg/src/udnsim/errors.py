"""Exception types shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, ConvergenceError -> 3,
InvariantError (and SchemeError) -> 4.
"""


class UdnsimError(Exception):
    """Base class for all package errors."""


class ConfigError(UdnsimError):
    """Invalid or inconsistent configuration input."""


class CflError(ConfigError):
    """Grid violates the advection stability bound for the requested dynamics."""

    def __init__(self, speed, dt, dq):
        self.speed = speed
        self.dt = dt
        self.dq = dq
        super().__init__(
            f"CFL bound violated: max advection speed {speed:.4g}/s needs "
            f"dt/dq <= {1.0 / speed:.4g} s but the grid has dt={dt:.4g}, "
            f"dq={dq:.4g} (dt/dq={dt / dq:.4g})"
        )


class ConvergenceError(UdnsimError):
    """Fixed-point iteration exhausted its budget without meeting tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class SchemeError(UdnsimError):
    """A numerical scheme produced values outside its guaranteed ranges."""


class InvariantError(UdnsimError):
    """A model invariant failed on produced data."""
