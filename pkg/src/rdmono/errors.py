"""Exception hierarchy shared across the package.

Input problems map to CLI exit code 2, numeric diagnostics to exit code 1.
"""


class RdmonoError(Exception):
    """Base class for all package errors."""


class InputError(RdmonoError):
    """Malformed data, config, or arguments."""


class EmptySideError(InputError):
    """A treated or control side has no usable observations."""


class EmptyEffectiveSampleError(RdmonoError):
    """All kernel weights vanished at the requested bandwidth."""

    def __init__(self, side, bandwidth):
        self.side = side
        self.bandwidth = bandwidth
        super().__init__(
            f"empty effective sample on {side} side at bandwidth {bandwidth}"
        )


class DiagnosticError(RdmonoError):
    """An internal numerical cross-check failed beyond tolerance."""


class AllocationError(RdmonoError):
    """The treatment allocation does not support the requested one-sided CI."""
