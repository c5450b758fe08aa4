"""Exception types shared across the package."""


class BcmcError(Exception):
    """Base class for all package errors."""


class InputError(BcmcError):
    """Malformed or inconsistent caller input (sizes, ranges, parameters)."""


class FormatError(BcmcError):
    """Malformed container or packed buffer."""


class OutOfMemoryError(BcmcError):
    """Device allocation failed; the failing structure is left consistent."""
