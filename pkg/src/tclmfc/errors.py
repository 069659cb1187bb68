"""Exception types shared across the package."""


class TclMfcError(Exception):
    """Base class for all errors raised by tclmfc."""


class InputError(TclMfcError, ValueError):
    """A value is outside its documented domain (bad distribution, bad row, ...)."""


class ConfigurationError(TclMfcError, ValueError):
    """Shapes or settings are mutually inconsistent."""
