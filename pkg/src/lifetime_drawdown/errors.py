"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DrawdownError(Exception):
    """Base class for all errors raised by this package."""


class ParamError(DrawdownError, ValueError):
    """A market/preference parameter set failed validation."""


class NonFiniteParam(ParamError):
    pass


class RNotPositive(ParamError):
    pass


class MuNotAboveR(ParamError):
    pass


class SigmaNotPositive(ParamError):
    pass


class KappaNotAboveR(ParamError):
    pass


class LamNotPositive(ParamError):
    pass


class AlphaOutOfRange(ParamError):
    pass


class UnknownKey(ParamError):
    pass


class MissingKey(ParamError):
    pass


class DomainError(DrawdownError, ValueError):
    """An argument lies outside the domain on which a formula is defined."""


class NoBracket(DrawdownError, ArithmeticError):
    """Root finder endpoints do not straddle the target value."""


class ConfigError(DrawdownError, ValueError):
    """Simulation configuration violates one of its invariants."""
