"""Exception types shared across the package."""


class SeqbetError(Exception):
    """Base class for all package errors."""


class UsageError(SeqbetError, ValueError):
    """An operation was called with arguments outside its contract."""


class DomainError(UsageError):
    """A numeric argument lies outside its admissible domain."""


class StrategyViolationError(SeqbetError, RuntimeError):
    """A strategy produced a bet the game protocol forbids."""


class NumericError(SeqbetError, ArithmeticError):
    """An optimizer encountered a non-finite objective or gradient."""


class DataError(SeqbetError, ValueError):
    """Input data failed to parse or validate."""


class ConfigError(SeqbetError, ValueError):
    """An experiment configuration is missing, malformed, or inconsistent."""
