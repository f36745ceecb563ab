"""Exception hierarchy shared across the package."""


class TauCorrError(Exception):
    """Base class for all taucorr errors."""


class InvalidInputError(TauCorrError, ValueError):
    """Input violates a kernel or transform precondition (empty, NaN, mismatched lengths)."""


class CapacityExceededError(TauCorrError, ValueError):
    """Input exceeds the 15-bit packing budget of the vectorized kernel.

    Callers should fall back to the merge-sort kernel, which has no such limit.
    """


class ParseError(TauCorrError, ValueError):
    """Malformed matrix file; the message carries the offending line number."""


class ConfigError(TauCorrError, ValueError):
    """Invalid or conflicting engine/CLI configuration."""
