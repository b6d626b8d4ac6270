"""
pcskew error hierarchy

Every error carries the process exit code the CLI reports for it and a
machine-readable dictionary form written to standard error.
"""

from typing import Any, Dict, Optional


class PcSkewError(Exception):
    """Base class for all pcskew errors"""

    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        payload.update(self.details)
        return payload


# Input errors (exit 2)

class InputError(PcSkewError):
    exit_code = 2


class InputNotFoundError(InputError):
    pass


class EmptyInputError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, **details: Any):
        super().__init__(message, line=line, column=column, **details)
        self.line = line
        self.column = column


class RaggedRowsError(ParseError):
    pass


class MissingValueError(ParseError):
    pass


class InvalidMatrixError(InputError):
    pass


# Numeric failures (exit 3)

class NumericError(PcSkewError):
    exit_code = 3


class NonConvergenceError(NumericError):
    pass


class RankDeficientError(NumericError):
    pass


class DegenerateResidualsError(NumericError):
    pass


class ZeroVarianceError(NumericError):
    pass


# Configuration errors (exit 4)

class ConfigError(PcSkewError):
    exit_code = 4


class TooFewObservationsError(ConfigError):
    pass


class OutOfRangeError(ConfigError):
    pass


class SpikeBelowNoiseError(ConfigError):
    pass


class InvalidSpecError(ConfigError):
    pass
