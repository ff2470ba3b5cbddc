"""
Exception hierarchy shared by the numerics, motion, network and pipeline layers.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3. Everything else escaping a command is a bug.
"""


class MotionLabError(Exception):
    """Base class for every error raised on purpose by this package"""


class ShapeError(MotionLabError, ValueError):
    """Dimension or width mismatch between operands"""

    def __init__(self, message: str, *shapes):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class NumericError(MotionLabError, ArithmeticError):
    """Non-finite values where finite ones are required"""


class ContractError(MotionLabError):
    """A precondition of an operation was violated"""


class DataError(MotionLabError):
    """Malformed, missing or incompatible data on disk or in memory"""


class ConfigError(MotionLabError):
    """Invalid experiment or skeleton configuration"""
