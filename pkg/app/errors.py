class SemiCRFError(Exception):
    """Base class for every error the toolkit raises on purpose."""

    exit_code = 5


class ConfigError(SemiCRFError):
    exit_code = 2


class DataError(SemiCRFError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class ValidationError(DataError):
    pass


class RefusalError(DataError):
    pass


class CheckpointError(SemiCRFError):
    exit_code = 4


class VersionError(CheckpointError):
    pass


class DimensionError(SemiCRFError, ValueError):
    pass


class PreconditionError(SemiCRFError, ValueError):
    pass


__all__ = [
    "SemiCRFError",
    "ConfigError",
    "DataError",
    "ParseError",
    "ValidationError",
    "RefusalError",
    "CheckpointError",
    "VersionError",
    "DimensionError",
    "PreconditionError",
]
