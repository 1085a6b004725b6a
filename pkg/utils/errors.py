from typing import Optional


class AppError(Exception):
    """Base exception for application errors."""
    pass


class ConfigError(AppError):
    """Raised for invalid configuration or command-line usage."""
    pass


class DataError(AppError):
    """Base exception for problems with input data or model files."""
    pass


class FeatureParseError(DataError):
    """Raised when a feature CSV row cannot be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class NonFiniteValueError(DataError):
    """Raised when a feature matrix holds NaN or Inf."""
    pass


class LabelRangeError(DataError):
    """Raised when a class index is negative or outside the declared class count."""
    pass


class DimensionMismatchError(DataError):
    """Raised when matrices, labels or models disagree on a dimension."""
    pass


class EmptyDatasetError(DataError):
    """Raised when an operation needs at least one (or two) rows and gets fewer."""
    pass


class ModelFormatError(DataError):
    """Raised when a model file is unreadable or has an unsupported format."""
    pass


class ContractViolation(AppError):
    """Raised when a caller breaks an internal precondition."""
    pass
