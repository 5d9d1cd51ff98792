class PbnError(Exception):
    """Base class for every error raised by the pbn package."""


class DimensionMismatchError(PbnError, ValueError):
    pass


class EmptyDatasetError(PbnError, ValueError):
    pass


class InvalidParameterError(PbnError, ValueError):
    pass


class TrainingDivergedError(PbnError, ArithmeticError):
    pass


class SelectionError(PbnError):
    pass


class InsufficientSamplesError(PbnError, ValueError):
    pass


class OracleError(PbnError, ValueError):
    pass


class ExperimentAbortedError(PbnError):
    pass


class WirelessParseError(PbnError, ValueError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class DataFileError(PbnError, OSError):
    pass
