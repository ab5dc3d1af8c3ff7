class VibroError(Exception):
    """Base class for package errors."""


class ConfigError(VibroError, ValueError):
    """Invalid configuration; ``field`` holds the dotted path of the bad entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateDistributionError(VibroError):
    pass


class InvalidScenarioError(VibroError, ValueError):
    pass


class IntegrationError(VibroError, ArithmeticError):
    pass


class DatasetError(VibroError):
    pass


class BadMagicError(DatasetError):
    pass


class VersionMismatchError(DatasetError):
    pass


class TruncatedPayloadError(DatasetError):
    pass


class CountMismatchError(DatasetError):
    pass


class TrainingError(VibroError, ArithmeticError):
    pass


class CheckpointError(VibroError):
    pass
