"""Exception hierarchy shared by every stage of the pipeline."""


class GenealogyError(Exception):
    """Base class for all package errors."""


class DataError(GenealogyError):
    """Input data is malformed or violates an invariant."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateId(DataError):
    pass


class YearOutOfRange(DataError):
    pass


class SelfPairError(DataError):
    pass


class IterationLimitExceeded(GenealogyError):
    pass


class NoCollaboration(DataError):
    pass


class NoCollaborators(DataError):
    pass


class DomainError(ValueError, GenealogyError):
    pass


class ShapeMismatch(ValueError, GenealogyError):
    pass


class UnlabeledSample(DataError):
    pass


class DegenerateDataset(DataError):
    pass


class NonFiniteLoss(ArithmeticError, GenealogyError):
    pass


class EmptySplit(DataError):
    pass


class LengthMismatch(ValueError, GenealogyError):
    pass


class ConfigError(GenealogyError):
    pass
