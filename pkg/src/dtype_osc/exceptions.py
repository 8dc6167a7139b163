"""Exception hierarchy shared by all modules."""


class OscError(Exception):
    """Base class; every error raised by the package derives from it."""


class InvalidPhase(OscError):
    pass


class EmptySupport(OscError):
    pass


class ZeroForm(OscError):
    pass


class NotDType(OscError):
    pass


class ReductionFailed(OscError):
    pass


class InvalidInvariants(OscError):
    pass


class InvalidScale(OscError):
    pass


class WitnessNotFound(OscError):
    pass


class DomainError(OscError):
    pass


class GammaOutOfRange(OscError):
    pass


class InsufficientData(OscError):
    pass


class AnnulusUnreliable(OscError):
    pass


class ConfigError(OscError):
    pass


class AmbiguousClassification(OscError):
    """Classification value fell within 10x of a threshold."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = tuple(candidates)


class AccuracyNotReached(OscError):
    """Adaptive quadrature ran out of depth; ``partial`` holds the sample."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
