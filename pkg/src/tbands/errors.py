"""Exception hierarchy shared by all tbands modules."""


class TBandsError(Exception):
    """Base class for every error raised by tbands."""


class DegenerateCoupling(TBandsError, ValueError):
    pass


class BadLength(TBandsError, ValueError):
    pass


class BadDefectSite(TBandsError, ValueError):
    pass


class EtaOutOfRange(TBandsError, ValueError):
    pass


class DomainError(TBandsError, ValueError):
    pass


class NonPositiveData(TBandsError, ValueError):
    pass


class InsufficientData(TBandsError, ValueError):
    pass


class NoConvergence(TBandsError, ArithmeticError):
    pass


class EigFailure(NoConvergence):
    pass


class RootFindingFailure(NoConvergence):
    pass


class OnBoundary(TBandsError, ValueError):
    """The spectral parameter sits on the edge of the winding region."""


class NotAnEigenvalue(TBandsError, ValueError):
    pass


class Confluent(TBandsError, ValueError):
    """Two quasimomenta (or symbol null vectors) coincide, e.g. at a band edge."""


class InsideBand(TBandsError, ValueError):
    pass


class NoDefectFrequency(TBandsError, ArithmeticError):
    pass


class NoDefectEigenvalue(TBandsError, ArithmeticError):
    pass


class ConfigError(TBandsError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
