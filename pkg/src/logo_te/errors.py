"""Exception types shared across the package."""


class LogoError(Exception):
    """Base class for every error raised by logo_te."""


class MalformedLine(LogoError):
    def __init__(self, path, lineno, reason):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {reason}")


class UnknownId(LogoError):
    pass


class AlreadyAugmented(LogoError):
    pass


class ShapeMismatch(LogoError, ValueError):
    pass


class ZeroExtent(LogoError, ValueError):
    pass


class NonFiniteLoss(LogoError, FloatingPointError):
    pass


class UnknownVariant(LogoError, ValueError):
    pass


class EmptyBatch(LogoError, ValueError):
    pass


class EmptySplit(LogoError, ValueError):
    pass


class GoldFiltered(LogoError, ValueError):
    pass


class DimensionTooLarge(LogoError, ValueError):
    pass


class EmptyTrain(LogoError):
    pass


class MissingParent(LogoError, ValueError):
    pass


class NoChildren(LogoError, ValueError):
    pass


class MalformedJudgement(LogoError, ValueError):
    pass


class TransportFailure(LogoError):
    pass


class ConfigError(LogoError):
    def __init__(self, field, reason):
        self.field = field
        super().__init__(f"{field}: {reason}")
