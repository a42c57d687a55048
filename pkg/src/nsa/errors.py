"""Exception hierarchy. Every domain error derives from NsaError (CLI exit code 1)."""


class NsaError(Exception):
    pass


class EmptyCorpus(NsaError):
    pass


class EmptyDataset(NsaError):
    pass


class ShapeMismatch(NsaError, ValueError):
    pass


class NonFinite(NsaError, FloatingPointError):
    pass


class NonFiniteLoss(NonFinite):
    """Training produced NaN or inf; usually the learning rate is too high."""


class IndexOutOfRange(NsaError, IndexError):
    pass


class ModelMismatch(NsaError):
    pass


class MutateLabeled(NsaError):
    pass


class IoError(NsaError, OSError):
    pass


class FormatError(NsaError):
    pass


class VersionError(FormatError):
    pass


class ConfigError(NsaError):
    pass
