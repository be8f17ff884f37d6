"""Exception hierarchy shared by all modules."""


class BaseChangeError(Exception):
    pass


class UnsupportedExtension(BaseChangeError):
    """The requested tower violates the tame cyclic hypotheses."""


class ZeroResidue(BaseChangeError):
    pass


class PrecisionExhausted(BaseChangeError):
    """An answer cannot be certified at the working precision."""


class NotTopologicallyUnipotent(BaseChangeError):
    pass


class IrregularInput(BaseChangeError):
    pass


class NotInDomain(BaseChangeError):
    pass


class RootOfUnityUnavailable(BaseChangeError):
    pass


class NonConvergence(BaseChangeError):
    pass


class DepthExceeded(BaseChangeError):
    pass


class NotANorm(BaseChangeError):
    pass


class UncertifiedComparison(BaseChangeError):
    pass


class ConfigInvalid(BaseChangeError):
    pass
