"""Exception types.

Everything a model can get wrong derives from :class:`ModelError`; the CLI maps
those to exit code 1.
"""


class ModelError(ValueError):
    pass


class DuplicateLabel(ModelError):
    pass


class UnknownLabel(ModelError):
    pass


class BadPermutation(ModelError):
    pass


class DimError(ModelError):
    pass


class PartyError(ModelError):
    pass


class NormError(ModelError):
    pass


class BranchRelationError(ModelError):
    pass


class ConstraintViolation(ModelError):
    pass


class SectorError(ModelError):
    pass


class ModelClassError(ModelError):
    pass


class DomainError(ModelError):
    pass


class InversionError(ModelError):
    pass
