class PolytopeScopeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PolytopeScopeError, ValueError):
    pass


class DegeneracyError(PolytopeScopeError):
    """Subdivision hit a non-generic configuration it could not resolve."""


class LocateError(PolytopeScopeError):
    pass


class ChainConditionError(PolytopeScopeError):
    """A boundary of a boundary was nonzero over Z2."""


class OracleMismatchError(PolytopeScopeError):
    pass


class TrainingDivergedError(PolytopeScopeError):
    pass


class EigenError(PolytopeScopeError):
    pass


class MissingArtifactError(PolytopeScopeError, FileNotFoundError):
    """A command needs the output of an upstream command that has not been run."""
