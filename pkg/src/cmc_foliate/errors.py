"""Exception types shared across the package."""


class CmcFoliateError(Exception):
    """Base class for all package errors."""


class DomainError(CmcFoliateError):
    """Evaluation requested outside the validity region of a metric chart."""


class ShapeError(CmcFoliateError):
    """Grid values and band limit do not match."""


class AdmissibilityError(CmcFoliateError):
    """A sphere graph violates the admissibility bounds."""


class GraphFoldError(CmcFoliateError):
    """The direction map of a graph surface is not invertible."""


class FoldError(CmcFoliateError):
    """The induced metric of an embedded surface degenerates."""


class KernelResidueError(CmcFoliateError):
    """A field expected to be kernel-free carries degree-1 content."""


class DegenerateMassError(CmcFoliateError):
    """The center equation has no leading term because the mass vanishes."""


class DivergenceError(CmcFoliateError):
    """An iterative solve failed to converge within its budget."""


class RangeError(CmcFoliateError):
    """A scalar equation has no root in the admitted range."""


class ConfigError(CmcFoliateError):
    """A run configuration failed validation."""
