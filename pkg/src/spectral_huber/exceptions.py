"""Exception types shared across the package."""


class SpectralHuberError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SpectralHuberError):
    """Operands have incompatible shapes or weight lengths."""


class ConvergenceFailure(SpectralHuberError):
    """The SVD backend failed to converge."""


class KOutOfRange(SpectralHuberError):
    """Tail index K outside the valid range [0, r-1]."""


class WeightsNotNondecreasing(SpectralHuberError):
    """Curvature construction requires nondecreasing weights."""


class CenterMismatch(SpectralHuberError):
    """Line quadratics expanded at different points cannot be combined."""


class NonFinite(SpectralHuberError):
    """An iterate, cost, or gradient stopped being finite."""


class LocationOutOfGrid(SpectralHuberError):
    """Patch anchor not on the tiling lattice."""


class InfeasibleMask(SpectralHuberError):
    """Sampling masks cannot cover every k-space location."""


class ZeroReference(SpectralHuberError):
    """Relative error metrics need a nonzero reference."""


class ProblemMismatch(SpectralHuberError):
    """Runs being compared were produced from different problems."""


class ConfigError(SpectralHuberError):
    """Invalid or unknown configuration keys."""
