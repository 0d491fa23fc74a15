"""Exception types shared across the toolkit."""


class InterfaceKitError(Exception):
    """Base class for all toolkit errors."""


class LatticeMismatchError(InterfaceKitError):
    """Operands live on different lattices or fiber dimensions."""


class DimensionMismatchError(InterfaceKitError):
    """Vector or box shape does not match the lattice."""


class SizeCapError(InterfaceKitError):
    """Requested truncation exceeds the configured size cap."""


class CertificationError(InterfaceKitError):
    """A coefficient profile failed its declared limit certificate."""


class VariantMixError(InterfaceKitError):
    """Coefficient profiles of incompatible asymptotics were combined."""


class SpectralGapError(InterfaceKitError):
    """The requested spectral point lies inside the essential spectrum hull."""


class NotInvertibleError(InterfaceKitError):
    """A symbol determinant came too close to zero (gap closed)."""


class IndexInstabilityError(InterfaceKitError):
    """A counted index changed between truncation sizes."""


class SectorError(InterfaceKitError):
    """Sector assignment failed: overlapping caps or ambiguous state mass."""


class CrossingAmbiguityError(InterfaceKitError):
    """Spectral-flow path steps are too coarse to match eigenvalue crossings."""


class PropagationDomainError(InterfaceKitError):
    """Evolution support reached the truncation-box boundary margin."""


class FilterBudgetError(InterfaceKitError):
    """Polynomial filter cannot reach the error budget at the maximal degree."""


class HypothesisViolationError(InterfaceKitError):
    """Filter support meets the target bulk spectrum; non-propagation premise fails."""


class ConfigError(InterfaceKitError):
    """Experiment configuration failed schema validation."""
