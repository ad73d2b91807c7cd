"""Exception types shared across the package.

Everything numerical derives from :class:`VpidentError` so the CLI can map
failures to a single exit code without catching bare ``Exception``.
"""


class VpidentError(Exception):
    """Base class for all package-specific failures."""


class NonPositiveDeterminant(VpidentError):
    """Unimodular part or push-forward requested for det(A) <= 0."""


class SingularTensor(VpidentError):
    """Inverse requested for a singular 3x3 tensor."""


class NonPositiveDefinite(VpidentError):
    """A tensor that must be symmetric positive definite is not."""


class StepFailure(VpidentError):
    """Time step destroyed an internal-state invariant (step too large)."""


class InvalidTimeGrid(VpidentError):
    """Integration interval is empty or the step size is not positive."""


class OutOfRange(VpidentError):
    """Sample time outside the span of a deformation history."""


class InvalidProgram(VpidentError):
    """Strain program definition is empty or violates its bounds."""


class DimensionMismatch(VpidentError):
    """Vector/matrix sizes disagree in the least-squares machinery."""


class FactorizationFailure(VpidentError):
    """Weighting matrix is not numerically symmetric positive definite."""


class NonFiniteResidual(VpidentError):
    """Model response produced NaN or infinity during a fit."""


class DegenerateData(VpidentError):
    """Signal-proportional noise requested for an all-zero signal."""


class UnsupportedModel(VpidentError):
    """Operation not defined for this noise model."""


class NonFiniteJacobian(VpidentError):
    """Linearization produced a Jacobian with NaN or infinity."""


class SingularNormalMatrix(VpidentError):
    """Normal matrix of the linearized problem is numerically singular."""


class ZeroReferenceParameter(VpidentError):
    """Normalization requested with a zero characteristic value."""


class ConfigError(VpidentError):
    """Run configuration is malformed or violates an invariant."""


class DataError(VpidentError):
    """Experimental data file is malformed or unusable."""
