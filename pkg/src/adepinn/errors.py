"""Exception taxonomy shared by all adepinn modules."""


class AdePinnError(Exception):
    """Base class for all library errors."""


class UnsupportedPrimitive(AdePinnError):
    """A predictor or expression uses a function the derivative engine does not know."""


class NonFinite(AdePinnError):
    """A value, derivative, or gradient came out NaN or infinite."""


class ShapeMismatch(AdePinnError):
    """Input dimensionality does not match a network or parameter layout."""


class EmptySampleSet(AdePinnError):
    """An operation that needs at least one sample received none."""


class EmptyInput(AdePinnError):
    """A metric received zero-length inputs."""


class LengthMismatch(AdePinnError):
    """Paired inputs have different lengths."""


class ZeroDenominator(AdePinnError):
    """Relative error is undefined because the reference is identically zero."""


class UnknownPreset(AdePinnError):
    """Requested problem preset id is not registered."""


class NoSuchFace(AdePinnError):
    """Boundary face filter names a face the domain does not have."""


class FaceMismatch(AdePinnError):
    """A boundary point does not lie on the declared face."""


class RejectionStall(AdePinnError):
    """Rejection sampling acceptance rate fell below the stall threshold."""


class SingularSystem(AdePinnError):
    """Tridiagonal factorization in the finite-difference oracle broke down."""


class ConfigError(AdePinnError):
    """Invalid run configuration."""
