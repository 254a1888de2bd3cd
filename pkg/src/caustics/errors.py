"""Exception types shared across the package."""


class CausticsError(Exception):
    """Base class for all errors raised by this package."""


class CurveSpecError(CausticsError):
    """Invalid or inconsistent curve description (validation failure)."""


class RegularityError(CausticsError):
    """A point where the velocity vanishes (no tangent direction)."""


class LiftError(CausticsError):
    """Tangent-angle lift failed; the curve is undersampled."""


class SingularPairError(CausticsError):
    """A formula denominator vanished at a parallel pair (singular point)."""


class RenderError(CausticsError):
    """Invalid input to an output writer."""
