"""Exception types shared across the package."""


class ChordCornersError(ValueError):
    """Base class for all package-specific errors."""


class DimensionError(ChordCornersError):
    """Array input has the wrong shape or mismatched dimensions."""


class ParameterError(ChordCornersError):
    """A parameter is outside its documented domain."""


class InputError(ChordCornersError):
    """Inputs are individually fine but mutually inconsistent or unusable."""


class DegenerateChordError(ChordCornersError):
    """Chord endpoints coincide, so no line is defined."""


class DegenerateAngleError(ChordCornersError):
    """An angle was requested at a point with a coincident neighbor."""


class FixtureError(ChordCornersError):
    """A synthetic fixture cannot be built with the requested geometry."""
