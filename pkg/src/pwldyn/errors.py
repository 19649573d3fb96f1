"""Exception hierarchy shared by all pwldyn modules."""


class PwlError(Exception):
    """Base class for all pwldyn errors."""


class NonMonotoneBreakpoints(PwlError):
    """Breakpoint list is not strictly increasing."""


class BranchCountMismatch(PwlError):
    """Number of branches does not equal number of breakpoints + 1."""


class NonFiniteParameter(PwlError):
    """A slope, offset or breakpoint is nan/inf."""


class NonFiniteInput(PwlError):
    """Evaluation requested at a nan/inf point."""


class NonFiniteState(PwlError):
    """An orbit state overflowed to nan/inf before the divergence check."""


class UnknownSymbol(PwlError):
    """A word contains a label that names no branch of the map."""


class Diverged(PwlError):
    """An orbit left the divergence threshold where that is a hard error."""


class HitOrigin(PwlError):
    """An orbit state reached exactly 0, making log-based estimates meaningless."""


class NoReturn(PwlError):
    """A point's orbit exceeded the word-length budget without re-entering the interval."""

    def __init__(self, point: float, max_word_length: int):
        self.point = point
        self.max_word_length = max_word_length
        super().__init__(
            f"orbit of {point!r} did not return within {max_word_length} steps"
        )


class DivergedFromInterval(PwlError):
    """A sub-interval's forward image exceeded the divergence threshold."""


class NotCircle(PwlError):
    """Input map is not a circle map (rotation number undefined)."""


class NotGap(PwlError):
    """Input map is not a gap map."""


class NotReducible(PwlError):
    """Two-branch map does not reduce to a circle map (fixed-point or divergent dynamics)."""


class InvalidParams(PwlError):
    """Market parameters violate sign/positivity constraints."""


class OffsetsWouldArise(PwlError):
    """Chartist/fundamentalist intercepts mismatch, so the reduced map is affine, not linear."""


class S2MismatchesS1(PwlError):
    """Three-branch construction requires equal bull/bear type-1 reaction slopes."""


class SpecError(PwlError):
    """A sweep or scenario spec file is malformed."""
