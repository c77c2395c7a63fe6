"""Exception types shared across the package."""


class FofeNerError(Exception):
    """Base class for all package-specific errors."""


class MalformedCode(FofeNerError):
    """A vector handed to the decoder is not a valid encoding."""


class DimensionMismatch(FofeNerError):
    """Vector/matrix shapes do not line up."""


class FragmentTooShort(FofeNerError):
    """Fragment surface string shorter than the widest filter, padding off."""


class StaleCache(FofeNerError):
    """Backward pass received a cache that does not match the batch."""


class Diverged(FofeNerError):
    """Training loss became non-finite."""


class EmptyPool(FofeNerError):
    """Batch sampling requested from an empty candidate pool."""


class OverlappingGold(FofeNerError):
    """Gold annotation contains overlapping spans within one sentence."""


class MalformedLine(FofeNerError):
    """Column-format input line with the wrong number of columns."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class BadHeader(FofeNerError):
    """Embedding file header is missing or inconsistent with the body."""


class DuplicateToken(FofeNerError):
    """The same token appears twice while building a vocabulary."""
