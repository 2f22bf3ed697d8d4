"""Exception types shared across the pipeline."""


class HopcoverError(Exception):
    """Base class for all errors raised by this package."""


class EdgeListParseError(HopcoverError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class EmptyGraphError(HopcoverError):
    """The input referenced no nodes at all."""


class DistanceOverflowError(HopcoverError):
    """A hop count exceeded the 16-bit storage width; never silently wrapped."""


class OracleCapError(HopcoverError):
    """Graph too large for the brute-force all-pairs oracle."""


class FormatError(HopcoverError):
    """A binary artifact failed structural validation on load."""


class BundleError(HopcoverError):
    """Bundle assembly or verification failure (checksums, inconsistent headers)."""


class DataError(HopcoverError):
    """Bad feature / class-label / split input data."""
