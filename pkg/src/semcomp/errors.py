"""Exception types shared across the toolkit.

Plain ``ValueError`` is used for ordinary bad arguments (dimension
mismatches, empty inputs). The classes below exist where callers need to
distinguish failure modes, e.g. for CLI exit codes.
"""


class FormatError(Exception):
    """A file failed structural validation. Carries the byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DesyncError(Exception):
    """Encoder-side and decoder-side shared state disagree."""


class ServiceError(Exception):
    """The embedding service returned a non-success response or is unreachable."""


class ProtocolError(ServiceError):
    """The embedding service answered with an inconsistent payload."""


class UnknownSymbolError(ValueError):
    """A symbol outside the code's alphabet was encoded; signals codebook desync."""


class TruncationError(ValueError):
    """A bitstream ran out of bits mid-codeword."""


class DegenerateClusteringError(RuntimeError):
    """Clustering terminated with zero exemplars; raise the preference and retry."""


class ReconstructionError(RuntimeError):
    """Lossless round-trip produced different text; must never happen."""
