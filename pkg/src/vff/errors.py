"""Exception taxonomy.

Library code raises nothing but subclasses of :class:`VffError` for expected
failure modes; anything else escaping is a bug. The CLI maps ConfigError to
exit code 2 (usage) and every other VffError to exit code 1.
"""


class VffError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(VffError):
    """Invalid configuration value or unusable argument combination."""


class DomainError(VffError):
    """Coordinate outside the field domain or value outside a contract range."""


class StructureError(VffError):
    """Shape, size, or layout mismatch between in-memory objects."""


class RankDeficiencyError(VffError):
    """Unpenalized fit attempted on a rank-deficient design.

    ``voxel`` is the (jx, jy, jt) center when a single voxel was being fit,
    or None when the shared window design is deficient for every voxel.
    """

    def __init__(self, message, voxel=None):
        super().__init__(message)
        self.voxel = voxel


class FormatError(VffError):
    """Malformed file content."""


class MagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionError(FormatError):
    """File container version is not supported."""


class PayloadSizeError(FormatError):
    """Payload length disagrees with what the header promises."""


class EmptySequenceError(FormatError):
    """A frame source yielded no frames."""


class FrameReadError(FormatError):
    """A frame file could not be decoded into the expected pixel format."""


class FrameSizeError(FormatError):
    """Frames in one sequence disagree on dimensions."""


class StreamError(FormatError):
    """Malformed stream framing (bad signature, marker, or truncation)."""


class ColorspaceError(FormatError):
    """Stream declares a colorspace this reader does not support."""
