"""Exception types raised across the package."""


class LddrError(Exception):
    """Base class for all package-specific errors."""


class EmbeddingFormatError(LddrError):
    """Base class for embedding-file ingestion failures."""


class BadMagicError(EmbeddingFormatError):
    def __init__(self, found: bytes):
        super().__init__(f"bad magic: expected b'LDDREMB1', found {found!r}")
        self.found = found


class TruncatedFileError(EmbeddingFormatError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"truncated file: expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


class NonFiniteValueError(EmbeddingFormatError):
    def __init__(self, where: str, byte_offset: int | None = None):
        msg = f"non-finite value in {where}"
        if byte_offset is not None:
            msg += f" (byte offset {byte_offset})"
        super().__init__(msg)
        self.byte_offset = byte_offset


class ZeroNormRowError(EmbeddingFormatError):
    def __init__(self, row: int | str):
        super().__init__(f"zero-norm embedding: {row}")
        self.row = row


class DimensionMismatchError(LddrError):
    """Ragged frame rows, or query length disagreeing with the frame dim."""


class KernelCapError(LddrError):
    """T exceeds the explicit-kernel materialization cap; use the feature-space path."""


class CapExceededError(LddrError):
    """Subset enumeration would exceed the exhaustive-search cap."""


class BudgetTooSmallError(LddrError):
    """Token budget cannot accommodate even a single retained frame."""
