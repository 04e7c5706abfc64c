"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SyntaxAttnError(Exception):
    """Base class for every error raised by this package."""


class TreebankError(SyntaxAttnError, ValueError):
    """Malformed bracketed tree text.

    ``offset`` is the UTF-8 byte offset into the input where the problem
    was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnbalancedBrackets(TreebankError):
    pass


class EmptyConstituent(TreebankError):
    pass


class TrailingInput(TreebankError):
    pass


class IndexOutOfRange(SyntaxAttnError, IndexError):
    pass


class LengthMismatch(SyntaxAttnError, ValueError):
    pass


class AlignmentMismatch(SyntaxAttnError, ValueError):
    pass


class SentinelOverflow(SyntaxAttnError, ValueError):
    pass


class DimensionMismatch(SyntaxAttnError, ValueError):
    pass


class NonPositiveTau(SyntaxAttnError, ValueError):
    pass


class ZeroMaskRow(SyntaxAttnError, ValueError):
    pass


class MaskFormatError(SyntaxAttnError, ValueError):
    pass
