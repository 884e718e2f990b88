"""Exception types shared across the toolkit."""


class CodeAttackError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedLanguage(CodeAttackError):
    def __init__(self, language):
        super().__init__(f"unsupported language: {language!r}")
        self.language = language


class LexError(CodeAttackError):
    """Raised on unterminated strings/comments; carries the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class OracleUnavailable(CodeAttackError):
    """Transport failure talking to a model oracle, retries exhausted."""


class MalformedResponse(CodeAttackError):
    """Oracle replied with a payload that violates the wire protocol."""


class NoMaskInRequest(CodeAttackError):
    """mask_predict called without a valid contiguous mask span."""


class FormatError(CodeAttackError):
    """Corpus file is structurally broken (too many malformed lines)."""
