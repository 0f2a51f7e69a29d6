"""Exception types shared across the toolkit."""


class RetransError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(RetransError):
    """Base class for corpus loading/validation failures."""


class CorpusFormatError(CorpusError):
    """Malformed corpus record; message names the offending line."""


class CorpusValidationError(CorpusError):
    """Record parsed but violates an utterance invariant."""


class DecoderError(RetransError):
    """Base class for decoder failures."""


class DecoderResolutionError(DecoderError):
    """Decoder spec string does not name a usable decoder."""


class DecoderTransportError(DecoderError):
    """External decoder subprocess died or broke the wire protocol."""


class DecoderConformanceError(DecoderError):
    """Decoder returned a result violating the decode contract."""


class SessionError(RetransError):
    """Streaming session aborted; carries the partial revision log."""

    def __init__(self, message, partial_log=None):
        super().__init__(message)
        self.partial_log = partial_log
