"""Streaming re-translation simulator and evaluation toolkit.

Simulates incremental joint transcription + translation with interleaved
generation, mask-k display, and constrained re-decoding, and scores the
resulting sessions for quality (WER, BLEU), latency (average lag), flicker
(normalized erasure), and transcript/translation consistency.
"""

from .corpus import (
    PrefixAugmentConfig,
    TimedChunk,
    Utterance,
    augment_prefixes,
    chunk_by_duration,
    load_corpus,
    save_corpus,
)
from .decode import (
    DecodeRequest,
    DecodeResult,
    Decoder,
    EchoLexiconDecoder,
    ExternalDecoder,
    MaskPolicy,
    NoisyBeamDecoder,
    apply_mask,
    decode,
    length_normalized_score,
)
from .errors import (
    CorpusError,
    CorpusFormatError,
    CorpusValidationError,
    DecoderConformanceError,
    DecoderError,
    DecoderResolutionError,
    DecoderTransportError,
    RetransError,
    SessionError,
)
from .metrics import (
    Lexicon,
    MetricReport,
    SignificanceConfig,
    SignificanceResult,
    average_lag,
    consistency,
    corpus_bleu,
    corpus_report,
    edit_distance,
    incremental_consistency,
    load_lexicon,
    normalized_erasure,
    save_lexicon,
    session_report,
    significance,
    train_lexicon,
    wer,
)
from .schedule import (
    InterleavePolicy,
    ScheduleState,
    Stream,
    TaggedToken,
    deinterleave,
    interleave,
    next_stream,
)
from .stream import (
    FinalizationTrace,
    RevisionLog,
    RevisionUpdate,
    SessionConfig,
    erasure_per_update,
    finalization_times,
    load_log,
    run_session,
    save_log,
)
from .synthetic import synthetic_corpus, synthetic_dictionary

__version__ = "0.1.0"
