"""Streaming session driver and revision accounting.

A session feeds source chunks to a decoder one at a time, re-decoding the
whole prefix after each chunk. Between updates, the previously displayed
output constrains the next decode (all but the last F tokens per stream are
forced) and the mask policy withholds the last K tokens per stream from
display. The final update always decodes and reveals everything.

The revision log records exactly what a user would have seen; finalization
times and erasure counts for the latency/flicker metrics are derived from
the log alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Utterance, chunk_by_duration
from .decode import (
    DEFAULT_MAX_TOKENS,
    DecodeRequest,
    Decoder,
    MaskPolicy,
    apply_mask,
    decode,
)
from .errors import DecoderError, SessionError
from .schedule import InterleavePolicy, Stream


@dataclass(frozen=True)
class SessionConfig:
    """Inference-time latency/stability controls for one streaming session."""

    mask: MaskPolicy = field(default_factory=MaskPolicy)
    free_tokens: int = DEFAULT_MAX_TOKENS
    chunk_ms: int = 500
    policy: InterleavePolicy = field(default_factory=lambda: InterleavePolicy(0.0))
    beam_size: int = 5
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self) -> None:
        if self.chunk_ms <= 0:
            raise ValueError(f"chunk_ms must be positive, got {self.chunk_ms}")
        if self.free_tokens < 0:
            raise ValueError(f"free_tokens must be nonnegative, got {self.free_tokens}")

    def to_dict(self) -> dict:
        return {
            "k_transcript": self.mask.k_transcript,
            "k_translation": self.mask.k_translation,
            "free_tokens": self.free_tokens,
            "chunk_ms": self.chunk_ms,
            "gamma": self.policy.gamma,
            "beam_size": self.beam_size,
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(
            mask=MaskPolicy(d["k_transcript"], d["k_translation"]),
            free_tokens=d["free_tokens"],
            chunk_ms=d["chunk_ms"],
            policy=InterleavePolicy(d["gamma"]),
            beam_size=d["beam_size"],
            max_tokens=d["max_tokens"],
        )


@dataclass(frozen=True)
class RevisionUpdate:
    """One displayed (transcript, translation) pair."""

    update_index: int
    source_consumed_sec: float
    displayed_transcript: tuple[str, ...]
    displayed_translation: tuple[str, ...]
    is_final: bool

    def displayed(self, stream: Stream) -> tuple[str, ...]:
        return self.displayed_transcript if stream is Stream.TRANSCRIPT else self.displayed_translation


@dataclass(frozen=True)
class RevisionLog:
    """Per-session trace of every displayed output."""

    utterance_id: str
    decoder: str
    config: SessionConfig
    updates: tuple[RevisionUpdate, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "updates", tuple(self.updates))
        if self.updates:
            finals = [u for u in self.updates if u.is_final]
            if len(finals) != 1 or not self.updates[-1].is_final:
                raise ValueError("log must contain exactly one final update, in last position")
            consumed = [u.source_consumed_sec for u in self.updates]
            if any(b < a for a, b in zip(consumed, consumed[1:])):
                raise ValueError("source_consumed_sec must be non-decreasing")

    @property
    def final(self) -> RevisionUpdate:
        return self.updates[-1]


@dataclass(frozen=True)
class FinalizationTrace:
    """Per final-output token position, the source seconds consumed at the
    earliest update after which that position never changes again."""

    transcript: tuple[float, ...]
    translation: tuple[float, ...]

    def for_stream(self, stream: Stream) -> tuple[float, ...]:
        return self.transcript if stream is Stream.TRANSCRIPT else self.translation


@dataclass(frozen=True)
class ErasureRecord:
    update_index: int
    stream: Stream
    erased_token_count: int


def run_session(utterance: Utterance, decoder: Decoder, config: SessionConfig) -> RevisionLog:
    """Simulate one streaming session and return its revision log.

    The utterance is re-chunked at ``config.chunk_ms``; each chunk triggers a
    full re-decode constrained by the previously *displayed* output minus its
    last ``free_tokens`` tokens per stream. All updates except the last are
    masked; the last decodes the full source and reveals everything.
    """
    chunked = chunk_by_duration(utterance, config.chunk_ms)
    chunks = chunked.source_chunks
    updates: list[RevisionUpdate] = []
    displayed_st: tuple[str, ...] = ()
    displayed_tt: tuple[str, ...] = ()
    n_updates = max(1, len(chunks))
    for i in range(n_updates):
        is_final = i == n_updates - 1
        forced_st = displayed_st[: len(displayed_st) - min(config.free_tokens, len(displayed_st))]
        forced_tt = displayed_tt[: len(displayed_tt) - min(config.free_tokens, len(displayed_tt))]
        request = DecodeRequest(
            source_prefix=chunks[: i + 1],
            forced_transcript_prefix=forced_st,
            forced_translation_prefix=forced_tt,
            policy=config.policy,
            beam_size=config.beam_size,
            max_tokens=config.max_tokens,
            session=f"{utterance.id}/{i}",
        )
        try:
            result = decode(decoder, request)
        except DecoderError as exc:
            partial = RevisionLog(
                utterance_id=utterance.id,
                decoder=decoder.name,
                config=config,
                updates=_close_partial(updates),
            )
            raise SessionError(
                f"session {utterance.id} aborted at update {i}: {exc}", partial_log=partial
            ) from exc
        shown = apply_mask(result, config.mask, is_final=is_final)
        displayed_st, displayed_tt = shown.transcript, shown.translation
        updates.append(
            RevisionUpdate(
                update_index=i,
                source_consumed_sec=chunks[i].t_end if chunks else 0.0,
                displayed_transcript=displayed_st,
                displayed_translation=displayed_tt,
                is_final=is_final,
            )
        )
    return RevisionLog(utterance.id, decoder.name, config, tuple(updates))


def _close_partial(updates: list[RevisionUpdate]) -> tuple[RevisionUpdate, ...]:
    # A partial log still satisfies the log invariant: flag its last update
    # final (or synthesize an empty one) so it can be serialized and scored.
    if not updates:
        return (RevisionUpdate(0, 0.0, (), (), True),)
    last = updates[-1]
    return tuple(updates[:-1]) + (
        RevisionUpdate(
            last.update_index,
            last.source_consumed_sec,
            last.displayed_transcript,
            last.displayed_translation,
            True,
        ),
    )


def finalization_times(log: RevisionLog) -> FinalizationTrace:
    """Earliest source-consumed seconds after which each final token is stable.

    A position counts as finalized at update ``u`` when every update from
    ``u`` onward displays the same token there as the final output.
    """
    if not log.updates or not log.updates[-1].is_final:
        raise ValueError("log must end with a final update")

    def trace(stream: Stream) -> tuple[float, ...]:
        final = log.final.displayed(stream)
        times = []
        for p, final_tok in enumerate(final):
            finalize = log.final.source_consumed_sec
            for upd in reversed(log.updates):
                shown = upd.displayed(stream)
                if p < len(shown) and shown[p] == final_tok:
                    finalize = upd.source_consumed_sec
                else:
                    break
            times.append(finalize)
        return tuple(times)

    return FinalizationTrace(transcript=trace(Stream.TRANSCRIPT), translation=trace(Stream.TRANSLATION))


def longest_common_prefix(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def erasure_per_update(log: RevisionLog) -> list[ErasureRecord]:
    """Tokens retracted at each update: |prev| - LCP(prev, new), per stream."""
    records = []
    for prev, cur in zip(log.updates, log.updates[1:]):
        for stream in (Stream.TRANSCRIPT, Stream.TRANSLATION):
            before, after = prev.displayed(stream), cur.displayed(stream)
            erased = len(before) - longest_common_prefix(before, after)
            records.append(ErasureRecord(cur.update_index, stream, erased))
    return records


def save_log(log: RevisionLog, path: str | Path) -> None:
    """Serialize a revision log as JSONL (header line + one line per update)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "type": "header",
            "utterance_id": log.utterance_id,
            "decoder": log.decoder,
            "config": log.config.to_dict(),
        }
        fh.write(json.dumps(header) + "\n")
        for u in log.updates:
            fh.write(
                json.dumps(
                    {
                        "type": "update",
                        "update_index": u.update_index,
                        "source_consumed_sec": u.source_consumed_sec,
                        "displayed_transcript": list(u.displayed_transcript),
                        "displayed_translation": list(u.displayed_translation),
                        "is_final": u.is_final,
                    }
                )
                + "\n"
            )


def load_log(path: str | Path) -> RevisionLog:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise ValueError(f"{path}: missing log header line")
    header = lines[0]
    updates = tuple(
        RevisionUpdate(
            update_index=rec["update_index"],
            source_consumed_sec=rec["source_consumed_sec"],
            displayed_transcript=tuple(rec["displayed_transcript"]),
            displayed_translation=tuple(rec["displayed_translation"]),
            is_final=rec["is_final"],
        )
        for rec in lines[1:]
    )
    return RevisionLog(
        utterance_id=header["utterance_id"],
        decoder=header["decoder"],
        config=SessionConfig.from_dict(header["config"]),
        updates=updates,
    )
