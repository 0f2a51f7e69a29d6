"""Parallel utterance corpus: loading, chunking, prefix augmentation.

Corpus files come in two flavors:

* JSONL, one utterance per line::

    {"id": str, "duration_sec": float, "transcript": [str, ...],
     "translation": [str, ...],
     "chunks": [{"t0": float, "t1": float, "tokens": [str, ...]}, ...]}

* TSV with columns ``id, duration_sec, transcript, translation`` where the
  text columns are space-separated tokens. TSV rows carry no chunk layout,
  so the whole source is loaded as a single chunk holding the transcript
  tokens; re-slice with :func:`chunk_by_duration`.

Chunk payloads are opaque to the engine. The built-in toy decoders read
them as gold source tokens revealed proportionally to time.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from .errors import CorpusFormatError, CorpusValidationError

_TIME_TOL = 1e-9


@dataclass(frozen=True)
class TimedChunk:
    """A source slice covering [t_start, t_end) seconds."""

    t_start: float
    t_end: float
    tokens: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise CorpusValidationError(
                f"chunk [{self.t_start}, {self.t_end}) must satisfy t_end > t_start"
            )
        object.__setattr__(self, "tokens", tuple(self.tokens))


@dataclass(frozen=True)
class Utterance:
    """A timed source signal plus reference transcript/translation tokens."""

    id: str
    duration_sec: float
    source_chunks: tuple[TimedChunk, ...] = ()
    transcript_ref: tuple[str, ...] = ()
    translation_ref: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_chunks", tuple(self.source_chunks))
        object.__setattr__(self, "transcript_ref", tuple(self.transcript_ref))
        object.__setattr__(self, "translation_ref", tuple(self.translation_ref))
        if self.duration_sec < 0:
            raise CorpusValidationError(f"{self.id}: negative duration {self.duration_sec}")
        for seq_name in ("transcript_ref", "translation_ref"):
            if any(tok == "" for tok in getattr(self, seq_name)):
                raise CorpusValidationError(f"{self.id}: empty token in {seq_name}")
        chunks = self.source_chunks
        if chunks:
            if self.duration_sec <= 0:
                raise CorpusValidationError(f"{self.id}: chunks present but duration is 0")
            if abs(chunks[0].t_start) > _TIME_TOL:
                raise CorpusValidationError(f"{self.id}: first chunk must start at 0")
            for prev, cur in zip(chunks, chunks[1:]):
                if abs(prev.t_end - cur.t_start) > _TIME_TOL:
                    raise CorpusValidationError(
                        f"{self.id}: chunks not contiguous at t={prev.t_end} vs {cur.t_start}"
                    )
            if abs(chunks[-1].t_end - self.duration_sec) > _TIME_TOL:
                raise CorpusValidationError(
                    f"{self.id}: last chunk ends at {chunks[-1].t_end}, not duration "
                    f"{self.duration_sec}"
                )
            if any(tok == "" for ch in chunks for tok in ch.tokens):
                raise CorpusValidationError(f"{self.id}: empty token in chunk payload")

    @property
    def source_tokens(self) -> tuple[str, ...]:
        """Concatenated chunk payload in stream order."""
        return tuple(tok for ch in self.source_chunks for tok in ch.tokens)


@dataclass(frozen=True)
class PrefixAugmentConfig:
    """Settings for prefix-sampling augmentation.

    Each instance is used ``copies_per_instance`` times: once in full and the
    rest truncated at an independently drawn fraction of the input. The
    recommended schedule (start after epoch 15) is exported as metadata only;
    there is no training loop here.
    """

    copies_per_instance: int = 2
    seed: int = 0
    recommended_start_epoch: int = 15
    fraction_sampler: Callable[[random.Random], float] | None = None

    def __post_init__(self) -> None:
        if self.copies_per_instance < 1:
            raise ValueError("copies_per_instance must be >= 1")

    def draw_fraction(self, rng: random.Random) -> float:
        f = self.fraction_sampler(rng) if self.fraction_sampler else rng.random()
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"sampled fraction {f} outside [0, 1]")
        return f


def load_corpus(path: str | Path, format: str | None = None) -> list[Utterance]:
    """Load a corpus file; format is 'jsonl', 'tsv', or None to infer from suffix."""
    path = Path(path)
    if format is None:
        format = "tsv" if path.suffix.lower() in (".tsv", ".tab") else "jsonl"
    if format == "jsonl":
        return _load_jsonl(path)
    if format == "tsv":
        return _load_tsv(path)
    raise ValueError(f"unknown corpus format {format!r}")


def _load_jsonl(path: Path) -> list[Utterance]:
    utterances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                chunks = tuple(
                    TimedChunk(float(c["t0"]), float(c["t1"]), tuple(c.get("tokens", ())))
                    for c in rec.get("chunks", ())
                )
                utt = Utterance(
                    id=str(rec["id"]),
                    duration_sec=float(rec["duration_sec"]),
                    source_chunks=chunks,
                    transcript_ref=tuple(rec.get("transcript", ())),
                    translation_ref=tuple(rec.get("translation", ())),
                )
            except KeyError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: missing field {exc}") from exc
            except (TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad field value: {exc}") from exc
            except CorpusValidationError as exc:
                raise CorpusValidationError(f"{path}:{lineno}: {exc}") from exc
            utterances.append(utt)
    return utterances


def _load_tsv(path: Path) -> list[Utterance]:
    utterances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise CorpusFormatError(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
            uid, dur_s, transcript_s, translation_s = cols
            try:
                duration = float(dur_s)
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad duration {dur_s!r}") from exc
            transcript = tuple(transcript_s.split())
            translation = tuple(translation_s.split())
            chunks = (TimedChunk(0.0, duration, transcript),) if duration > 0 else ()
            try:
                utt = Utterance(uid, duration, chunks, transcript, translation)
            except CorpusValidationError as exc:
                raise CorpusValidationError(f"{path}:{lineno}: {exc}") from exc
            utterances.append(utt)
    return utterances


def utterance_to_dict(utt: Utterance) -> dict:
    return {
        "id": utt.id,
        "duration_sec": utt.duration_sec,
        "transcript": list(utt.transcript_ref),
        "translation": list(utt.translation_ref),
        "chunks": [
            {"t0": c.t_start, "t1": c.t_end, "tokens": list(c.tokens)} for c in utt.source_chunks
        ],
    }


def save_corpus(utterances: Iterable[Utterance], path: str | Path) -> None:
    """Write a corpus as JSONL (one utterance per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        for utt in utterances:
            fh.write(json.dumps(utterance_to_dict(utt)) + "\n")


def _token_boundary(n_tokens: int, t: float, duration: float) -> int:
    # Monotone in t, 0 at t=0 and n_tokens at t=duration.
    if duration <= 0:
        return 0
    return min(n_tokens, max(0, int(round(n_tokens * t / duration))))


def chunk_by_duration(utterance: Utterance, chunk_ms: int) -> Utterance:
    """Re-slice the source into ceil(duration / chunk) uniform chunks.

    Payload tokens are redistributed proportionally to time; their
    concatenation is unchanged.
    """
    if chunk_ms <= 0:
        raise ValueError(f"chunk_ms must be positive, got {chunk_ms}")
    duration = utterance.duration_sec
    if duration <= 0 or not utterance.source_chunks:
        return utterance
    step = chunk_ms / 1000.0
    n_chunks = max(1, math.ceil(duration / step - _TIME_TOL))
    tokens = utterance.source_tokens
    bounds_t = [min(k * step, duration) for k in range(n_chunks)] + [duration]
    bounds_i = [_token_boundary(len(tokens), t, duration) for t in bounds_t]
    chunks = tuple(
        TimedChunk(bounds_t[k], bounds_t[k + 1], tokens[bounds_i[k] : bounds_i[k + 1]])
        for k in range(n_chunks)
    )
    return replace(utterance, source_chunks=chunks)


def _time_prefix(chunks: tuple[TimedChunk, ...], cut_sec: float) -> tuple[TimedChunk, ...]:
    out: list[TimedChunk] = []
    for ch in chunks:
        if ch.t_end <= cut_sec + _TIME_TOL:
            out.append(ch)
            continue
        if ch.t_start >= cut_sec - _TIME_TOL:
            break
        # Straddling chunk: keep [t_start, cut) with a proportional token slice.
        frac = (cut_sec - ch.t_start) / (ch.t_end - ch.t_start)
        keep = int(round(len(ch.tokens) * frac))
        out.append(TimedChunk(ch.t_start, cut_sec, ch.tokens[:keep]))
        break
    return tuple(out)


def truncate_utterance(utterance: Utterance, fraction: float, suffix: str = "#prefix") -> Utterance:
    """Build the prefix copy of an utterance cut at ``fraction`` of its extent.

    Source audio is cut at ``fraction * duration_sec``; both reference token
    sequences are cut at ``round(fraction * len)`` tokens.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if fraction == 1.0:
        return replace(utterance, id=utterance.id + suffix)
    cut = fraction * utterance.duration_sec
    return Utterance(
        id=utterance.id + suffix,
        duration_sec=cut,
        source_chunks=_time_prefix(utterance.source_chunks, cut),
        transcript_ref=utterance.transcript_ref[: round(fraction * len(utterance.transcript_ref))],
        translation_ref=utterance.translation_ref[: round(fraction * len(utterance.translation_ref))],
    )


def augment_prefixes(corpus: list[Utterance], cfg: PrefixAugmentConfig) -> list[Utterance]:
    """Emit each utterance in full plus prefix copies at random fractions.

    Deterministic under the config seed; with the default two copies per
    instance the output has exactly twice as many utterances as the input.
    """
    rng = random.Random(cfg.seed)
    out: list[Utterance] = []
    for utt in corpus:
        out.append(utt)
        for k in range(cfg.copies_per_instance - 1):
            f = cfg.draw_fraction(rng)
            tag = "#prefix" if cfg.copies_per_instance == 2 else f"#prefix{k}"
            out.append(truncate_utterance(utt, f, suffix=tag))
    return out
