"""Decoder contract for the re-translation loop, plus built-in toy decoders.

Every decode is a fresh, stateless pass over the full source prefix seen so
far; no decoder state survives between calls. A decoder receives the source
chunks, per-stream forced prefixes, and the interleave policy, and returns
full transcript/translation hypotheses that literally start with the forced
prefixes. The toy decoders read gold source tokens from chunk payloads, so
they simulate an ASR front-end without one: transcript hypotheses echo the
revealed tokens and translation hypotheses come from a word lexicon.

External decoders run as subprocesses speaking newline-delimited JSON (see
:class:`ExternalDecoder` for the wire schema).
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import TimedChunk
from .errors import DecoderConformanceError, DecoderTransportError
from .schedule import InterleavePolicy, Stream, TaggedToken, interleave

PROTOCOL_VERSION = 1
DEFAULT_MAX_TOKENS = 1024
LENGTH_NORM_EXPONENT = 1.5


@dataclass(frozen=True)
class MaskPolicy:
    """Withhold the last K tokens of each stream from display (mask-k)."""

    k_transcript: int = 0
    k_translation: int = 0

    def __post_init__(self) -> None:
        if self.k_transcript < 0 or self.k_translation < 0:
            raise ValueError("mask sizes must be nonnegative")

    @classmethod
    def uniform(cls, k: int) -> "MaskPolicy":
        return cls(k_transcript=k, k_translation=k)


@dataclass(frozen=True)
class DecodeRequest:
    """One stateless decode over everything heard so far."""

    source_prefix: tuple[TimedChunk, ...]
    forced_transcript_prefix: tuple[str, ...] = ()
    forced_translation_prefix: tuple[str, ...] = ()
    policy: InterleavePolicy = field(default_factory=lambda: InterleavePolicy(0.0))
    beam_size: int = 5
    max_tokens: int = DEFAULT_MAX_TOKENS
    session: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_prefix", tuple(self.source_prefix))
        object.__setattr__(self, "forced_transcript_prefix", tuple(self.forced_transcript_prefix))
        object.__setattr__(self, "forced_translation_prefix", tuple(self.forced_translation_prefix))
        if self.beam_size < 1:
            raise ValueError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        for name in ("forced_transcript_prefix", "forced_translation_prefix"):
            prefix = getattr(self, name)
            if len(prefix) > self.max_tokens:
                raise ValueError(f"{name} longer than max_tokens ({len(prefix)} > {self.max_tokens})")
            if any(tok == "" for tok in prefix):
                raise ValueError(f"{name} contains an empty token")

    @property
    def revealed_tokens(self) -> tuple[str, ...]:
        return tuple(tok for ch in self.source_prefix for tok in ch.tokens)

    @property
    def consumed_sec(self) -> float:
        return self.source_prefix[-1].t_end if self.source_prefix else 0.0


@dataclass(frozen=True)
class DecodeResult:
    """Decode output; transcript/translation are the two views of interleaved."""

    interleaved: tuple[TaggedToken, ...]
    transcript: tuple[str, ...]
    translation: tuple[str, ...]
    score: float = 0.0
    masked: bool = False


def length_normalized_score(logprob: float, length: int, exponent: float) -> float:
    """Polynomial length normalization: logprob / length**exponent."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return logprob / length**exponent


class Decoder:
    """Base decoder: map a DecodeRequest to raw (transcript, translation, score).

    Implementations must honor forced prefixes themselves; :func:`decode`
    verifies that and rejects violations.
    """

    name = "decoder"

    def decode_streams(self, request: DecodeRequest) -> tuple[list[str], list[str], float]:
        raise NotImplementedError

    def close(self) -> None:
        pass


def _force(natural: list[str], forced: tuple[str, ...]) -> list[str]:
    # Constrained decoding for toy decoders: pin the prefix, continue with the
    # natural hypothesis beyond it.
    return list(forced) + natural[len(forced):]


def _swap_adjacent(tokens: list[str]) -> list[str]:
    out = list(tokens)
    for i in range(0, len(out) - 1, 2):
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


@dataclass(frozen=True)
class EchoLexiconDecoder(Decoder):
    """Deterministic toy decoder over revealed gold tokens.

    The transcript echoes the revealed source tokens; the translation is the
    per-token dictionary image. With ``reorder_window`` > 0 the last window of
    translation tokens is presented with adjacent pairs swapped until more
    right-context arrives, so hypotheses flicker like a reordering model's.
    With ``lookahead`` > 0 the transcript tentatively repeats its last token
    as a guess at unheard input, mimicking partial-input hallucination.
    """

    dictionary: Mapping[str, str] = field(default_factory=dict)
    reorder_window: int = 0
    lookahead: int = 0

    def __post_init__(self) -> None:
        if self.reorder_window < 0 or self.lookahead < 0:
            raise ValueError("reorder_window and lookahead must be nonnegative")

    @property
    def name(self) -> str:
        return f"echo(window={self.reorder_window},lookahead={self.lookahead})"

    def translate_token(self, token: str) -> str:
        return self.dictionary.get(token, token)

    def decode_streams(self, request: DecodeRequest) -> tuple[list[str], list[str], float]:
        revealed = list(request.revealed_tokens)
        transcript = list(revealed)
        if self.lookahead and revealed:
            transcript.extend([revealed[-1]] * self.lookahead)
        image = [self.translate_token(t) for t in revealed]
        stable = len(image) - min(self.reorder_window, len(image))
        translation = image[:stable] + _swap_adjacent(image[stable:])
        return (
            _force(transcript, request.forced_transcript_prefix),
            _force(translation, request.forced_translation_prefix),
            0.0,
        )


Candidate = tuple[tuple[str, ...], float]


@dataclass(frozen=True)
class NoisyBeamDecoder(Decoder):
    """Toy beam-search decoder over a weighted word lexicon.

    Each source token maps to scored candidate target phrases (0..n tokens).
    Beam search accumulates raw log-probabilities token by token and the final
    hypothesis is picked by polynomial length normalization. The transcript
    side still echoes the revealed source tokens.
    """

    lexicon: Mapping[str, tuple[Candidate, ...]] = field(default_factory=dict)
    exponent: float = LENGTH_NORM_EXPONENT

    @property
    def name(self) -> str:
        return f"beam(exponent={self.exponent})"

    @classmethod
    def from_tsv(cls, path: str | Path, exponent: float = LENGTH_NORM_EXPONENT) -> "NoisyBeamDecoder":
        """Load a lexicon from TSV rows ``source<TAB>target phrase<TAB>logprob``.

        Two-column rows (a plain word dictionary) are read as single
        candidates at log-probability 0.
        """
        table: dict[str, list[Candidate]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) == 2:
                    src, phrase, logprob = parts[0], parts[1], "0.0"
                else:
                    src, phrase, logprob = parts
                table.setdefault(src, []).append((tuple(phrase.split()), float(logprob)))
        frozen = {src: tuple(sorted(cands)) for src, cands in table.items()}
        return cls(lexicon=frozen, exponent=exponent)

    def candidates(self, token: str) -> tuple[Candidate, ...]:
        return self.lexicon.get(token) or (((token,), 0.0),)

    def _rank_key(self, item: tuple[tuple[str, ...], float]):
        seq, score = item
        norm = score if not seq else length_normalized_score(score, len(seq), self.exponent)
        return (-norm, seq)

    def _beam_translate(self, tokens: Sequence[str], beam_size: int) -> tuple[list[str], float]:
        # Hypotheses are ranked by the normalized score throughout, both for
        # per-step pruning and for the final pick; ties break lexicographically.
        beams: list[tuple[tuple[str, ...], float]] = [((), 0.0)]
        for tok in tokens:
            expanded = [
                (seq + phrase, score + lp)
                for seq, score in beams
                for phrase, lp in self.candidates(tok)
            ]
            expanded.sort(key=self._rank_key)
            beams = expanded[:beam_size]
        best_seq, best_score = beams[0]
        return list(best_seq), best_score

    def decode_streams(self, request: DecodeRequest) -> tuple[list[str], list[str], float]:
        revealed = list(request.revealed_tokens)
        translation, score = self._beam_translate(revealed, request.beam_size)
        return (
            _force(revealed, request.forced_transcript_prefix),
            _force(translation, request.forced_translation_prefix),
            score,
        )


class ExternalDecoder(Decoder):
    """Client for a decoder subprocess speaking newline-delimited JSON.

    Wire protocol (one JSON object per line, client -> server unless noted):

    * ``{"type": "hello", "protocol": 1}`` opens the stream; the server
      answers with the same object.
    * ``{"type": "decode", "session": str, "gamma": float, "beam": int,
      "max_tokens": int, "source_chunks": [{"t0": float, "t1": float,
      "tokens": [str, ...]}, ...], "forced_transcript": [str, ...],
      "forced_translation": [str, ...]}`` requests one decode; the server
      answers ``{"type": "result", "session": str, "transcript": [str, ...],
      "translation": [str, ...], "score": float}``.
    * ``{"type": "shutdown"}`` closes the stream.

    Responses that violate the forced-prefix contract are rejected with a
    conformance error; transport failures carry the session id.
    """

    def __init__(self, command: str):
        self.command = command
        self._proc: subprocess.Popen | None = None

    @property
    def name(self) -> str:
        return f"exec:{self.command}"

    def _ensure_started(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise DecoderTransportError(f"cannot start decoder {self.command!r}: {exc}") from exc
        reply = self._roundtrip({"type": "hello", "protocol": PROTOCOL_VERSION}, session="handshake")
        if reply.get("type") != "hello" or reply.get("protocol") != PROTOCOL_VERSION:
            raise DecoderTransportError(f"bad handshake from {self.command!r}: {reply}")

    def _roundtrip(self, message: dict, session: str) -> dict:
        proc = self._proc
        assert proc is not None and proc.stdin is not None and proc.stdout is not None
        try:
            proc.stdin.write(json.dumps(message) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise DecoderTransportError(f"session {session}: decoder pipe broke: {exc}") from exc
        if not line:
            raise DecoderTransportError(f"session {session}: decoder exited without replying")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise DecoderTransportError(f"session {session}: unparseable reply {line!r}") from exc

    def decode_streams(self, request: DecodeRequest) -> tuple[list[str], list[str], float]:
        self._ensure_started()
        message = {
            "type": "decode",
            "session": request.session,
            "gamma": request.policy.gamma,
            "beam": request.beam_size,
            "max_tokens": request.max_tokens,
            "source_chunks": [
                {"t0": c.t_start, "t1": c.t_end, "tokens": list(c.tokens)}
                for c in request.source_prefix
            ],
            "forced_transcript": list(request.forced_transcript_prefix),
            "forced_translation": list(request.forced_translation_prefix),
        }
        reply = self._roundtrip(message, session=request.session)
        if reply.get("type") != "result" or reply.get("session") != request.session:
            raise DecoderTransportError(
                f"session {request.session}: unexpected reply {reply!r}"
            )
        transcript, translation = reply.get("transcript"), reply.get("translation")
        if (
            not isinstance(transcript, list)
            or not isinstance(translation, list)
            or not all(isinstance(t, str) for t in transcript + translation)
        ):
            raise DecoderConformanceError(
                f"session {request.session}: result streams must be lists of strings"
            )
        return transcript, translation, float(reply.get("score", 0.0))

    def close(self) -> None:
        if self._proc is None:
            return
        if self._proc.poll() is None:
            try:
                assert self._proc.stdin is not None
                self._proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __enter__(self) -> "ExternalDecoder":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _check_prefix(stream_name: str, output: Sequence[str], forced: tuple[str, ...], who: str) -> None:
    if tuple(output[: len(forced)]) != forced:
        raise DecoderConformanceError(
            f"{who}: {stream_name} output does not start with the forced prefix "
            f"(forced {list(forced)}, got {list(output[: len(forced)])})"
        )


def decode(decoder: Decoder, request: DecodeRequest) -> DecodeResult:
    """Run one decode and enforce the contract.

    The result honors forced prefixes exactly, each stream is capped at
    ``max_tokens``, and the interleaved view follows the scheduling rule for
    the request's policy.
    """
    transcript, translation, score = decoder.decode_streams(request)
    _check_prefix("transcript", transcript, request.forced_transcript_prefix, decoder.name)
    _check_prefix("translation", translation, request.forced_translation_prefix, decoder.name)
    transcript = list(transcript[: request.max_tokens])
    translation = list(translation[: request.max_tokens])
    interleaved = interleave(transcript, translation, request.policy)
    return DecodeResult(
        interleaved=tuple(interleaved),
        transcript=tuple(transcript),
        translation=tuple(translation),
        score=score,
    )


def apply_mask(result: DecodeResult, mask: MaskPolicy, is_final: bool) -> DecodeResult:
    """Hide the last K tokens of each stream; the final update reveals all.

    Idempotent: masking an already-masked result returns it unchanged.
    """
    if is_final or result.masked:
        return result
    keep_st = len(result.transcript) - min(mask.k_transcript, len(result.transcript))
    keep_tt = len(result.translation) - min(mask.k_translation, len(result.translation))
    kept: list[TaggedToken] = []
    seen_st = seen_tt = 0
    for tok in result.interleaved:
        if tok.stream is Stream.TRANSCRIPT:
            if seen_st < keep_st:
                kept.append(tok)
            seen_st += 1
        else:
            if seen_tt < keep_tt:
                kept.append(tok)
            seen_tt += 1
    return DecodeResult(
        interleaved=tuple(kept),
        transcript=result.transcript[:keep_st],
        translation=result.translation[:keep_tt],
        score=result.score,
        masked=True,
    )
