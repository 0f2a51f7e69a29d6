"""Token-level scheduling between the transcript and translation streams.

Joint generation emits one token at a time into one of two streams. The
stream for the next token is chosen by comparing weighted counts of what
has been emitted so far: with interleaving ratio ``gamma``, the next token
is a transcript token iff

    (1 - gamma) * (1 + count_translation) > gamma * (1 + count_transcript)

``gamma=0`` yields the full transcript followed by the full translation,
``gamma=1`` the reverse, and intermediate values alternate so that the
transcript receives a ``(1 - gamma)`` share of the emitted tokens (drift
from that share never exceeds one token while both streams are live).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import RetransError


class Stream(str, Enum):
    TRANSCRIPT = "transcript"
    TRANSLATION = "translation"

    def other(self) -> "Stream":
        return Stream.TRANSLATION if self is Stream.TRANSCRIPT else Stream.TRANSCRIPT


@dataclass(frozen=True)
class InterleavePolicy:
    """Interleaving ratio in [0, 1]; 0 = transcript first, 1 = translation first."""

    gamma: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


@dataclass
class ScheduleState:
    """Mutable per-session counters; done flags are monotone."""

    count_st: int = 0
    count_tt: int = 0
    st_done: bool = False
    tt_done: bool = False

    def advance(self, stream: Stream) -> None:
        if stream is Stream.TRANSCRIPT:
            self.count_st += 1
        else:
            self.count_tt += 1

    def mark_done(self, stream: Stream) -> None:
        if stream is Stream.TRANSCRIPT:
            self.st_done = True
        else:
            self.tt_done = True

    def is_done(self, stream: Stream) -> bool:
        return self.st_done if stream is Stream.TRANSCRIPT else self.tt_done


@dataclass(frozen=True)
class TaggedToken:
    """One emitted token, tagged with its stream and language."""

    text: str
    stream: Stream
    lang: str


class ScheduleExhaustedError(RetransError):
    """next_stream called after both streams finished."""


def next_stream(state: ScheduleState, policy: InterleavePolicy) -> Stream:
    """Pick the stream for the next token.

    The strict inequality is taken literally, so an exact tie (observable at
    gamma=0.5 on the first token) selects the translation stream. A finished
    stream is never returned: the choice falls through to the other one.
    """
    if state.st_done and state.tt_done:
        raise ScheduleExhaustedError("both streams are done; nothing left to schedule")
    gamma = policy.gamma
    wants_transcript = (1.0 - gamma) * (1 + state.count_tt) > gamma * (1 + state.count_st)
    choice = Stream.TRANSCRIPT if wants_transcript else Stream.TRANSLATION
    if state.is_done(choice):
        return choice.other()
    return choice


def interleave(
    transcript: list[str] | tuple[str, ...],
    translation: list[str] | tuple[str, ...],
    policy: InterleavePolicy,
    transcript_lang: str = "src",
    translation_lang: str = "tgt",
) -> list[TaggedToken]:
    """Merge the two streams into one tagged sequence in generation order."""
    state = ScheduleState()
    out: list[TaggedToken] = []
    it_st, it_tt = iter(transcript), iter(translation)
    if not transcript:
        state.mark_done(Stream.TRANSCRIPT)
    if not translation:
        state.mark_done(Stream.TRANSLATION)
    remaining_st, remaining_tt = len(transcript), len(translation)
    while not (state.st_done and state.tt_done):
        choice = next_stream(state, policy)
        if choice is Stream.TRANSCRIPT:
            out.append(TaggedToken(next(it_st), Stream.TRANSCRIPT, transcript_lang))
            remaining_st -= 1
            if remaining_st == 0:
                state.mark_done(Stream.TRANSCRIPT)
        else:
            out.append(TaggedToken(next(it_tt), Stream.TRANSLATION, translation_lang))
            remaining_tt -= 1
            if remaining_tt == 0:
                state.mark_done(Stream.TRANSLATION)
        state.advance(choice)
    return out


def deinterleave(tokens: list[TaggedToken] | tuple[TaggedToken, ...]) -> tuple[list[str], list[str]]:
    """Stable partition of a tagged sequence back into (transcript, translation)."""
    transcript = [t.text for t in tokens if t.stream is Stream.TRANSCRIPT]
    translation = [t.text for t in tokens if t.stream is Stream.TRANSLATION]
    return transcript, translation
