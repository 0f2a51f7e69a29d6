"""Evaluation suite: WER, corpus BLEU, average lag, normalized erasure,
lexical/incremental consistency, and a paired significance test.

All functions operate on pre-tokenized token sequences; no tokenization or
text normalization happens here, so scores are comparable only within this
toolkit. Consistency follows this toolkit's definition: a direction-averaged
negative-log of the best word-level translation probability between the
transcript and the translation (lower is better), with probabilities from an
EM-trained word lexicon.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .stream import FinalizationTrace, RevisionLog, erasure_per_update, finalization_times
from .schedule import Stream

Tokens = Sequence[str]

DEFAULT_FLOOR_PROB = 1e-6


# ---------------------------------------------------------------------------
# Transcription quality


def edit_distance(hyp: Tokens, ref: Tokens) -> int:
    """Minimal number of substitutions, insertions, and deletions."""
    if not hyp:
        return len(ref)
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            if r == h:
                cur[j] = prev[j - 1]
            else:
                cur[j] = 1 + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def wer(hyp: Tokens, ref: Tokens) -> float:
    """Word error rate: (S + I + D) / |ref| under a minimal edit script."""
    if not ref:
        raise ValueError("reference must not be empty")
    return edit_distance(hyp, ref) / len(ref)


# ---------------------------------------------------------------------------
# Translation quality


def _ngram_counts(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hyps: Sequence[Tokens], refs: Sequence[Tokens], max_order: int = 4) -> float:
    """Corpus-level BLEU on [0, 100].

    Geometric mean of modified 1..4-gram precisions times the brevity
    penalty ``min(1, exp(1 - r/c))`` with corpus-total lengths. No smoothing:
    a zero precision at any order gives 0.0.
    """
    if len(hyps) != len(refs):
        raise ValueError(f"got {len(hyps)} hypotheses but {len(refs)} references")
    if not hyps:
        raise ValueError("need at least one segment")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    if hyp_len == 0 or any(m == 0 for m in matches) or any(t == 0 for t in totals):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_order
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision)


# ---------------------------------------------------------------------------
# Latency


def average_lag(trace: Sequence[float], duration_sec: float, final_len: int) -> float:
    """Average lag in seconds between input consumption and token finalization.

    With g(i) the source seconds consumed when token i (1-based) finalized
    and d = duration / final_len the ideal proportional schedule::

        AL = (1 / tau) * sum_{i=1..tau} (g(i) - (i - 1) * d)

    where tau is the first index whose finalization required the full source
    (tau = final_len when none did).
    """
    if final_len < 1:
        raise ValueError("final_len must be >= 1")
    if len(trace) < final_len:
        raise ValueError(f"trace has {len(trace)} positions, needs {final_len}")
    g = list(trace[:final_len])
    d = duration_sec / final_len
    tau = final_len
    for i, gi in enumerate(g, start=1):
        if gi >= duration_sec:
            tau = i
            break
    return sum(g[i - 1] - (i - 1) * d for i in range(1, tau + 1)) / tau


# ---------------------------------------------------------------------------
# Flicker


@dataclass(frozen=True)
class ErasureReport:
    """Normalized erasure per stream and combined; None when the final output
    of a stream is empty (undefined)."""

    transcript: float | None
    translation: float | None
    combined: float | None
    erased_transcript: int = 0
    erased_translation: int = 0
    final_transcript_len: int = 0
    final_translation_len: int = 0


def normalized_erasure(log: RevisionLog) -> ErasureReport:
    """Total retracted tokens divided by final output length."""
    erased = {Stream.TRANSCRIPT: 0, Stream.TRANSLATION: 0}
    for rec in erasure_per_update(log):
        erased[rec.stream] += rec.erased_token_count
    final = log.final
    len_st = len(final.displayed_transcript)
    len_tt = len(final.displayed_translation)
    ne_st = erased[Stream.TRANSCRIPT] / len_st if len_st else None
    ne_tt = erased[Stream.TRANSLATION] / len_tt if len_tt else None
    total_len = len_st + len_tt
    combined = (erased[Stream.TRANSCRIPT] + erased[Stream.TRANSLATION]) / total_len if total_len else None
    return ErasureReport(
        transcript=ne_st,
        translation=ne_tt,
        combined=combined,
        erased_transcript=erased[Stream.TRANSCRIPT],
        erased_translation=erased[Stream.TRANSLATION],
        final_transcript_len=len_st,
        final_translation_len=len_tt,
    )


# ---------------------------------------------------------------------------
# Consistency


@dataclass(frozen=True)
class Lexicon:
    """Word-level translation probability table p(target | source)."""

    direction: str  # "src2tgt" or "tgt2src"
    probs: Mapping[str, Mapping[str, float]]
    floor_prob: float = DEFAULT_FLOOR_PROB

    def prob(self, source_word: str, target_word: str) -> float:
        return self.probs.get(source_word, {}).get(target_word, self.floor_prob)

    def best_prob(self, source_word: str, candidates: Tokens) -> float:
        row = self.probs.get(source_word, {})
        best = max((row.get(c, 0.0) for c in candidates), default=0.0)
        return max(best, self.floor_prob)


def train_lexicon(
    pairs: Sequence[tuple[Tokens, Tokens]],
    iterations: int,
    direction: str = "src2tgt",
    floor_prob: float = DEFAULT_FLOOR_PROB,
) -> Lexicon:
    """Estimate p(target | source) by expectation-maximization (Model-1 style).

    Initialization is uniform over co-occurring words; each iteration
    accumulates expected alignment counts and renormalizes per source word,
    so every row sums to 1 after every iteration. Deterministic.
    """
    if not pairs:
        raise ValueError("need at least one sentence pair")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if direction == "tgt2src":
        pairs = [(tgt, src) for src, tgt in pairs]
    elif direction != "src2tgt":
        raise ValueError(f"unknown direction {direction!r}")

    cooc: dict[str, set[str]] = defaultdict(set)
    for src, tgt in pairs:
        for s in src:
            cooc[s].update(tgt)
    probs: dict[str, dict[str, float]] = {
        s: {t: 1.0 / len(ts) for t in sorted(ts)} for s, ts in cooc.items() if ts
    }

    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = {s: defaultdict(float) for s in probs}
        for src, tgt in pairs:
            sources = [s for s in src if s in probs]
            if not sources:
                continue
            for t in tgt:
                z = sum(probs[s].get(t, 0.0) for s in sources)
                if z <= 0.0:
                    continue
                for s in sources:
                    p = probs[s].get(t, 0.0)
                    if p > 0.0:
                        counts[s][t] += p / z
        for s, row_counts in counts.items():
            total = sum(row_counts.values())
            if total > 0.0:
                probs[s] = {t: c / total for t, c in sorted(row_counts.items())}
    return Lexicon(direction=direction, probs=probs, floor_prob=floor_prob)


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    """TSV rows ``source<TAB>target<TAB>probability`` behind a declaring header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# direction={lexicon.direction}\tfloor_prob={lexicon.floor_prob!r}\n")
        for s in sorted(lexicon.probs):
            for t, p in sorted(lexicon.probs[s].items()):
                fh.write(f"{s}\t{t}\t{p!r}\n")


def load_lexicon(path: str | Path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# direction="):
            raise ValueError(f"{path}: missing lexicon header")
        fields = dict(part.split("=", 1) for part in header[2:].split("\t"))
        probs: dict[str, dict[str, float]] = defaultdict(dict)
        for line in fh:
            if not line.strip():
                continue
            s, t, p = line.rstrip("\n").split("\t")
            probs[s][t] = float(p)
    return Lexicon(
        direction=fields["direction"],
        probs=dict(probs),
        floor_prob=float(fields["floor_prob"]),
    )


def consistency(
    transcript: Tokens,
    translation: Tokens,
    lex_st: Lexicon,
    lex_ts: Lexicon,
) -> float:
    """Lexical consistency of a (transcript, translation) pair; lower is better.

    For each transcript word, take the best translation probability against
    any translation word (floored), and average the negative logs; do the
    same in the mirror direction and average the two. When one side is empty
    only the direction anchored on the nonempty side is used; two empty
    sides score 0.
    """
    def direction_score(words: Tokens, others: Tokens, lex: Lexicon) -> float:
        return sum(-math.log(lex.best_prob(w, others)) for w in words) / len(words)

    scores = []
    if transcript:
        scores.append(direction_score(transcript, translation, lex_st))
    if translation:
        scores.append(direction_score(translation, transcript, lex_ts))
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def incremental_consistency(log: RevisionLog, lex_st: Lexicon, lex_ts: Lexicon) -> float:
    """Mean consistency of the displayed pair across a session's updates.

    Updates where both streams are still empty are skipped.
    """
    if not log.updates:
        raise ValueError("log has no updates")
    scores = [
        consistency(u.displayed_transcript, u.displayed_translation, lex_st, lex_ts)
        for u in log.updates
        if u.displayed_transcript or u.displayed_translation
    ]
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Significance


@dataclass(frozen=True)
class SignificanceConfig:
    alpha: float = 0.05
    resamples: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.resamples < 1:
            raise ValueError("resamples must be >= 1")


@dataclass(frozen=True)
class SignificanceResult:
    p_value: float
    statistically_same: bool


def significance(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    cfg: SignificanceConfig | None = None,
) -> SignificanceResult:
    """Paired sign-flip randomization test on per-segment score differences.

    Under the null that the two systems are interchangeable, each paired
    difference is symmetric around zero, so random sign flips resample the
    null distribution of the mean difference. The p-value is the fraction of
    resamples whose |mean| reaches the observed |mean|; deterministic under
    the config seed.
    """
    cfg = cfg or SignificanceConfig()
    if len(scores_a) != len(scores_b):
        raise ValueError(f"paired scores differ in length: {len(scores_a)} vs {len(scores_b)}")
    if len(scores_a) < 2:
        raise ValueError("need at least 2 paired segments")
    diffs = np.asarray(scores_a, dtype=float) - np.asarray(scores_b, dtype=float)
    observed = abs(float(diffs.mean()))
    rng = np.random.default_rng(cfg.seed)
    signs = rng.integers(0, 2, size=(cfg.resamples, len(diffs))) * 2 - 1
    resampled = np.abs(signs @ diffs) / len(diffs)
    p_value = float(np.mean(resampled >= observed))
    return SignificanceResult(p_value=p_value, statistically_same=p_value >= cfg.alpha)


# ---------------------------------------------------------------------------
# Per-session and per-corpus reports


@dataclass(frozen=True)
class MetricReport:
    """Metric bundle for one session (or an aggregate); None marks metrics
    undefined for the input (e.g. lag of an empty stream)."""

    bleu: float | None
    wer: float | None
    al_translation_sec: float | None
    al_transcript_sec: float | None
    ne_transcript: float | None
    ne_translation: float | None
    ne_combined: float | None
    consistency: float | None
    incremental_consistency: float | None

    def to_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "wer": self.wer,
            "al_translation_sec": self.al_translation_sec,
            "al_transcript_sec": self.al_transcript_sec,
            "ne_transcript": self.ne_transcript,
            "ne_translation": self.ne_translation,
            "ne_combined": self.ne_combined,
            "consistency": self.consistency,
            "incremental_consistency": self.incremental_consistency,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def session_report(
    utterance,
    log: RevisionLog,
    lex_st: Lexicon | None = None,
    lex_ts: Lexicon | None = None,
) -> MetricReport:
    """Score one session against its utterance's references."""
    final = log.final
    trace = finalization_times(log)
    erasure = normalized_erasure(log)
    n_tt = len(final.displayed_translation)
    n_st = len(final.displayed_transcript)
    have_lex = lex_st is not None and lex_ts is not None
    return MetricReport(
        bleu=corpus_bleu([final.displayed_translation], [utterance.translation_ref])
        if utterance.translation_ref
        else None,
        wer=wer(final.displayed_transcript, utterance.transcript_ref)
        if utterance.transcript_ref
        else None,
        al_translation_sec=average_lag(trace.translation, utterance.duration_sec, n_tt)
        if n_tt
        else None,
        al_transcript_sec=average_lag(trace.transcript, utterance.duration_sec, n_st)
        if n_st
        else None,
        ne_transcript=erasure.transcript,
        ne_translation=erasure.translation,
        ne_combined=erasure.combined,
        consistency=consistency(final.displayed_transcript, final.displayed_translation, lex_st, lex_ts)
        if have_lex
        else None,
        incremental_consistency=incremental_consistency(log, lex_st, lex_ts) if have_lex else None,
    )


def _mean(values: Iterable[float | None]) -> float | None:
    kept = [v for v in values if v is not None]
    return sum(kept) / len(kept) if kept else None


def corpus_report(
    pairs: Sequence[tuple],
    lex_st: Lexicon | None = None,
    lex_ts: Lexicon | None = None,
) -> MetricReport:
    """Aggregate (utterance, log) pairs into one corpus-level report.

    BLEU is corpus-level, WER pools edit counts over reference length, NE
    pools erased tokens over final lengths, and the lag/consistency fields
    are means over the sessions where they are defined.
    """
    if not pairs:
        raise ValueError("no sessions to aggregate")
    hyps, refs = [], []
    edits = ref_tokens = 0
    erased = {Stream.TRANSCRIPT: 0, Stream.TRANSLATION: 0}
    final_lens = {Stream.TRANSCRIPT: 0, Stream.TRANSLATION: 0}
    al_tt, al_st, cons, inc_cons = [], [], [], []
    have_lex = lex_st is not None and lex_ts is not None
    for utt, log in pairs:
        final = log.final
        if utt.translation_ref:
            hyps.append(final.displayed_translation)
            refs.append(utt.translation_ref)
        if utt.transcript_ref:
            edits += edit_distance(final.displayed_transcript, utt.transcript_ref)
            ref_tokens += len(utt.transcript_ref)
        trace = finalization_times(log)
        if final.displayed_translation:
            al_tt.append(average_lag(trace.translation, utt.duration_sec, len(final.displayed_translation)))
        if final.displayed_transcript:
            al_st.append(average_lag(trace.transcript, utt.duration_sec, len(final.displayed_transcript)))
        er = normalized_erasure(log)
        erased[Stream.TRANSCRIPT] += er.erased_transcript
        erased[Stream.TRANSLATION] += er.erased_translation
        final_lens[Stream.TRANSCRIPT] += er.final_transcript_len
        final_lens[Stream.TRANSLATION] += er.final_translation_len
        if have_lex:
            cons.append(consistency(final.displayed_transcript, final.displayed_translation, lex_st, lex_ts))
            inc_cons.append(incremental_consistency(log, lex_st, lex_ts))
    total_final = final_lens[Stream.TRANSCRIPT] + final_lens[Stream.TRANSLATION]
    return MetricReport(
        bleu=corpus_bleu(hyps, refs) if hyps else None,
        wer=edits / ref_tokens if ref_tokens else None,
        al_translation_sec=_mean(al_tt),
        al_transcript_sec=_mean(al_st),
        ne_transcript=erased[Stream.TRANSCRIPT] / final_lens[Stream.TRANSCRIPT]
        if final_lens[Stream.TRANSCRIPT]
        else None,
        ne_translation=erased[Stream.TRANSLATION] / final_lens[Stream.TRANSLATION]
        if final_lens[Stream.TRANSLATION]
        else None,
        ne_combined=(erased[Stream.TRANSCRIPT] + erased[Stream.TRANSLATION]) / total_final
        if total_final
        else None,
        consistency=_mean(cons),
        incremental_consistency=_mean(inc_cons),
    )


def reference_pairs(utterances) -> list[tuple[Tokens, Tokens]]:
    """(transcript, translation) reference pairs for lexicon training."""
    return [(u.transcript_ref, u.translation_ref) for u in utterances]
