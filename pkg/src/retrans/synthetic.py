"""Deterministic synthetic corpora for exercising the streaming harness.

Utterances carry gold source tokens in their chunk payloads (one token per
chunk at a fixed speaking rate) and references built from a closed word
dictionary, so the built-in toy decoders produce meaningful quality scores
without any trained model.
"""

from __future__ import annotations

import random
from pathlib import Path

from .corpus import TimedChunk, Utterance

DEFAULT_VOCAB_SIZE = 40
DEFAULT_TOKEN_SEC = 0.3


def synthetic_dictionary(vocab_size: int = DEFAULT_VOCAB_SIZE) -> dict[str, str]:
    """Closed source->target word map: w00 -> v00, w01 -> v01, ..."""
    return {f"w{i:02d}": f"v{i:02d}" for i in range(vocab_size)}


def synthetic_corpus(
    n_utterances: int,
    seed: int = 0,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    min_tokens: int = 6,
    max_tokens: int = 14,
    token_sec: float = DEFAULT_TOKEN_SEC,
) -> list[Utterance]:
    """Sample utterances whose translation references are the in-order
    dictionary image of their source tokens."""
    rng = random.Random(seed)
    dictionary = synthetic_dictionary(vocab_size)
    vocab = sorted(dictionary)
    corpus = []
    for n in range(n_utterances):
        n_tok = rng.randint(min_tokens, max_tokens)
        tokens = tuple(rng.choice(vocab) for _ in range(n_tok))
        duration = n_tok * token_sec
        chunks = tuple(
            TimedChunk(i * token_sec, (i + 1) * token_sec, (tok,))
            for i, tok in enumerate(tokens)
        )
        corpus.append(
            Utterance(
                id=f"synth-{n:04d}",
                duration_sec=duration,
                source_chunks=chunks,
                transcript_ref=tokens,
                translation_ref=tuple(dictionary[t] for t in tokens),
            )
        )
    return corpus


def save_dictionary(dictionary: dict[str, str], path: str | Path) -> None:
    """Write a ``source<TAB>target`` dictionary file."""
    with open(path, "w", encoding="utf-8") as fh:
        for src in sorted(dictionary):
            fh.write(f"{src}\t{dictionary[src]}\n")


def load_dictionary(path: str | Path) -> dict[str, str]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            src, tgt = line.split("\t")
            table[src] = tgt
    return table
