import json
import math
import random

import pytest

from retrans.corpus import (
    PrefixAugmentConfig,
    TimedChunk,
    Utterance,
    augment_prefixes,
    chunk_by_duration,
    load_corpus,
    save_corpus,
    truncate_utterance,
)
from retrans.errors import CorpusFormatError, CorpusValidationError
from retrans.synthetic import synthetic_corpus


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadJsonl:
    def test_two_chunk_record(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = {
            "id": "u1",
            "duration_sec": 2.0,
            "transcript": ["hallo", "welt"],
            "translation": ["hello", "world"],
            "chunks": [
                {"t0": 0.0, "t1": 1.0, "tokens": ["hallo"]},
                {"t0": 1.0, "t1": 2.0, "tokens": ["welt"]},
            ],
        }
        write_lines(path, [json.dumps(rec)])
        (utt,) = load_corpus(path, "jsonl")
        assert utt.id == "u1"
        assert utt.duration_sec == 2.0
        assert utt.source_tokens == ("hallo", "welt")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_corpus(path, "jsonl") == []

    def test_reversed_chunk_times_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = {
            "id": "u1",
            "duration_sec": 1.0,
            "transcript": ["a"],
            "translation": ["b"],
            "chunks": [{"t0": 1.0, "t1": 0.0, "tokens": ["a"]}],
        }
        write_lines(path, [json.dumps(rec)])
        with pytest.raises(CorpusValidationError, match=":1:"):
            load_corpus(path, "jsonl")

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        ok = json.dumps(
            {"id": "u", "duration_sec": 1.0, "transcript": [], "translation": [],
             "chunks": [{"t0": 0.0, "t1": 1.0, "tokens": []}]}
        )
        write_lines(path, [ok, "{not json"])
        with pytest.raises(CorpusFormatError, match=":2:"):
            load_corpus(path, "jsonl")

    def test_non_contiguous_chunks_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = {
            "id": "u1",
            "duration_sec": 2.0,
            "transcript": [],
            "translation": [],
            "chunks": [
                {"t0": 0.0, "t1": 0.5, "tokens": []},
                {"t0": 1.0, "t1": 2.0, "tokens": []},
            ],
        }
        write_lines(path, [json.dumps(rec)])
        with pytest.raises(CorpusValidationError, match="contiguous"):
            load_corpus(path, "jsonl")

    def test_round_trip_through_save(self, tmp_path, small_corpus):
        path = tmp_path / "c.jsonl"
        save_corpus(small_corpus, path)
        assert load_corpus(path, "jsonl") == small_corpus


class TestLoadTsv:
    def test_basic_row(self, tmp_path):
        path = tmp_path / "c.tsv"
        write_lines(path, ["u1\t2.0\thallo welt\thello world"])
        (utt,) = load_corpus(path, "tsv")
        assert utt.transcript_ref == ("hallo", "welt")
        assert utt.translation_ref == ("hello", "world")
        assert len(utt.source_chunks) == 1
        assert utt.source_chunks[0].tokens == ("hallo", "welt")

    def test_format_inferred_from_suffix(self, tmp_path):
        path = tmp_path / "c.tsv"
        write_lines(path, ["u1\t1.0\ta\tb"])
        assert load_corpus(path)[0].id == "u1"

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "c.tsv"
        write_lines(path, ["u1\t1.0\tonly-three"])
        with pytest.raises(CorpusFormatError, match=":1:"):
            load_corpus(path, "tsv")


class TestChunkByDuration:
    def test_even_split(self):
        utt = Utterance("u", 2.0, (TimedChunk(0.0, 2.0, ("a", "b", "c", "d")),), ("a",), ("b",))
        out = chunk_by_duration(utt, 500)
        assert len(out.source_chunks) == 4
        assert out.duration_sec == 2.0

    def test_ragged_tail(self):
        utt = Utterance("u", 1.2, (TimedChunk(0.0, 1.2, ("a", "b", "c")),), (), ())
        out = chunk_by_duration(utt, 500)
        assert len(out.source_chunks) == 3
        last = out.source_chunks[-1]
        assert last.t_start == pytest.approx(1.0)
        assert last.t_end == pytest.approx(1.2)

    def test_single_chunk_identity_count(self):
        utt = Utterance("u", 1.0, (TimedChunk(0.0, 1.0, ("a",)),), (), ())
        assert len(chunk_by_duration(utt, 1000).source_chunks) == 1

    def test_zero_chunk_ms_rejected(self):
        utt = Utterance("u", 1.0, (TimedChunk(0.0, 1.0, ("a",)),), (), ())
        with pytest.raises(ValueError):
            chunk_by_duration(utt, 0)

    def test_preserves_duration_and_payload(self, small_corpus):
        for utt in small_corpus:
            for chunk_ms in (100, 250, 333, 500, 1000, 5000):
                out = chunk_by_duration(utt, chunk_ms)
                assert out.duration_sec == utt.duration_sec
                assert out.source_tokens == utt.source_tokens
                assert out.source_chunks[0].t_start == 0.0
                assert out.source_chunks[-1].t_end == utt.duration_sec

    def test_chunk_count_is_ceiling(self, small_corpus):
        for utt in small_corpus:
            out = chunk_by_duration(utt, 500)
            assert len(out.source_chunks) == math.ceil(utt.duration_sec / 0.5 - 1e-9)


class TestAugmentPrefixes:
    def test_doubles_the_corpus(self, small_corpus):
        out = augment_prefixes(small_corpus, PrefixAugmentConfig(seed=1))
        assert len(out) == 2 * len(small_corpus)

    def test_fraction_one_is_identity_copy(self, small_corpus):
        cfg = PrefixAugmentConfig(seed=0, fraction_sampler=lambda rng: 1.0)
        out = augment_prefixes(small_corpus, cfg)
        for orig, copy in zip(out[::2], out[1::2]):
            assert copy.id == orig.id + "#prefix"
            assert copy.duration_sec == orig.duration_sec
            assert copy.transcript_ref == orig.transcript_ref
            assert copy.source_chunks == orig.source_chunks

    def test_half_fraction_hand_case(self):
        # 10 tokens over 4.0 seconds; cutting at f=0.5 keeps 2.0 s and 5 tokens.
        tokens = tuple(f"t{i}" for i in range(10))
        utt = Utterance("u", 4.0, (TimedChunk(0.0, 4.0, tokens),), tokens, tokens)
        cut = truncate_utterance(utt, 0.5)
        assert cut.duration_sec == pytest.approx(2.0)
        assert cut.transcript_ref == tokens[:5]
        assert cut.translation_ref == tokens[:5]
        assert cut.source_chunks[-1].t_end == pytest.approx(2.0)

    def test_deterministic_under_seed(self, small_corpus):
        a = augment_prefixes(small_corpus, PrefixAugmentConfig(seed=42))
        b = augment_prefixes(small_corpus, PrefixAugmentConfig(seed=42))
        assert a == b
        c = augment_prefixes(small_corpus, PrefixAugmentConfig(seed=43))
        assert a != c

    def test_prefix_copies_are_true_prefixes(self, small_corpus):
        out = augment_prefixes(small_corpus, PrefixAugmentConfig(seed=5))
        for orig, copy in zip(out[::2], out[1::2]):
            assert copy.transcript_ref == orig.transcript_ref[: len(copy.transcript_ref)]
            assert copy.translation_ref == orig.translation_ref[: len(copy.translation_ref)]
            assert copy.source_tokens == orig.source_tokens[: len(copy.source_tokens)]
            assert copy.duration_sec <= orig.duration_sec
            for kept, full in zip(copy.source_chunks, orig.source_chunks):
                assert kept.t_start == full.t_start
                assert kept.t_end <= full.t_end

    def test_sampled_fraction_validated(self, small_corpus):
        cfg = PrefixAugmentConfig(fraction_sampler=lambda rng: 1.5)
        with pytest.raises(ValueError):
            augment_prefixes(small_corpus, cfg)


class TestUtteranceInvariants:
    def test_empty_token_rejected(self):
        with pytest.raises(CorpusValidationError):
            Utterance("u", 1.0, (TimedChunk(0.0, 1.0, ("a",)),), ("", "b"), ())

    def test_zero_duration_with_chunks_rejected(self):
        with pytest.raises(CorpusValidationError):
            Utterance("u", 0.0, (TimedChunk(0.0, 1.0, ()),), (), ())

    def test_chunkless_zero_duration_ok(self):
        utt = Utterance("u", 0.0, (), ("a",), ("b",))
        assert utt.source_tokens == ()

    def test_synthetic_corpus_is_valid_and_deterministic(self):
        a = synthetic_corpus(20, seed=3)
        b = synthetic_corpus(20, seed=3)
        assert a == b
        for utt in a:
            assert utt.translation_ref == tuple("v" + t[1:] for t in utt.transcript_ref)
