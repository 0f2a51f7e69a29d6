import itertools
import math
import random

import numpy as np
import pytest

from retrans.metrics import (
    Lexicon,
    SignificanceConfig,
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
from retrans.stream import SessionConfig
from tests.test_stream import make_log


class TestWer:
    def test_identity(self):
        assert wer(["a", "b", "c"], ["a", "b", "c"]) == 0.0

    def test_one_substitution(self):
        assert wer(["a", "x", "c"], ["a", "b", "c"]) == pytest.approx(1 / 3)

    def test_single_deletion(self):
        assert wer([], ["a"]) == 1.0

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            wer(["a"], [])

    def test_insertion_counts(self):
        assert wer(["a", "b", "c"], ["a", "c"]) == pytest.approx(0.5)

    def test_against_recursive_oracle_sampled(self):
        # The exhaustive sweep over all <=6-length pairs runs in the
        # acceptance suite; sample the same domain here.
        def oracle(a, b):
            if not a:
                return len(b)
            if not b:
                return len(a)
            return min(
                oracle(a[1:], b[1:]) + (a[0] != b[0]),
                oracle(a[1:], b) + 1,
                oracle(a, b[1:]) + 1,
            )

        rng = random.Random(5)
        for _ in range(200):
            hyp = tuple(rng.choice("abc") for _ in range(rng.randrange(0, 7)))
            ref = tuple(rng.choice("abc") for _ in range(rng.randrange(1, 7)))
            assert edit_distance(hyp, ref) == oracle(hyp, ref)


class TestCorpusBleu:
    def test_identity_is_100(self):
        hyps = [["a", "b", "c", "d"], ["e", "f", "g", "h", "i"]]
        assert corpus_bleu(hyps, hyps) == pytest.approx(100.0)

    def test_hand_derived_brevity_case(self):
        score = corpus_bleu([["a", "b", "c", "d"]], [["a", "b", "c", "d", "e"]])
        assert score == pytest.approx(100.0 * math.exp(-0.25), abs=1e-9)
        assert score == pytest.approx(77.88, abs=0.01)

    def test_no_fourgram_match_gives_zero(self):
        assert corpus_bleu([["a", "b", "c", "d"]], [["a", "x", "c", "y"]]) == 0.0

    def test_permutation_invariant(self):
        rng = random.Random(2)
        hyps = [[rng.choice("abcd") for _ in range(rng.randrange(3, 9))] for _ in range(12)]
        refs = [[rng.choice("abcd") for _ in range(rng.randrange(4, 9))] for _ in range(12)]
        base = corpus_bleu(hyps, refs)
        order = list(range(12))
        rng.shuffle(order)
        assert corpus_bleu([hyps[i] for i in order], [refs[i] for i in order]) == pytest.approx(base)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            corpus_bleu([["a"]], [["a"], ["b"]])

    def test_100_only_on_identity(self):
        assert corpus_bleu([["a", "b", "c", "d", "x"]], [["a", "b", "c", "d", "y"]]) < 100.0


class TestAverageLag:
    def test_hand_derived_two_seconds(self):
        assert average_lag([2, 4, 6, 8, 10], 10.0, 5) == pytest.approx(2.0)

    def test_proportional_oracle_is_zero(self):
        duration, n = 12.0, 6
        d = duration / n
        g = [(i - 1) * d for i in range(1, n + 1)]
        assert average_lag(g, duration, n) == pytest.approx(0.0)

    def test_wait_until_end_equals_duration(self):
        assert average_lag([7.0, 7.0, 7.0], 7.0, 3) == pytest.approx(7.0)

    def test_zero_final_len_rejected(self):
        with pytest.raises(ValueError):
            average_lag([], 1.0, 0)

    def test_translation_equivariance_with_tau_fixed(self):
        rng = random.Random(8)
        duration = 100.0
        for _ in range(50):
            n = rng.randrange(1, 12)
            g = sorted(rng.uniform(0.0, 20.0) for _ in range(n))
            c = rng.uniform(0.0, 20.0)
            base = average_lag(g, duration, n)
            shifted = average_lag([gi + c for gi in g], duration, n)
            assert shifted == pytest.approx(base + c)


class TestNormalizedErasure:
    def test_hand_derived_third(self):
        log = make_log([(1.0, [], ["a", "b"]), (2.0, [], ["a", "c"]), (3.0, [], ["a", "c", "d"])])
        report = normalized_erasure(log)
        assert report.translation == pytest.approx(1 / 3)

    def test_monotone_session_is_zero(self):
        log = make_log([(1.0, ["a"], ["x"]), (2.0, ["a", "b"], ["x", "y"])])
        report = normalized_erasure(log)
        assert report.transcript == 0.0
        assert report.translation == 0.0
        assert report.combined == 0.0

    def test_empty_final_stream_undefined(self):
        log = make_log([(1.0, ["a"], []), (2.0, [], [])])
        report = normalized_erasure(log)
        assert report.transcript is None
        assert report.translation is None
        assert report.combined is None
        assert report.erased_transcript == 1

    def test_combined_pools_both_streams(self):
        log = make_log([(1.0, ["a", "b"], ["x"]), (2.0, ["a", "c"], ["y", "z"])])
        report = normalized_erasure(log)
        assert report.transcript == pytest.approx(1 / 2)
        assert report.translation == pytest.approx(1 / 2)
        assert report.combined == pytest.approx(2 / 4)


class TestTrainLexicon:
    def test_unambiguous_pairs_converge(self):
        pairs = [(("hund",), ("dog",)), (("katze",), ("cat",))]
        lex = train_lexicon(pairs, 10)
        assert lex.prob("hund", "dog") > 0.99
        assert lex.prob("katze", "cat") > 0.99

    def test_rows_sum_to_one_every_iteration(self):
        rng = random.Random(4)
        vocab_s = [f"s{i}" for i in range(6)]
        vocab_t = [f"t{i}" for i in range(6)]
        pairs = [
            (
                tuple(rng.choice(vocab_s) for _ in range(rng.randrange(1, 5))),
                tuple(rng.choice(vocab_t) for _ in range(rng.randrange(1, 5))),
            )
            for _ in range(20)
        ]
        for iterations in range(1, 6):
            lex = train_lexicon(pairs, iterations)
            for s, row in lex.probs.items():
                assert sum(row.values()) == pytest.approx(1.0, abs=1e-6)
                assert all(p >= 0 for p in row.values())

    def test_symmetric_pair(self):
        pairs = [(("a", "b"), ("a", "b"))]
        lex = train_lexicon(pairs, 5)
        assert lex.prob("a", "b") == pytest.approx(lex.prob("b", "a"))

    def test_unseen_word_gets_floor(self):
        lex = train_lexicon([(("a",), ("b",))], 2)
        assert lex.prob("zzz", "b") == lex.floor_prob
        assert lex.prob("a", "zzz") == lex.floor_prob

    def test_deterministic(self):
        pairs = [(("a", "b"), ("x", "y")), (("b", "c"), ("y", "z"))]
        assert train_lexicon(pairs, 7).probs == train_lexicon(pairs, 7).probs

    def test_zero_iterations_rejected(self):
        with pytest.raises(ValueError):
            train_lexicon([(("a",), ("b",))], 0)

    def test_tsv_round_trip(self, tmp_path):
        lex = train_lexicon([(("a", "b"), ("x", "y")), (("b",), ("y",))], 4)
        path = tmp_path / "lex.tsv"
        save_lexicon(lex, path)
        loaded = load_lexicon(path)
        assert loaded.direction == lex.direction
        assert loaded.floor_prob == lex.floor_prob
        for s, row in lex.probs.items():
            for t, p in row.items():
                assert loaded.prob(s, t) == pytest.approx(p, rel=1e-12)


def perfect_lexicon(mapping, floor=1e-6):
    st = Lexicon("src2tgt", {s: {t: 1.0} for s, t in mapping.items()}, floor)
    ts = Lexicon("tgt2src", {t: {s: 1.0} for s, t in mapping.items()}, floor)
    return st, ts


class TestConsistency:
    def test_perfectly_consistent_pair_scores_zero(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog"})
        assert consistency(["hund"], ["dog"], lex_st, lex_ts) == pytest.approx(0.0)

    def test_missing_target_hits_floor(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog"})
        floor_term = -math.log(lex_st.floor_prob)
        score = consistency(["hund"], ["cat"], lex_st, lex_ts)
        assert score == pytest.approx(floor_term)

    def test_two_word_hand_case(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog", "katze": "cat"})
        floor_term = -math.log(lex_st.floor_prob)
        # transcript side: hund matches (0), katze hits the floor.
        # translation side: dog matches (0).
        expected = ((0.0 + floor_term) / 2 + 0.0) / 2
        assert consistency(["hund", "katze"], ["dog"], lex_st, lex_ts) == pytest.approx(expected)

    def test_both_empty_is_zero(self):
        lex_st, lex_ts = perfect_lexicon({"a": "b"})
        assert consistency([], [], lex_st, lex_ts) == 0.0

    def test_one_empty_side_uses_nonempty_direction(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog"})
        floor_term = -math.log(lex_st.floor_prob)
        assert consistency(["hund"], [], lex_st, lex_ts) == pytest.approx(floor_term)


class TestIncrementalConsistency:
    def test_single_update_equals_plain(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog"})
        log = make_log([(1.0, ["hund"], ["dog"])])
        plain = consistency(["hund"], ["dog"], lex_st, lex_ts)
        assert incremental_consistency(log, lex_st, lex_ts) == pytest.approx(plain)

    def test_mean_over_updates(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog"})
        x = consistency(["hund"], ["cat"], lex_st, lex_ts)
        log = make_log(
            [(1.0, ["hund"], ["dog"]), (2.0, ["hund"], ["cat"]), (3.0, ["hund"], ["cat"])]
        )
        assert incremental_consistency(log, lex_st, lex_ts) == pytest.approx((0 + x + x) / 3)

    def test_all_empty_updates_skipped(self):
        lex_st, lex_ts = perfect_lexicon({"hund": "dog"})
        log = make_log([(1.0, [], []), (2.0, ["hund"], ["dog"])])
        assert incremental_consistency(log, lex_st, lex_ts) == pytest.approx(0.0)


class TestSignificance:
    def test_identical_inputs_p_one(self):
        scores = [1.0, 2.0, 3.0, 4.0]
        result = significance(scores, scores)
        assert result.p_value == 1.0
        assert result.statistically_same

    def test_constant_difference_rejected(self):
        a = [1.0] * 30
        b = [0.0] * 30
        result = significance(a, b, SignificanceConfig(seed=3))
        assert result.p_value < 0.05
        assert not result.statistically_same

    def test_deterministic_under_seed(self):
        rng = random.Random(1)
        a = [rng.gauss(0, 1) for _ in range(40)]
        b = [rng.gauss(0, 1) for _ in range(40)]
        r1 = significance(a, b, SignificanceConfig(seed=9))
        r2 = significance(a, b, SignificanceConfig(seed=9))
        assert r1 == r2

    def test_swap_invariant(self):
        rng = random.Random(6)
        a = [rng.gauss(0, 1) for _ in range(25)]
        b = [rng.gauss(0.3, 1) for _ in range(25)]
        cfg = SignificanceConfig(seed=21)
        assert significance(a, b, cfg).p_value == significance(b, a, cfg).p_value

    def test_shift_invariant(self):
        rng = random.Random(10)
        a = [rng.gauss(0, 1) for _ in range(25)]
        b = [rng.gauss(0.2, 1) for _ in range(25)]
        cfg = SignificanceConfig(seed=2)
        base = significance(a, b, cfg).p_value
        shifted = significance([x + 5.0 for x in a], [x + 5.0 for x in b], cfg).p_value
        assert shifted == base

    def test_same_distribution_calibration(self):
        # Two independent draws from the same distribution should usually be
        # judged statistically the same; with alpha=0.05 the false-alarm rate
        # is about 5%, so demand >= 90% overseeded trials.
        master = np.random.default_rng(1234)
        same = 0
        trials = 50
        for trial in range(trials):
            a = master.normal(0.0, 1.0, size=100)
            b = master.normal(0.0, 1.0, size=100)
            result = significance(a, b, SignificanceConfig(seed=trial))
            same += result.statistically_same
        assert same >= 0.9 * trials

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            significance([1.0, 2.0], [1.0])


class TestReports:
    def test_session_report_fields(self, small_corpus, reorder_decoder):
        from retrans.decode import MaskPolicy
        from retrans.stream import run_session
        from retrans.metrics import reference_pairs

        utt = small_corpus[0]
        log = run_session(utt, reorder_decoder, SessionConfig(mask=MaskPolicy.uniform(1), free_tokens=2))
        pairs = reference_pairs(small_corpus)
        lex_st = train_lexicon(pairs, 5)
        lex_ts = train_lexicon(pairs, 5, "tgt2src")
        report = session_report(utt, log, lex_st, lex_ts)
        d = report.to_dict()
        assert set(d) == {
            "bleu", "wer", "al_translation_sec", "al_transcript_sec", "ne_transcript",
            "ne_translation", "ne_combined", "consistency", "incremental_consistency",
        }
        assert 0.0 <= d["bleu"] <= 100.0
        assert d["wer"] >= 0.0
        assert d["ne_combined"] >= 0.0

    def test_corpus_report_aggregates(self, small_corpus, echo_decoder):
        from retrans.stream import run_session

        pairs = [(u, run_session(u, echo_decoder, SessionConfig())) for u in small_corpus]
        report = corpus_report(pairs)
        # The plain echo decoder is perfect and monotone on the synthetic corpus.
        assert report.bleu == pytest.approx(100.0)
        assert report.wer == 0.0
        assert report.ne_combined == 0.0
        assert report.al_translation_sec > 0.0
