"""N-gram dictionary construction, queries, and serialization."""

from __future__ import annotations

import numpy as np
import pytest

from compforge.errors import ConfigError
from compforge.ngrams import NGramDictionary, build_ngram_dictionary

from oracles import brute_force_ngram_counts


def random_corpus(rng, n_sentences=200, alphabet=6, low=3, high=10):
    tokens = [chr(ord("a") + i) for i in range(alphabet)]
    return [
        tuple(rng.choice(tokens, size=int(rng.integers(low, high))))
        for _ in range(n_sentences)
    ]


class TestBuild:
    def test_four_copies_cross_threshold(self):
        d = build_ngram_dictionary([("a", "b")] * 4, min_count=3)
        assert d.contains(["a"]) and d.contains(["b"]) and d.contains(["a", "b"])
        assert d.count(["a", "b"]) == 4

    def test_three_copies_store_nothing(self):
        d = build_ngram_dictionary([("a", "b")] * 3, min_count=3)
        assert len(d) == 0 and d.vocab_size == 0

    def test_membership_matches_brute_force_counts(self):
        rng = np.random.default_rng(42)
        corpus = random_corpus(rng)
        min_count, max_n = 3, 5
        d = build_ngram_dictionary(corpus, min_count=min_count, max_n=max_n)
        oracle = brute_force_ngram_counts(corpus, max_n)
        for gram, count in oracle.items():
            assert d.contains(gram) == (count > min_count), gram
            if count > min_count:
                assert d.count(gram) == count
        # nothing stored that the oracle never saw
        for gram, count in d.entries():
            assert oracle[gram] == count

    def test_apriori_prefix_closure(self):
        rng = np.random.default_rng(7)
        d = build_ngram_dictionary(random_corpus(rng), min_count=2, max_n=6)
        for gram, _ in d.entries():
            for cut in range(1, len(gram)):
                assert d.contains(gram[:cut]), (gram, cut)

    def test_max_n_none_unbounded(self):
        corpus = [("a", "b", "c", "d", "e", "f", "g", "h", "i", "j")] * 5
        d = build_ngram_dictionary(corpus, min_count=3, max_n=None)
        assert d.contains(list("abcdefghij"))

    def test_negative_min_count_rejected(self):
        with pytest.raises(ConfigError):
            build_ngram_dictionary([("a",)], min_count=-1)


class TestQueries:
    def fixture(self):
        return NGramDictionary.from_entries(
            [["a"], ["b"], ["a", "b"], ["b", "c", "d"]], max_n=3
        )

    def test_contains_stored_and_not_reversed(self):
        d = self.fixture()
        assert d.contains(["a", "b"])
        assert not d.contains(["b", "a"])

    def test_span_longer_than_max_n_is_false(self):
        d = build_ngram_dictionary([("a", "b", "c")] * 5, min_count=2, max_n=2)
        assert not d.contains(["a", "b", "c"])

    def test_match_lengths_simple(self):
        d = self.fixture()
        assert d.match_lengths_from(["a", "b", "x"], 0) == [1, 2]
        assert d.match_lengths_from(["z", "a"], 0) == []

    def test_match_lengths_agree_with_contains(self):
        rng = np.random.default_rng(3)
        corpus = random_corpus(rng)
        d = build_ngram_dictionary(corpus, min_count=2, max_n=4)
        for _ in range(200):
            sent = corpus[int(rng.integers(len(corpus)))]
            start = int(rng.integers(len(sent)))
            lengths = set(d.match_lengths_from(sent, start))
            for L in range(1, min(4, len(sent) - start) + 1):
                assert (L in lengths) == d.contains(sent[start : start + L])

    def test_start_out_of_range(self):
        with pytest.raises(ConfigError):
            self.fixture().match_lengths_from(["a"], 5)


class TestSerialization:
    def test_round_trip_preserves_entries(self, tmp_path):
        rng = np.random.default_rng(9)
        d = build_ngram_dictionary(random_corpus(rng), min_count=2, max_n=4)
        path = tmp_path / "d.ngix"
        d.save(path)
        loaded = NGramDictionary.load(path)
        assert list(loaded.entries()) == list(d.entries())
        assert loaded.min_count == d.min_count and loaded.max_n == d.max_n

    def test_two_builds_byte_identical(self, tmp_path):
        rng = np.random.default_rng(10)
        corpus = random_corpus(rng)
        p1, p2 = tmp_path / "a.ngix", tmp_path / "b.ngix"
        build_ngram_dictionary(corpus, min_count=2, max_n=4).save(p1)
        build_ngram_dictionary(corpus, min_count=2, max_n=4).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bad.ngix"
        path.write_bytes(b"not an index")
        with pytest.raises(Exception):
            NGramDictionary.load(path)
