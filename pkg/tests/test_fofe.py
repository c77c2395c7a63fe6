"""Encoding core: recursion values, inversion, and uniqueness checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fofe_ner.errors import DuplicateToken, MalformedCode
from fofe_ner.fofe import (FofeCode, ForgettingFactor, Vocabulary, decode,
                           encode, encode_reversed, uniqueness_check)

ABC = Vocabulary(["A", "B", "C"])


def head(code, n=3):
    return tuple(code.values[:n])


class TestForgettingFactor:
    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, 2.0])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            ForgettingFactor(bad)

    def test_behaves_as_float(self):
        a = ForgettingFactor(0.5)
        assert a * 2 == 1.0
        assert a.value == 0.5


class TestVocabulary:
    def test_bijection(self):
        v = Vocabulary(["x", "y", "z"])
        for i, tok in enumerate(v.tokens):
            assert v.lookup(tok) == i

    def test_unknown_lookup(self):
        assert ABC.lookup("nope") == ABC.unk_index

    def test_duplicate_rejected(self):
        with pytest.raises(DuplicateToken):
            Vocabulary(["x", "x"])


class TestEncode:
    def test_empty_sequence_is_zero(self):
        code = encode([], ABC, ForgettingFactor(0.5))
        assert head(code) == (0.0, 0.0, 0.0)
        assert code.length == 0

    def test_single_token_is_onehot(self):
        assert head(encode(["A"], ABC, ForgettingFactor(0.5))) == (1.0, 0.0, 0.0)

    def test_three_token_recursion(self):
        # by hand: (1,0,0) -> (0.5,1,0) -> (1.25,0.5,0)
        code = encode(["A", "B", "A"], ABC, ForgettingFactor(0.5))
        assert head(code) == (1.25, 0.5, 0.0)
        assert code.length == 3

    def test_unknown_token_hits_unk_slot(self):
        code = encode(["mystery"], ABC, ForgettingFactor(0.5))
        assert code.values[ABC.unk_index] == 1.0

    def test_sparse_view(self):
        code = encode(["A", "B", "A"], ABC, ForgettingFactor(0.5))
        idx, coef = code.sparse()
        assert list(idx) == [0, 1]
        assert list(coef) == [1.25, 0.5]


class TestEncodeReversed:
    def test_palindrome_matches_forward(self):
        a = ForgettingFactor(0.5)
        fwd = encode(["A", "B", "A"], ABC, a)
        rev = encode_reversed(["A", "B", "A"], ABC, a)
        assert np.array_equal(fwd.values, rev.values)

    def test_two_tokens(self):
        code = encode_reversed(["A", "B"], ABC, ForgettingFactor(0.5))
        assert head(code) == (1.0, 0.5, 0.0)

    def test_empty(self):
        assert not encode_reversed([], ABC, ForgettingFactor(0.5)).values.any()


class TestDecode:
    def test_onehot(self):
        code = FofeCode(np.array([1.0, 0, 0, 0]), ForgettingFactor(0.5), 1)
        assert decode(code, ABC) == ["A"]

    def test_round_trip_example(self):
        code = encode(["A", "B", "A"], ABC, ForgettingFactor(0.5))
        assert decode(code, ABC) == ["A", "B", "A"]

    def test_no_leading_component_is_malformed(self):
        code = FofeCode(np.array([0.5, 0.5, 0, 0]), ForgettingFactor(0.5), -1)
        with pytest.raises(MalformedCode):
            decode(code, ABC)

    def test_two_leading_components_is_malformed(self):
        code = FofeCode(np.array([1.0, 1.0, 0, 0]), ForgettingFactor(0.5), -1)
        with pytest.raises(MalformedCode):
            decode(code, ABC)

    def test_negative_component_is_malformed(self):
        code = FofeCode(np.array([1.0, -0.5, 0, 0]), ForgettingFactor(0.5), -1)
        with pytest.raises(MalformedCode):
            decode(code, ABC)

    def test_alpha_above_half_rejected(self):
        code = FofeCode(np.zeros(4), ForgettingFactor(0.7), 0)
        with pytest.raises(ValueError):
            decode(code, ABC)


@st.composite
def vocab_and_sequence(draw, max_vocab=20, max_len=12):
    size = draw(st.integers(1, max_vocab))
    vocab = Vocabulary.of_size(size)
    seq = draw(st.lists(st.integers(0, size - 1), max_size=max_len))
    return vocab, [vocab.tokens[i] for i in seq]


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(vocab_and_sequence(), st.sampled_from([0.1, 0.25, 0.5]))
    def test_round_trip_exact(self, vs, alpha):
        vocab, seq = vs
        assert decode(encode(seq, vocab, ForgettingFactor(alpha)), vocab) == seq

    @settings(max_examples=60, deadline=None)
    @given(vocab_and_sequence(), st.sampled_from([0.1, 0.25, 0.5, 0.8]))
    def test_mass_conservation(self, vs, alpha):
        vocab, seq = vs
        code = encode(seq, vocab, ForgettingFactor(alpha))
        expected = (1 - alpha ** len(seq)) / (1 - alpha)
        assert abs(code.values.sum() - expected) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(vocab_and_sequence(), st.sampled_from([0.1, 0.25, 0.5, 0.8]))
    def test_prefix_recursion(self, vs, alpha):
        vocab, seq = vs
        a = ForgettingFactor(alpha)
        grown = encode(seq + [vocab.tokens[0]], vocab, a)
        onehot = np.zeros(len(vocab))
        onehot[0] = 1.0
        stepped = alpha * encode(seq, vocab, a).values + onehot
        assert np.max(np.abs(grown.values - stepped)) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(vocab_and_sequence(), st.sampled_from([0.1, 0.25, 0.5, 0.8]))
    def test_reversal_consistency(self, vs, alpha):
        vocab, seq = vs
        a = ForgettingFactor(alpha)
        assert np.array_equal(encode_reversed(seq, vocab, a).values,
                              encode(seq[::-1], vocab, a).values)

    @settings(max_examples=40, deadline=None)
    @given(vocab_and_sequence(max_vocab=6, max_len=8),
           st.sampled_from([0.1, 0.25, 0.5]))
    def test_last_token_component_dominates(self, vs, alpha):
        vocab, seq = vs
        code = encode(seq, vocab, ForgettingFactor(alpha))
        assert np.all(code.values >= 0)
        if seq:
            assert np.sum(code.values >= 1.0) == 1


class TestUniqueness:
    def test_small_binary_vocab_injective(self):
        rep = uniqueness_check(2, 5, ForgettingFactor(0.5))
        assert rep.total_sequences == 63  # all lengths 0..5 over two tokens
        assert rep.collisions == []

    def test_ternary_quarter_injective(self):
        rep = uniqueness_check(3, 3, ForgettingFactor(0.25))
        assert rep.total_sequences == 40
        assert rep.collisions == []

    def test_constructed_collision_factor(self):
        # positive root of a^2 + a = 1: codes of AAB and BBA both become (1, 1)
        alpha = ForgettingFactor((math.sqrt(5) - 1) / 2)
        rep = uniqueness_check(2, 3, alpha)
        assert (("A", "A", "B"), ("B", "B", "A")) in rep.collisions
        assert len(rep.collisions) == 1
