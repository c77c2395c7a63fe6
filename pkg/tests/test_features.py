"""Feature extraction: slice values, projections, convolutions, gradients."""

import numpy as np
import pytest

from conftest import identity_embedding, tiny_extractor
from fofe_ner.errors import DimensionMismatch, FragmentTooShort
from fofe_ner.features import (CharConv, CharConvConfig, EmbeddingMatrix,
                               FeatureExtractor, Fragment, Sentence, char_conv,
                               char_vocabulary, project)
from fofe_ner.fofe import FofeCode, ForgettingFactor, Vocabulary, encode


def identity_char_embed(chars):
    """Char vocabulary over chars with one-hot rows (reserved rows zero)."""
    vocab = Vocabulary(list(chars) + ["<pad>"])
    rows = np.zeros((len(vocab), len(chars)))
    for i in range(len(chars)):
        rows[i, i] = 1.0
    return EmbeddingMatrix(vocab, rows)


class TestSentenceFragment:
    def test_lowercased_view(self):
        s = Sentence(["New", "York"])
        assert s.lower == ("new", "york")
        assert len(s.lower) == len(s.tokens)

    def test_empty_sentence_rejected(self):
        with pytest.raises(ValueError):
            Sentence([])

    @pytest.mark.parametrize("start,end", [(-1, 1), (0, 0), (1, 1), (0, 4), (2, 1)])
    def test_bad_spans_rejected(self, start, end):
        s = Sentence(["a", "b", "c"])
        with pytest.raises(ValueError):
            Fragment(s, start, end)

    def test_surface_joins_tokens(self):
        s = Sentence(["New", "York"])
        assert Fragment(s, 0, 2).surface == "New York"


class TestProject:
    def test_zero_code(self):
        m = identity_embedding(["a", "b", "c"])
        code = FofeCode(np.zeros(4), ForgettingFactor(0.5), 0)
        assert not project(code, m).any()

    def test_onehot_selects_row(self):
        rng = np.random.default_rng(0)
        vocab = Vocabulary(["a", "b", "c"])
        m = EmbeddingMatrix(vocab, rng.normal(size=(4, 5)))
        onehot = np.zeros(4)
        onehot[1] = 1.0
        assert np.array_equal(project(onehot, m), m.rows[1])

    def test_weighted_sum(self):
        rng = np.random.default_rng(1)
        vocab = Vocabulary(["a", "b", "c"])
        m = EmbeddingMatrix(vocab, rng.normal(size=(4, 5)))
        vec = np.array([0.5, 1.0, 0.0, 0.0])
        expected = 0.5 * m.rows[0] + m.rows[1]
        assert np.allclose(project(vec, m), expected, atol=1e-15)

    def test_dimension_mismatch(self):
        m = identity_embedding(["a", "b"])
        with pytest.raises(DimensionMismatch):
            project(np.zeros(7), m)

    def test_linearity(self):
        rng = np.random.default_rng(2)
        vocab = Vocabulary.of_size(6)
        m = EmbeddingMatrix(vocab, rng.normal(size=(7, 4)))
        x, y = rng.normal(size=7), rng.normal(size=7)
        lhs = project(2.5 * x - 1.25 * y, m)
        rhs = 2.5 * project(x, m) - 1.25 * project(y, m)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


class TestCharFofeSlices:
    def test_single_char_both_directions(self):
        ce = identity_char_embed(["A", "B"])
        conv = CharConv.init(CharConvConfig(filter_widths=(1,), filters_per_width=1,
                                            char_embed_dim=2), seed=0)
        ex = FeatureExtractor(identity_embedding(["A"]), identity_embedding(["a"]),
                              ce, conv, alpha_char=0.8)
        frag = Fragment(Sentence(["A"]), 0, 1)
        feats = ex.fragment_features(frag)
        assert tuple(feats["char_l2r"]) == (1.0, 0.0)
        assert tuple(feats["char_r2l"]) == (1.0, 0.0)

    def test_two_chars_decay(self):
        ce = identity_char_embed(["A", "B"])
        conv = CharConv.init(CharConvConfig(filter_widths=(1,), filters_per_width=1,
                                            char_embed_dim=2), seed=0)
        ex = FeatureExtractor(identity_embedding(["AB"]), identity_embedding(["ab"]),
                              ce, conv, alpha_char=0.8)
        frag = Fragment(Sentence(["AB"]), 0, 1)
        feats = ex.fragment_features(frag)
        # recursion by hand: l2r (0.8, 1), r2l (1, 0.8)
        assert np.allclose(feats["char_l2r"], [0.8, 1.0], atol=1e-15)
        assert np.allclose(feats["char_r2l"], [1.0, 0.8], atol=1e-15)


class TestBagOfWords:
    def test_two_token_fragment_sums_onehots(self):
        ex = tiny_extractor(word_tokens=("New", "York", "in"))
        frag = Fragment(Sentence(["New", "York"]), 0, 2)
        feats = ex.fragment_features(frag)
        assert np.array_equal(feats["bow_cased"], [1.0, 1.0, 0.0])

    def test_counts_not_binary(self):
        ex = tiny_extractor(word_tokens=("very", "deep"))
        frag = Fragment(Sentence(["very", "very", "deep"]), 0, 3)
        feats = ex.fragment_features(frag)
        assert np.array_equal(feats["bow_cased"], [2.0, 1.0])

    def test_order_free(self):
        ex = tiny_extractor(word_tokens=("x", "y"))
        a = ex.fragment_features(Fragment(Sentence(["x", "y"]), 0, 2))
        b = ex.fragment_features(Fragment(Sentence(["y", "x"]), 0, 2))
        assert np.array_equal(a["bow_cased"], b["bow_cased"])


class TestContextFeatures:
    def setup_method(self):
        self.ex = tiny_extractor(word_tokens=("a", "b", "c"))
        self.sentence = Sentence(["a", "b", "c"])

    def test_middle_fragment_codes(self):
        vocab = self.ex.word_cased.vocab
        feats = self.ex.context_features(Fragment(self.sentence, 1, 2))
        a = ForgettingFactor(0.5)
        left_incl = encode(["a", "b"], vocab, a).values[:3]
        right_incl = encode(["c", "b"], vocab, a).values[:3]
        assert np.array_equal(feats["left_incl_cased"], left_incl)
        assert np.array_equal(feats["right_incl_cased"], right_incl)
        assert np.array_equal(feats["left_excl_cased"], [1.0, 0.0, 0.0])
        assert np.array_equal(feats["right_excl_cased"], [0.0, 0.0, 1.0])

    def test_whole_sentence_fragment_has_empty_contexts(self):
        feats = self.ex.context_features(Fragment(self.sentence, 0, 3))
        assert not feats["left_excl_cased"].any()
        assert not feats["right_excl_cased"].any()

    def test_lowercase_text_cased_equals_uncased(self):
        # identical matrices + all-lowercase text: the two forms agree
        feats = self.ex.context_features(Fragment(self.sentence, 1, 2))
        for name in ("left_excl", "left_incl", "right_excl", "right_incl"):
            assert np.array_equal(feats[f"{name}_cased"], feats[f"{name}_uncased"])


class TestLocality:
    def test_fragment_swap_leaves_excluding_context_alone(self):
        ex = tiny_extractor(word_tokens=("a", "b", "c", "d"))
        before = ex.extract(Fragment(Sentence(["a", "b", "c"]), 1, 2))
        after = ex.extract(Fragment(Sentence(["a", "d", "c"]), 1, 2))
        for name in ("left_excl_cased", "right_excl_cased",
                     "left_excl_uncased", "right_excl_uncased"):
            sl = ex.context_slices[name]
            assert np.array_equal(before.context_group[sl], after.context_group[sl])
        assert not np.array_equal(before.fragment_group, after.fragment_group)
        incl = ex.context_slices["left_incl_cased"]
        assert not np.array_equal(before.context_group[incl],
                                  after.context_group[incl])


class TestSliceAccounting:
    def test_slices_tile_both_groups(self):
        ex = tiny_extractor()
        bundle = ex.extract(Fragment(Sentence(["a", "b", "c"]), 0, 2))
        for slices, group in ((ex.fragment_slices, bundle.fragment_group),
                              (ex.context_slices, bundle.context_group)):
            offset = 0
            rebuilt = []
            for name, sl in slices.items():
                assert sl.start == offset
                offset = sl.stop
                rebuilt.append(group[sl])
            assert offset == len(group)
            assert np.array_equal(np.concatenate(rebuilt), group)


class TestDeterminism:
    def test_repeat_extraction_bit_identical(self):
        ex = tiny_extractor()
        frag = Fragment(Sentence(["a", "b", "c"]), 0, 2)
        b1, b2 = ex.extract(frag), ex.extract(frag)
        assert np.array_equal(b1.fragment_group, b2.fragment_group)
        assert np.array_equal(b1.context_group, b2.context_group)


class TestCharConv:
    def test_width_one_all_ones_filter_is_per_char_max(self):
        ce = identity_char_embed(["A", "B"])
        cfg = CharConvConfig(filter_widths=(1,), filters_per_width=1, char_embed_dim=2)
        conv = CharConv(cfg, {1: np.ones((1, 2))}, {1: np.zeros(1)})
        out = char_conv("AB", ce, conv)
        # each window is a one-hot; dot with ones = 1 everywhere
        assert out.shape == (1,)
        assert out[0] == 1.0

    def test_zero_filters_give_zero_output(self):
        ce = identity_char_embed(["A", "B"])
        cfg = CharConvConfig(filter_widths=(2,), filters_per_width=3, char_embed_dim=2)
        conv = CharConv(cfg, {2: np.zeros((3, 4))}, {2: np.zeros(3)})
        assert not char_conv("AB", ce, conv).any()

    def test_two_char_window_hand_product(self):
        ce = identity_char_embed(["A", "B"])
        cfg = CharConvConfig(filter_widths=(2,), filters_per_width=1, char_embed_dim=2)
        weights = np.array([[0.25, -1.0, 0.5, 2.0]])
        conv = CharConv(cfg, {2: weights}, {2: np.array([0.1])})
        # single window: embedded "AB" flattens to (1, 0, 0, 1)
        expected = max(0.0, 0.25 * 1 + 2.0 * 1 + 0.1)
        assert char_conv("AB", ce, conv)[0] == pytest.approx(expected, abs=1e-15)

    def test_short_string_padded_by_default(self):
        ce = identity_char_embed(["A", "B"])
        cfg = CharConvConfig(filter_widths=(3,), filters_per_width=2, char_embed_dim=2)
        conv = CharConv.init(cfg, seed=0)
        out = char_conv("A", ce, conv)
        assert out.shape == (2,)

    def test_short_string_raises_without_padding(self):
        ce = identity_char_embed(["A", "B"])
        cfg = CharConvConfig(filter_widths=(3,), filters_per_width=2,
                             char_embed_dim=2, pad=False)
        conv = CharConv.init(cfg, seed=0)
        with pytest.raises(FragmentTooShort):
            char_conv("A", ce, conv)


class TestGradients:
    def test_projection_and_conv_match_finite_differences(self):
        """Loss = fixed random linear functional of the feature matrices;
        analytic parameter gradients vs central differences, step 1e-4."""
        ex = tiny_extractor(word_tokens=("alpha", "beta", "gamma"),
                            char_tokens=tuple("alphbetgm"), seed=3)
        sent = Sentence(["alpha", "beta", "gamma"])
        frags = [Fragment(sent, 0, 1), Fragment(sent, 1, 3)]
        codes = [ex.codes(f) for f in frags]
        rng = np.random.default_rng(11)
        gF = rng.normal(size=(2, ex.fragment_dim))
        gC = rng.normal(size=(2, ex.context_dim))

        def scalar_loss():
            batch = ex.materialize(codes)
            return float((gF * batch.fragment).sum() + (gC * batch.context).sum())

        batch = ex.materialize(codes, train=True)
        grads = {k: np.zeros_like(v) for k, v in ex.parameters().items()}
        ex.backward(batch, gF, gC, grads)

        h = 1e-4
        params = ex.parameters()
        for name, arr in params.items():
            flat = arr.ravel()
            picks = rng.choice(flat.size, size=min(6, flat.size), replace=False)
            for i in picks:
                old = flat[i]
                flat[i] = old + h
                lp = scalar_loss()
                flat[i] = old - h
                lm = scalar_loss()
                flat[i] = old
                num = (lp - lm) / (2 * h)
                ana = grads[name].ravel()[i]
                denom = max(abs(num), abs(ana), 1e-6)
                assert abs(num - ana) / denom < 1e-4, (name, i, num, ana)


class TestBatchedVsSingle:
    def test_batch_materialization_matches_per_candidate(self):
        ex = tiny_extractor(word_tokens=("a", "b", "c", "d"))
        sent = Sentence(["a", "b", "c", "d"])
        frags = [Fragment(sent, 0, 1), Fragment(sent, 1, 3), Fragment(sent, 2, 4)]
        batch = ex.materialize([ex.codes(f) for f in frags])
        for i, f in enumerate(frags):
            single = ex.extract(f)
            assert np.array_equal(batch.fragment[i], single.fragment_group)
            assert np.array_equal(batch.context[i], single.context_group)
