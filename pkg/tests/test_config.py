"""Configuration files, profiles, and override precedence."""

from pathlib import Path

import pytest

from fofe_ner.config import PROFILES, RunConfig, parse_config_file, resolve_config
from fofe_ner.pipeline import LabelSet

# reference values: (lr, fragment width, context width, shared width,
#                    fragment depth, context depth, shared depth)
REFERENCE = {
    "conll2003":     (0.256, 412, 512, 512, 2, 2, 1),
    "ontonotes-eng": (0.128, 412, 412, 612, 2, 2, 1),
    "ontonotes-zh":  (0.128, 512, 512, 512, 2, 2, 2),
    "conll2002":     (0.126, 412, 512, 512, 2, 2, 1),
    "kbp-eng":       (0.128, 512, 412, 512, 2, 3, 1),
    "kbp-cmn":       (0.128, 512, 512, 512, 2, 2, 1),
    "kbp-spa":       (0.064, 412, 412, 512, 2, 2, 1),
}


class TestProfiles:
    @pytest.mark.parametrize("name", sorted(REFERENCE))
    def test_profile_matches_reference_values(self, name):
        cfg = resolve_config(profile=name)
        lr, frag, ctx, shared, fd, cd, sd = REFERENCE[name]
        assert cfg.learning_rate == lr
        assert cfg.fragment_layers == frag
        assert cfg.context_layers == ctx
        assert cfg.shared_layers == shared
        assert (cfg.fragment_depth, cfg.context_depth, cfg.shared_depth) == (fd, cd, sd)
        assert cfg.char_embed_dim == 64

    def test_chinese_profiles_use_character_tokenization(self):
        assert resolve_config(profile="ontonotes-zh").tokenization == "character"
        assert resolve_config(profile="kbp-cmn").tokenization == "character"
        assert resolve_config(profile="conll2003").tokenization == "word"

    def test_unknown_profile(self):
        with pytest.raises(KeyError):
            resolve_config(profile="imaginary")

    def test_all_profiles_construct(self):
        for name in PROFILES:
            resolve_config(profile=name)

    def test_shipped_ontonotes_label_list(self):
        path = Path(__file__).parent.parent / "data" / "ontonotes.labels"
        classes = [l.strip() for l in path.read_text().splitlines() if l.strip()]
        assert len(classes) == 18
        label_set = LabelSet(classes)  # distinct, NONE-free, constructible
        assert label_set.classes[-1] == "NONE"


class TestConfigFile:
    def test_parse_basic(self):
        values = parse_config_file(
            "# comment\nlearning_rate = 0.01\nmax_epochs = 3\n\n"
            "tokenization = character  # inline\n")
        assert values == {"learning_rate": 0.01, "max_epochs": 3,
                          "tokenization": "character"}

    def test_unknown_key(self):
        with pytest.raises(KeyError):
            parse_config_file("learning_rte = 0.01\n")

    def test_missing_equals(self):
        with pytest.raises(ValueError):
            parse_config_file("learning_rate 0.01\n")

    def test_precedence_file_over_profile_override_over_file(self):
        cfg = resolve_config(profile="conll2003",
                             file_text="learning_rate = 0.5\nseed = 3\n",
                             overrides={"seed": "11"})
        assert cfg.learning_rate == 0.5   # file beats profile
        assert cfg.seed == 11             # override beats file
        assert cfg.fragment_layers == 412  # profile survives elsewhere

    def test_bad_tokenization_rejected(self):
        with pytest.raises(ValueError):
            resolve_config(overrides={"tokenization": "syllable"})


class TestTrainingView:
    def test_training_config_mirrors_run_config(self):
        run = RunConfig(learning_rate=0.02, momentum=0.8, batch_size=16,
                        dropout=0.25, max_epochs=7, patience=2,
                        neg_ratio=3.0, seed=42, alpha_word=0.4, alpha_char=0.7)
        t = run.training()
        assert t.learning_rate == 0.02
        assert t.momentum == 0.8
        assert t.batch_size == 16
        assert t.dropout == 0.25
        assert t.max_epochs == 7
        assert t.patience == 2
        assert t.neg_ratio == 3.0
        assert t.seed == 42
        assert t.alpha_word == 0.4
        assert t.alpha_char == 0.7
