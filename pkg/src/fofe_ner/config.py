"""Run configuration: flat key/value config files, named hyper-parameter
profiles, and command-line overrides.

Precedence, lowest to highest: built-in defaults, profile, config file,
explicit overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .training import TrainingConfig


@dataclass
class RunConfig:
    learning_rate: float = 0.128
    momentum: float = 0.9
    batch_size: int = 128
    dropout: float = 0.5
    decay_factor: float = 1.0 / 16.0
    max_epochs: int = 50
    patience: int = 5
    alpha_word: float = 0.5
    alpha_char: float = 0.8
    max_fragment_len: int = 7
    threshold: float = 0.5
    fragment_layers: int = 512     # layer width of the fragment stack
    context_layers: int = 512      # layer width of the context stack
    shared_layers: int = 512       # layer width of the shared stack
    fragment_depth: int = 2
    context_depth: int = 2
    shared_depth: int = 1
    char_embed_dim: int = 64
    conv_filters: int = 32
    neg_ratio: float = 2.0
    seed: int = 0
    tokenization: str = "word"     # word | character
    train_file: str = ""
    dev_file: str = ""
    test_file: str = ""
    embeddings_file: str = ""
    labels_file: str = ""          # optional: one class name per line

    def __post_init__(self):
        if self.tokenization not in ("word", "character"):
            raise ValueError(f"tokenization must be word or character, "
                             f"got {self.tokenization!r}")
        for name in ("fragment_layers", "context_layers", "shared_layers",
                     "fragment_depth", "context_depth", "shared_depth",
                     "char_embed_dim", "max_fragment_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def training(self) -> TrainingConfig:
        return TrainingConfig(
            learning_rate=self.learning_rate, momentum=self.momentum,
            batch_size=self.batch_size, dropout=self.dropout,
            decay_factor=self.decay_factor, max_epochs=self.max_epochs,
            patience=self.patience, neg_ratio=self.neg_ratio, seed=self.seed,
            alpha_word=self.alpha_word, alpha_char=self.alpha_char)


# Per-task hyper-parameter profiles.  All use two dedicated layers per
# feature group and one shared layer except where noted.
PROFILES: dict[str, dict] = {
    "conll2003": {
        "learning_rate": 0.256, "fragment_layers": 412,
        "context_layers": 512, "shared_layers": 512,
    },
    "ontonotes-eng": {
        "learning_rate": 0.128, "fragment_layers": 412,
        "context_layers": 412, "shared_layers": 612,
    },
    "ontonotes-zh": {
        # two shared layers; labelled at character level
        "learning_rate": 0.128, "fragment_layers": 512,
        "context_layers": 512, "shared_layers": 512,
        "shared_depth": 2, "tokenization": "character",
    },
    "conll2002": {
        "learning_rate": 0.126, "fragment_layers": 412,
        "context_layers": 512, "shared_layers": 512,
    },
    "kbp-eng": {
        # three context layers
        "learning_rate": 0.128, "fragment_layers": 512,
        "context_layers": 412, "shared_layers": 512,
        "context_depth": 3,
    },
    "kbp-cmn": {
        "learning_rate": 0.128, "fragment_layers": 512,
        "context_layers": 512, "shared_layers": 512,
        "tokenization": "character",
    },
    "kbp-spa": {
        "learning_rate": 0.064, "fragment_layers": 412,
        "context_layers": 412, "shared_layers": 512,
    },
    # desk-scale profile for the bundled synthetic corpus
    "synthetic": {
        "learning_rate": 0.064, "fragment_layers": 32,
        "context_layers": 32, "shared_layers": 32,
        "batch_size": 32, "dropout": 0.1, "max_epochs": 200,
        "patience": 200, "char_embed_dim": 16, "conv_filters": 8,
        "max_fragment_len": 3,
    },
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_COERCE = {"float": float, "int": int, "str": str}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise KeyError(f"unknown config key {key!r}")
    return _COERCE[_FIELD_TYPES[key]](raw)


def parse_config_file(text: str) -> dict:
    """Flat 'key = value' lines; '#' starts a comment, blanks ignored."""
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value', "
                             f"got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        values[key] = _coerce(key, value)
    return values


def resolve_config(profile: str | None = None, file_text: str | None = None,
                   overrides: dict | None = None) -> RunConfig:
    """Merge defaults, a named profile, a config file, and overrides."""
    merged: dict = {}
    if profile is not None:
        if profile not in PROFILES:
            raise KeyError(f"unknown profile {profile!r}; choose from "
                           f"{', '.join(sorted(PROFILES))}")
        merged.update(PROFILES[profile])
    if file_text is not None:
        merged.update(parse_config_file(file_text))
    for key, value in (overrides or {}).items():
        merged[key] = _coerce(key, value) if isinstance(value, str) else value
    unknown = set(merged) - set(_FIELD_TYPES)
    if unknown:
        raise KeyError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)
