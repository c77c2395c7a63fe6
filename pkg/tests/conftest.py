"""Shared fixtures: small feature extractors and one trained synthetic model."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from fofe_ner.config import PROFILES
from fofe_ner.conll import parse_conll
from fofe_ner.embeddings import load_embeddings
from fofe_ner.features import (CharConv, CharConvConfig, EmbeddingMatrix,
                               FeatureExtractor)
from fofe_ner.fofe import Vocabulary
from fofe_ner.model import build_model
from fofe_ner.pipeline import LabelSet, enumerate_fragments, label_candidates
from fofe_ner.synthetic import write_corpus
from fofe_ner.training import TrainingConfig, train


def identity_embedding(tokens, trainable=True):
    """Vocabulary over tokens with one-hot rows (unknown row is zero)."""
    vocab = Vocabulary(list(tokens))
    rows = np.zeros((len(vocab), len(tokens)))
    for i in range(len(tokens)):
        rows[i, i] = 1.0
    return EmbeddingMatrix(vocab, rows, trainable=trainable)


def tiny_extractor(word_tokens=("a", "b", "c"), char_tokens=("A", "B"),
                   widths=(2,), n_filters=3, alpha_word=0.5, alpha_char=0.8,
                   seed=0):
    """Extractor with identity word embeddings and a small conv bank."""
    rng = np.random.default_rng(seed)
    cased = identity_embedding(word_tokens)
    uncased = identity_embedding([t.lower() for t in dict.fromkeys(
        t.lower() for t in word_tokens)])
    char_vocab = Vocabulary(list(char_tokens) + [" ", "<pad>"])
    char_rows = rng.normal(size=(len(char_vocab), 4))
    char_embed = EmbeddingMatrix(char_vocab, char_rows)
    cfg = CharConvConfig(filter_widths=widths, filters_per_width=n_filters,
                         char_embed_dim=4)
    conv = CharConv.init(cfg, seed=seed + 1)
    return FeatureExtractor(cased, uncased, char_embed, conv,
                            alpha_word=alpha_word, alpha_char=alpha_char)


SYNTHETIC_TRAINING = TrainingConfig(
    learning_rate=PROFILES["synthetic"]["learning_rate"],
    batch_size=PROFILES["synthetic"]["batch_size"],
    dropout=PROFILES["synthetic"]["dropout"],
    max_epochs=200, patience=40, seed=0)


@pytest.fixture(scope="session")
def synthetic_run(tmp_path_factory):
    """Generate the bundled synthetic corpus and train a model on it once.

    The elapsed wall time covers corpus generation through training, which
    is what the end-to-end budget constrains.
    """
    data_dir = tmp_path_factory.mktemp("synthetic")
    t0 = time.perf_counter()
    paths = write_corpus(data_dir, n_train=50, n_dev=20, seed=7)
    with open(paths["train_file"], encoding="utf-8") as fh:
        train_docs = parse_conll(fh)
    with open(paths["dev_file"], encoding="utf-8") as fh:
        dev_docs = parse_conll(fh)
    with open(paths["embeddings_file"], encoding="utf-8") as fh:
        cased, uncased = load_embeddings(fh, seed=0)

    labels = LabelSet(sorted({g.label for d in train_docs for g in d.gold_spans}))
    prof = PROFILES["synthetic"]
    model = build_model(cased, uncased, labels,
                        fragment_size=prof["fragment_layers"],
                        context_size=prof["context_layers"],
                        shared_size=prof["shared_layers"],
                        char_embed_dim=prof["char_embed_dim"],
                        conv_filters=prof["conv_filters"],
                        max_fragment_len=prof["max_fragment_len"], seed=0)
    candidates = []
    for doc in train_docs:
        for sent in doc.sentences:
            frags = enumerate_fragments(sent, prof["max_fragment_len"])
            candidates.extend(label_candidates(frags, doc.gold_spans, labels))
    result = train(model, candidates, dev_docs, SYNTHETIC_TRAINING)
    elapsed = time.perf_counter() - t0

    model_path = data_dir / "model.npz"
    model.save(model_path)
    return SimpleNamespace(model=model, labels=labels, result=result,
                           train_docs=train_docs, dev_docs=dev_docs,
                           candidates=candidates, elapsed=elapsed,
                           model_path=model_path, paths=paths,
                           data_dir=data_dir)
