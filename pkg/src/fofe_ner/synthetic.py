"""Deterministic synthetic corpus for demos and end-to-end checks.

Thirty lowercase tokens: two disjoint sets of eight entity words (ANIMAL
and COLOR, mentions of one or two words) and fourteen filler words.
Entity words never occur as filler, so the task is solvable from word
identity plus context, and a model trained on one sample generalizes to
another sample from the same process.
"""

from __future__ import annotations

import os

import numpy as np

from .conll import ConllDocument, document_to_conll
from .embeddings import write_embedding_text
from .features import Sentence
from .pipeline import EntitySpan

ANIMALS = ("wolf", "heron", "otter", "lynx", "ibex", "stoat", "puffin", "marten")
COLORS = ("crimson", "teal", "ochre", "indigo", "amber", "violet", "sepia", "umber")
FILLERS = ("the", "a", "saw", "near", "old", "walked", "by", "with",
           "small", "quiet", "stream", "morning", "again", "slowly")
VOCAB = ANIMALS + COLORS + FILLERS

CLASSES = ("ANIMAL", "COLOR")
_WORDS = {"ANIMAL": ANIMALS, "COLOR": COLORS}

EMBED_DIM = 16


def _fill(rng, k):
    return [FILLERS[i] for i in rng.integers(0, len(FILLERS), size=k)]


def make_split(n_sentences: int, seed: int, doc_id: str = "doc0") -> ConllDocument:
    """Generate one document of n_sentences with gold annotations."""
    rng = np.random.default_rng(seed)
    doc = ConllDocument(doc_id=doc_id)
    for idx in range(n_sentences):
        tokens: list[str] = list(_fill(rng, int(rng.integers(1, 3))))
        spans = []
        for _ in range(int(rng.integers(1, 3))):
            cls = CLASSES[int(rng.integers(0, len(CLASSES)))]
            words = _WORDS[cls]
            length = int(rng.integers(1, 3))
            start = len(tokens)
            tokens.extend(words[i] for i in rng.integers(0, len(words), size=length))
            spans.append(EntitySpan(sentence=idx, start=start, end=start + length,
                                    label=cls, doc_id=doc_id))
            tokens.extend(_fill(rng, int(rng.integers(1, 3))))
        doc.sentences.append(Sentence(tokens, doc_id=doc_id, index=idx))
        doc.gold_spans.extend(spans)
    return doc


def make_corpus(n_train: int = 50, n_dev: int = 20, seed: int = 7):
    """(train document, dev document) from disjoint random streams."""
    return (make_split(n_train, seed=seed),
            make_split(n_dev, seed=seed + 1))


def write_corpus(out_dir, n_train: int = 50, n_dev: int = 20, seed: int = 7) -> dict:
    """Write train/dev column files, random embeddings, and a config file.

    Returns the file paths.  The embedding file covers the full vocabulary
    with uniform random vectors of dimension 16.
    """
    os.makedirs(out_dir, exist_ok=True)
    train_doc, dev_doc = make_corpus(n_train, n_dev, seed=seed)
    paths = {
        "train_file": os.path.join(out_dir, "train.conll"),
        "dev_file": os.path.join(out_dir, "dev.conll"),
        "test_file": os.path.join(out_dir, "dev.conll"),
        "embeddings_file": os.path.join(out_dir, "embeddings.txt"),
        "config_file": os.path.join(out_dir, "synthetic.conf"),
    }
    with open(paths["train_file"], "w", encoding="utf-8") as fh:
        fh.write(document_to_conll(train_doc))
    with open(paths["dev_file"], "w", encoding="utf-8") as fh:
        fh.write(document_to_conll(dev_doc))
    rng = np.random.default_rng(seed + 2)
    rows = rng.uniform(-0.5, 0.5, size=(len(VOCAB), EMBED_DIM))
    write_embedding_text(paths["embeddings_file"], VOCAB, rows)
    with open(paths["config_file"], "w", encoding="utf-8") as fh:
        fh.write("# generated synthetic-run configuration\n")
        for key in ("train_file", "dev_file", "test_file", "embeddings_file"):
            fh.write(f"{key} = {paths[key]}\n")
    return paths
