"""The complete NER model: feature extractor + grouped network + labels.

Serialization format (version 1): a single .npz container with

* key "meta": JSON as uint8 bytes — format version, class labels,
  decoding settings, forgetting factors, convolution sizes, network layer
  specs, token lists and sha256 hashes of the three vocabularies, and the
  declared order of all tensor keys;
* one array per tensor, stored under its parameter name ("net.frag.0.W",
  "emb.word_cased", "conv.w2.b", ...).

Everything needed to tag text is inside the container; the vocabulary
hashes let callers verify a model against the embedding file it was
trained from.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .features import (CharConv, CharConvConfig, EmbeddingMatrix,
                       FeatureExtractor, char_vocabulary)
from .fofe import Vocabulary
from .network import Gradients, GroupedNetwork, loss
from .pipeline import CandidatePrediction, LabelSet, decode, enumerate_fragments

FORMAT_VERSION = 1


def vocab_hash(vocab: Vocabulary) -> str:
    return hashlib.sha256("\n".join(vocab.tokens).encode("utf-8")).hexdigest()


class NerModel:
    """Bundles everything needed to go from sentences to entity spans."""

    def __init__(self, extractor: FeatureExtractor, net: GroupedNetwork,
                 labels: LabelSet, max_fragment_len: int = 7,
                 threshold: float = 0.5, tokenization: str = "word"):
        self.extractor = extractor
        self.net = net
        self.labels = labels
        self.max_fragment_len = max_fragment_len
        self.threshold = threshold
        self.tokenization = tokenization

    # -- training plumbing --

    def parameters(self) -> dict[str, np.ndarray]:
        params = dict(self.net.params)
        params.update(self.extractor.parameters())
        return params

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.parameters().items()}

    def forward_backward(self, candidates, gold, dropout_p: float = 0.0,
                         rng: np.random.Generator | None = None):
        """One training step's math: loss and gradients for a batch.

        candidates is a list of Fragment; gold the matching class indices.
        Returns (loss value, grads dict over all trainable parameters).
        """
        codes = [self.extractor.codes(f) for f in candidates]
        batch = self.extractor.materialize(codes, train=True)
        probs, cache = self.net.forward(batch.fragment, batch.context,
                                        train=True, dropout_p=dropout_p, rng=rng)
        grad: Gradients = self.net.backward(cache, gold)
        grads = self.zero_grads()
        for k, g in grad.params.items():
            grads[k] += g
        self.extractor.backward(batch, grad.d_fragment, grad.d_context, grads)
        return loss(probs, gold), grads

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        for k, v in values.items():
            params[k][...] = v

    # -- inference --

    def predict(self, sentences, batch_size: int = 512) -> list[CandidatePrediction]:
        """Class distributions for every candidate fragment of the sentences."""
        frags = []
        for sent in sentences:
            frags.extend(enumerate_fragments(sent, self.max_fragment_len))
        preds: list[CandidatePrediction] = []
        for lo in range(0, len(frags), batch_size):
            chunk = frags[lo:lo + batch_size]
            codes = [self.extractor.codes(f) for f in chunk]
            batch = self.extractor.materialize(codes)
            probs, _ = self.net.forward(batch.fragment, batch.context)
            preds.extend(CandidatePrediction(f, probs[i])
                         for i, f in enumerate(chunk))
        return preds

    def tag(self, sentences, batch_size: int = 512):
        """Decoded entity spans, with the probability that won each span."""
        preds = self.predict(sentences, batch_size=batch_size)
        spans = decode(preds, self.labels, threshold=self.threshold)
        by_key = {}
        for p in preds:
            f = p.fragment
            key = (f.sentence.doc_id, f.sentence.index, f.start, f.end)
            by_key[key] = p.distribution
        out = []
        for s in spans:
            dist = by_key[(s.doc_id, s.sentence, s.start, s.end)]
            out.append((s, float(dist[self.labels.index[s.label]])))
        return out

    # -- serialization --

    def save(self, path) -> None:
        params = self.parameters()
        ex = self.extractor
        meta = {
            "format_version": FORMAT_VERSION,
            "classes": self.labels.entity_classes,
            "max_fragment_len": self.max_fragment_len,
            "threshold": self.threshold,
            "tokenization": self.tokenization,
            "alpha_word": float(ex.alpha_word),
            "alpha_char": float(ex.alpha_char),
            "conv": {
                "filter_widths": list(ex.conv.config.filter_widths),
                "filters_per_width": ex.conv.config.filters_per_width,
                "char_embed_dim": ex.conv.config.char_embed_dim,
                "pad": ex.conv.config.pad,
            },
            "net_specs": self.net.specs_json(),
            "vocab": {
                "word_cased": ex.word_cased.vocab.tokens,
                "word_uncased": ex.word_uncased.vocab.tokens,
                "char": ex.char_embed.vocab.tokens,
            },
            "vocab_sha256": {
                "word_cased": vocab_hash(ex.word_cased.vocab),
                "word_uncased": vocab_hash(ex.word_uncased.vocab),
                "char": vocab_hash(ex.char_embed.vocab),
            },
            "trainable": {
                "word_cased": ex.word_cased.trainable,
                "word_uncased": ex.word_uncased.trainable,
                "char": ex.char_embed.trainable,
            },
            "tensors": sorted(params),
        }
        arrays = {k: params[k] for k in sorted(params)}
        for name, mat in (("emb.word_cased", ex.word_cased),
                          ("emb.word_uncased", ex.word_uncased),
                          ("emb.char", ex.char_embed)):
            if name not in arrays:
                arrays[name] = mat.rows
                meta["tensors"].append(name)
        blob = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
        np.savez(path, meta=blob, **arrays)

    @classmethod
    def load(cls, path) -> "NerModel":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            if meta["format_version"] != FORMAT_VERSION:
                raise ValueError(f"unsupported model format {meta['format_version']}")
            arrays = {k: np.array(data[k]) for k in meta["tensors"]}

        vocabs = {name: Vocabulary(tokens)
                  for name, tokens in meta["vocab"].items()}
        for name, vocab in vocabs.items():
            if vocab_hash(vocab) != meta["vocab_sha256"][name]:
                raise ValueError(f"vocabulary hash mismatch for {name}")
        trainable = meta["trainable"]
        word_cased = EmbeddingMatrix(vocabs["word_cased"], arrays["emb.word_cased"],
                                     trainable=trainable["word_cased"])
        word_uncased = EmbeddingMatrix(vocabs["word_uncased"], arrays["emb.word_uncased"],
                                       trainable=trainable["word_uncased"])
        char_embed = EmbeddingMatrix(vocabs["char"], arrays["emb.char"],
                                     trainable=trainable["char"])
        conv_cfg = CharConvConfig(
            filter_widths=tuple(meta["conv"]["filter_widths"]),
            filters_per_width=meta["conv"]["filters_per_width"],
            char_embed_dim=meta["conv"]["char_embed_dim"],
            pad=meta["conv"]["pad"])
        conv = CharConv(conv_cfg,
                        {w: arrays[f"conv.w{w}.W"] for w in conv_cfg.filter_widths},
                        {w: arrays[f"conv.w{w}.b"] for w in conv_cfg.filter_widths})
        extractor = FeatureExtractor(word_cased, word_uncased, char_embed, conv,
                                     alpha_word=meta["alpha_word"],
                                     alpha_char=meta["alpha_char"])
        net_params = {k: v for k, v in arrays.items() if k.startswith("net.")}
        net = GroupedNetwork.from_specs_json(meta["net_specs"], net_params)
        return cls(extractor, net, LabelSet(meta["classes"]),
                   max_fragment_len=meta["max_fragment_len"],
                   threshold=meta["threshold"],
                   tokenization=meta.get("tokenization", "word"))


def build_model(word_cased: EmbeddingMatrix, word_uncased: EmbeddingMatrix,
                labels: LabelSet, *, fragment_size: int, context_size: int,
                shared_size: int, fragment_depth: int = 2, context_depth: int = 2,
                shared_depth: int = 1, char_embed_dim: int = 64,
                conv_widths=(2, 3), conv_filters: int = 32,
                alpha_word=0.5, alpha_char=0.8, max_fragment_len: int = 7,
                threshold: float = 0.5, seed: int = 0,
                tokenization: str = "word") -> NerModel:
    """Assemble a fresh model around loaded word embeddings."""
    conv_cfg = CharConvConfig(filter_widths=tuple(conv_widths),
                              filters_per_width=conv_filters,
                              char_embed_dim=char_embed_dim)
    char_embed = EmbeddingMatrix.random(char_vocabulary(), char_embed_dim, seed=seed + 1)
    conv = CharConv.init(conv_cfg, seed=seed + 2)
    extractor = FeatureExtractor(word_cased, word_uncased, char_embed, conv,
                                 alpha_word=alpha_word, alpha_char=alpha_char)
    net = GroupedNetwork.init(
        [extractor.fragment_dim] + [fragment_size] * fragment_depth,
        [extractor.context_dim] + [context_size] * context_depth,
        [shared_size] * shared_depth,
        n_classes=len(labels), seed=seed)
    return NerModel(extractor, net, labels,
                    max_fragment_len=max_fragment_len, threshold=threshold,
                    tokenization=tokenization)
