"""Feature extraction for candidate fragments.

Every candidate is described by two concatenated vectors:

* fragment group: cased and uncased bag-of-words of the fragment tokens,
  character-level FOFE of the surface string in both directions, and a
  bank of character convolutions, all projected to dense slices;
* context group: eight word-level FOFE codes of the surrounding sentence
  (left/right, with and without the fragment, cased and uncased), each
  projected through the word embedding matrices.

Sparse codes are separated from their projection so that training can
re-project cached codes through the current (trainable) embedding matrices
on every step.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, FragmentTooShort
from .fofe import FofeCode, ForgettingFactor, Vocabulary, fofe_sparse

FRAGMENT_FEATURES = ("bow_cased", "bow_uncased", "char_l2r", "char_r2l", "char_conv")
CONTEXT_FEATURES = (
    "left_excl_cased", "left_incl_cased", "right_excl_cased", "right_incl_cased",
    "left_excl_uncased", "left_incl_uncased", "right_excl_uncased", "right_incl_uncased",
)


class Sentence:
    """A tokenized sentence with a parallel lowercased view."""

    __slots__ = ("tokens", "lower", "doc_id", "index")

    def __init__(self, tokens, doc_id: str = "", index: int = 0):
        tokens = tuple(tokens)
        if not tokens:
            raise ValueError("sentence must contain at least one token")
        self.tokens = tokens
        self.lower = tuple(t.lower() for t in tokens)
        self.doc_id = doc_id
        self.index = index

    def __len__(self) -> int:
        return len(self.tokens)

    def __repr__(self) -> str:
        return f"Sentence({' '.join(self.tokens)!r})"


@dataclass(frozen=True)
class Fragment:
    """A contiguous token span [start, end) of a sentence."""

    sentence: Sentence
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end <= len(self.sentence):
            raise ValueError(
                f"invalid span [{self.start}, {self.end}) in sentence of "
                f"length {len(self.sentence)}"
            )

    @property
    def tokens(self):
        return self.sentence.tokens[self.start:self.end]

    @property
    def surface(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return self.end - self.start


class EmbeddingMatrix:
    """Dense rows indexed by a vocabulary; optionally updated by training."""

    def __init__(self, vocab: Vocabulary, rows: np.ndarray, trainable: bool = True):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != len(vocab):
            raise DimensionMismatch(
                f"need {len(vocab)} rows for this vocabulary, got shape {rows.shape}"
            )
        self.vocab = vocab
        self.rows = rows
        self.trainable = trainable

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def random(cls, vocab: Vocabulary, dim: int, seed: int = 0,
               trainable: bool = True) -> "EmbeddingMatrix":
        """Rows drawn uniformly from [-0.5/dim, 0.5/dim]."""
        rng = np.random.default_rng(seed)
        rows = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim))
        return cls(vocab, rows, trainable=trainable)


def char_vocabulary() -> Vocabulary:
    """Printable ASCII characters plus unknown and padding entries."""
    vocab = Vocabulary(list(string.printable))
    vocab.tokens.append("<pad>")
    vocab.index["<pad>"] = len(vocab.tokens) - 1
    return vocab


def project(code, matrix: EmbeddingMatrix) -> np.ndarray:
    """Project a FOFE code or bag vector through an embedding matrix.

    Computed as the coefficient-weighted sum of rows over the nonzero
    entries (codes are short even when the vocabulary is large).  During
    training the matching gradient accumulation into matrix rows is done
    by FeatureExtractor.backward.
    """
    if isinstance(code, FofeCode):
        values = code.values
    else:
        values = np.asarray(code, dtype=float)
    if values.shape != (len(matrix.vocab),):
        raise DimensionMismatch(
            f"code has {values.shape} components, matrix indexes {len(matrix.vocab)}"
        )
    idx = np.nonzero(values)[0]
    if idx.size == 0:
        return np.zeros(matrix.dim)
    return values[idx] @ matrix.rows[idx]


@dataclass
class CharConvConfig:
    """Sizes of the character convolution bank."""

    filter_widths: tuple[int, ...] = (2, 3)
    filters_per_width: int = 32
    char_embed_dim: int = 64
    pad: bool = True

    def __post_init__(self):
        if any(w < 1 for w in self.filter_widths):
            raise ValueError("filter widths must be >= 1")
        if self.filters_per_width < 1:
            raise ValueError("need at least one filter per width")

    @property
    def output_dim(self) -> int:
        return self.filters_per_width * len(self.filter_widths)


class CharConv:
    """Character convolution bank: per width, a filter matrix and biases.

    Each filter slides over the embedded character sequence, producing
    window dot-products + bias through a ReLU, max-pooled over positions.
    """

    def __init__(self, config: CharConvConfig, filters: dict, biases: dict):
        self.config = config
        self.filters = filters  # width -> (n_filters, width * char_dim)
        self.biases = biases    # width -> (n_filters,)

    @classmethod
    def init(cls, config: CharConvConfig, seed: int = 0) -> "CharConv":
        rng = np.random.default_rng(seed)
        filters, biases = {}, {}
        for w in config.filter_widths:
            fan_in = w * config.char_embed_dim
            limit = np.sqrt(6.0 / (fan_in + config.filters_per_width))
            filters[w] = rng.uniform(-limit, limit, size=(config.filters_per_width, fan_in))
            biases[w] = np.zeros(config.filters_per_width)
        return cls(config, filters, biases)


def _conv_forward(char_ids: np.ndarray, emb_rows: np.ndarray, conv: CharConv,
                  want_cache: bool):
    """Run the convolution bank over one character id sequence."""
    E = emb_rows[char_ids]
    L, D = E.shape
    out = np.empty(conv.config.output_dim)
    caches = [] if want_cache else None
    offset = 0
    for w in conv.config.filter_widths:
        n_win = L - w + 1
        windows = np.empty((n_win, w * D))
        for i in range(n_win):
            windows[i] = E[i:i + w].ravel()
        scores = windows @ conv.filters[w].T + conv.biases[w]
        act = np.maximum(scores, 0.0)
        pooled = act.max(axis=0)
        nf = conv.config.filters_per_width
        out[offset:offset + nf] = pooled
        if want_cache:
            caches.append((w, windows, act.argmax(axis=0), pooled > 0.0))
        offset += nf
    return out, caches


def char_conv(surface: str, char_embed: EmbeddingMatrix, conv: CharConv) -> np.ndarray:
    """Convolution features of a character string (standalone, no cache)."""
    ids = _surface_ids(surface, char_embed.vocab, conv.config)
    out, _ = _conv_forward(ids, char_embed.rows, conv, want_cache=False)
    return out


def _surface_ids(surface: str, char_vocab: Vocabulary, config: CharConvConfig) -> np.ndarray:
    ids = char_vocab.lookup_all(surface)
    widest = max(config.filter_widths)
    if len(ids) < widest:
        if not config.pad:
            raise FragmentTooShort(
                f"surface {surface!r} has {len(ids)} characters, widest filter is {widest}"
            )
        ids = ids + [char_vocab.lookup("<pad>")] * (widest - len(ids))
    return np.asarray(ids, dtype=np.intp)


def _sparse_arrays(coef: dict[int, float]) -> tuple[np.ndarray, np.ndarray]:
    if not coef:
        return np.empty(0, dtype=np.intp), np.empty(0)
    idx = np.fromiter(sorted(coef), dtype=np.intp, count=len(coef))
    return idx, np.array([coef[i] for i in idx])


@dataclass
class CandidateCodes:
    """Sparse recipe for one candidate: everything needed to materialize
    its feature vectors against the current embedding matrices."""

    frag_proj: list    # (indices, coeffs) per projected fragment feature
    ctx_proj: list     # (indices, coeffs) per context feature
    conv_chars: np.ndarray


@dataclass
class FeatureBundle:
    """Materialized per-candidate features with the slice layout."""

    fragment_group: np.ndarray
    context_group: np.ndarray
    fragment_slices: dict[str, slice]
    context_slices: dict[str, slice]
    codes: CandidateCodes | None = None


@dataclass
class BatchFeatures:
    """Materialized features for a batch, plus backward-pass caches."""

    fragment: np.ndarray   # (B, fragment_dim)
    context: np.ndarray    # (B, context_dim)
    codes: list = field(default_factory=list)
    conv_caches: list | None = None


class FeatureExtractor:
    """Turns fragments into grouped feature vectors.

    Holds the trainable projection parameters: cased/uncased word embedding
    matrices, the character embedding matrix, and the convolution bank.
    Extraction is pure given frozen matrices; gradient accumulation via
    backward() assumes a single writer per batch.
    """

    def __init__(self, word_cased: EmbeddingMatrix, word_uncased: EmbeddingMatrix,
                 char_embed: EmbeddingMatrix, conv: CharConv,
                 alpha_word=0.5, alpha_char=0.8):
        self.word_cased = word_cased
        self.word_uncased = word_uncased
        self.char_embed = char_embed
        self.conv = conv
        self.alpha_word = ForgettingFactor(alpha_word)
        self.alpha_char = ForgettingFactor(alpha_char)

        dw_c, dw_u, dc = word_cased.dim, word_uncased.dim, char_embed.dim
        self._frag_dims = [dw_c, dw_u, dc, dc, conv.config.output_dim]
        self._frag_matrices = [word_cased, word_uncased, char_embed, char_embed]
        self._ctx_matrices = [word_cased] * 4 + [word_uncased] * 4
        self.fragment_slices = _layout(FRAGMENT_FEATURES, self._frag_dims)
        self.context_slices = _layout(CONTEXT_FEATURES, [dw_c] * 4 + [dw_u] * 4)
        self.fragment_dim = sum(self._frag_dims)
        self.context_dim = 4 * dw_c + 4 * dw_u

    # -- sparse code extraction (independent of parameter values) --

    def codes(self, frag: Fragment) -> CandidateCodes:
        sent = frag.sentence
        cased = self.word_cased.vocab.lookup_all(sent.tokens)
        lower = self.word_uncased.vocab.lookup_all(sent.lower)
        char_ids = self.char_embed.vocab.lookup_all(frag.surface)
        s, e = frag.start, frag.end
        ac, aw = float(self.alpha_char), float(self.alpha_word)

        frag_proj = [
            _sparse_arrays(fofe_sparse(cased[s:e], 1.0)),
            _sparse_arrays(fofe_sparse(lower[s:e], 1.0)),
            _sparse_arrays(fofe_sparse(char_ids, ac)),
            _sparse_arrays(fofe_sparse(char_ids[::-1], ac)),
        ]
        ctx_proj = []
        for ids in (cased, lower):
            ctx_proj.extend([
                _sparse_arrays(fofe_sparse(ids[:s], aw)),
                _sparse_arrays(fofe_sparse(ids[:e], aw)),
                _sparse_arrays(fofe_sparse(ids[e:][::-1], aw)),
                _sparse_arrays(fofe_sparse(ids[s:][::-1], aw)),
            ])
        conv_chars = _surface_ids(frag.surface, self.char_embed.vocab, self.conv.config)
        return CandidateCodes(frag_proj=frag_proj, ctx_proj=ctx_proj, conv_chars=conv_chars)

    # -- materialization against current parameters --

    def materialize(self, codes_list: list[CandidateCodes], train: bool = False) -> BatchFeatures:
        B = len(codes_list)
        F = np.zeros((B, self.fragment_dim))
        C = np.zeros((B, self.context_dim))
        for k, name in enumerate(FRAGMENT_FEATURES[:-1]):
            _project_column(F[:, self.fragment_slices[name]],
                            [c.frag_proj[k] for c in codes_list],
                            self._frag_matrices[k].rows)
        for k, name in enumerate(CONTEXT_FEATURES):
            _project_column(C[:, self.context_slices[name]],
                            [c.ctx_proj[k] for c in codes_list],
                            self._ctx_matrices[k].rows)
        conv_slice = self.fragment_slices["char_conv"]
        conv_caches = [] if train else None
        for b, c in enumerate(codes_list):
            out, cache = _conv_forward(c.conv_chars, self.char_embed.rows,
                                       self.conv, want_cache=train)
            F[b, conv_slice] = out
            if train:
                conv_caches.append(cache)
        return BatchFeatures(fragment=F, context=C, codes=codes_list,
                             conv_caches=conv_caches)

    def extract(self, frag: Fragment, keep_codes: bool = False) -> FeatureBundle:
        codes = self.codes(frag)
        batch = self.materialize([codes])
        return FeatureBundle(
            fragment_group=batch.fragment[0],
            context_group=batch.context[0],
            fragment_slices=self.fragment_slices,
            context_slices=self.context_slices,
            codes=codes if keep_codes else None,
        )

    def fragment_features(self, frag: Fragment) -> dict[str, np.ndarray]:
        """Named fragment-group slices, in declared order."""
        bundle = self.extract(frag)
        return {n: bundle.fragment_group[s] for n, s in self.fragment_slices.items()}

    def context_features(self, frag: Fragment) -> dict[str, np.ndarray]:
        """Named context-group slices, in declared order."""
        bundle = self.extract(frag)
        return {n: bundle.context_group[s] for n, s in self.context_slices.items()}

    # -- training support --

    def parameters(self) -> dict[str, np.ndarray]:
        params = {}
        if self.word_cased.trainable:
            params["emb.word_cased"] = self.word_cased.rows
        if self.word_uncased.trainable:
            params["emb.word_uncased"] = self.word_uncased.rows
        if self.char_embed.trainable:
            params["emb.char"] = self.char_embed.rows
        for w in self.conv.config.filter_widths:
            params[f"conv.w{w}.W"] = self.conv.filters[w]
            params[f"conv.w{w}.b"] = self.conv.biases[w]
        return params

    def backward(self, batch: BatchFeatures, d_fragment: np.ndarray,
                 d_context: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        """Accumulate gradients of the batch loss into trainable parameters.

        d_fragment/d_context are the loss gradients w.r.t. the two group
        matrices, as produced by the network backward pass.
        """
        if batch.conv_caches is None:
            raise ValueError("batch was materialized without train=True")
        frag_keys = ["emb.word_cased", "emb.word_uncased", "emb.char", "emb.char"]
        for k, name in enumerate(FRAGMENT_FEATURES[:-1]):
            if frag_keys[k] in grads:
                _project_backward(grads[frag_keys[k]],
                                  [c.frag_proj[k] for c in batch.codes],
                                  d_fragment[:, self.fragment_slices[name]])
        ctx_keys = ["emb.word_cased"] * 4 + ["emb.word_uncased"] * 4
        for k, name in enumerate(CONTEXT_FEATURES):
            if ctx_keys[k] in grads:
                _project_backward(grads[ctx_keys[k]],
                                  [c.ctx_proj[k] for c in batch.codes],
                                  d_context[:, self.context_slices[name]])
        self._conv_backward(batch, d_fragment[:, self.fragment_slices["char_conv"]], grads)

    def _conv_backward(self, batch: BatchFeatures, d_out: np.ndarray,
                       grads: dict[str, np.ndarray]) -> None:
        nf = self.conv.config.filters_per_width
        d_char = grads.get("emb.char")
        for b, (codes, caches) in enumerate(zip(batch.codes, batch.conv_caches)):
            dE = None
            for k, (w, windows, argmax, active) in enumerate(caches):
                g = d_out[b, k * nf:(k + 1) * nf] * active
                if not np.any(g):
                    continue
                dW, db = grads[f"conv.w{w}.W"], grads[f"conv.w{w}.b"]
                dwin = np.zeros_like(windows)
                for f in np.nonzero(g)[0]:
                    pos = argmax[f]
                    dW[f] += g[f] * windows[pos]
                    db[f] += g[f]
                    dwin[pos] += g[f] * self.conv.filters[w][f]
                if d_char is not None:
                    if dE is None:
                        dE = np.zeros((len(codes.conv_chars), self.char_embed.dim))
                    D = self.char_embed.dim
                    for i in range(dwin.shape[0]):
                        row = dwin[i]
                        if row.any():
                            dE[i:i + w] += row.reshape(w, D)
            if dE is not None:
                np.add.at(d_char, codes.conv_chars, dE)


def _layout(names, dims) -> dict[str, slice]:
    slices, offset = {}, 0
    for name, d in zip(names, dims):
        slices[name] = slice(offset, offset + d)
        offset += d
    return slices


def _project_column(out: np.ndarray, sparse_codes, rows: np.ndarray) -> None:
    """out[b] = sum_k coeffs[b][k] * rows[indices[b][k]], batched."""
    lens = np.fromiter((len(ix) for ix, _ in sparse_codes), dtype=np.intp,
                       count=len(sparse_codes))
    if lens.sum() == 0:
        return
    all_idx = np.concatenate([ix for ix, _ in sparse_codes])
    all_coef = np.concatenate([cf for _, cf in sparse_codes])
    seg = np.repeat(np.arange(len(sparse_codes)), lens)
    np.add.at(out, seg, rows[all_idx] * all_coef[:, None])


def _project_backward(d_rows: np.ndarray, sparse_codes, d_out: np.ndarray) -> None:
    lens = np.fromiter((len(ix) for ix, _ in sparse_codes), dtype=np.intp,
                       count=len(sparse_codes))
    if lens.sum() == 0:
        return
    all_idx = np.concatenate([ix for ix, _ in sparse_codes])
    all_coef = np.concatenate([cf for _, cf in sparse_codes])
    seg = np.repeat(np.arange(len(sparse_codes)), lens)
    np.add.at(d_rows, all_idx, d_out[seg] * all_coef[:, None])
