"""Word embedding text files.

Format: a header line "<count> <dim>", then one token per line followed by
dim whitespace-separated floats.  Loading produces the cased vocabulary
and matrix plus an uncased counterpart whose rows average all cased forms
sharing a lowercase spelling.
"""

from __future__ import annotations

import numpy as np

from .errors import BadHeader, DimensionMismatch, DuplicateToken
from .features import EmbeddingMatrix
from .fofe import PADDING_TOKEN, UNKNOWN_TOKEN, Vocabulary

RESERVED = (UNKNOWN_TOKEN, PADDING_TOKEN)


def parse_embedding_text(stream):
    """(tokens, matrix) from an open embedding text stream."""
    try:
        header = next(iter(stream))
    except StopIteration:
        raise BadHeader("empty embedding file") from None
    parts = header.split()
    if len(parts) != 2:
        raise BadHeader(f"expected '<count> <dim>' header, got {header.strip()!r}")
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise BadHeader(f"non-integer header fields in {header.strip()!r}") from None
    if count < 1 or dim < 1:
        raise BadHeader(f"count and dim must be positive, got {count} {dim}")

    tokens: list[str] = []
    seen: set[str] = set()
    rows = np.empty((count, dim))
    n = 0
    for line_no, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        cols = line.split()
        if len(cols) != dim + 1:
            raise DimensionMismatch(
                f"line {line_no}: expected token + {dim} floats, got {len(cols)} fields")
        tok = cols[0]
        if tok in seen:
            raise DuplicateToken(f"line {line_no}: token {tok!r} appears twice")
        if tok in RESERVED:
            raise DuplicateToken(f"line {line_no}: token {tok!r} is reserved")
        if n >= count:
            raise BadHeader(f"header declares {count} tokens but file has more")
        seen.add(tok)
        tokens.append(tok)
        try:
            rows[n] = [float(c) for c in cols[1:]]
        except ValueError:
            raise DimensionMismatch(f"line {line_no}: non-numeric vector field") from None
        n += 1
    if n != count:
        raise BadHeader(f"header declares {count} tokens but file has {n}")
    return tokens, rows


def load_embeddings(stream, seed: int = 0, trainable: bool = True):
    """Build cased and uncased embedding matrices from a text stream.

    Vocabularies get unknown and padding entries appended; their rows (and
    any other row without file coverage) are sampled uniformly from
    [-0.5/dim, 0.5/dim].  The uncased matrix averages rows of tokens that
    share a lowercase form.

    Returns (cased EmbeddingMatrix, uncased EmbeddingMatrix).
    """
    tokens, rows = parse_embedding_text(stream)
    dim = rows.shape[1]
    rng = np.random.default_rng(seed)

    def reserved_rows(k):
        return rng.uniform(-0.5 / dim, 0.5 / dim, size=(k, dim))

    cased_vocab = Vocabulary(tokens + [UNKNOWN_TOKEN, PADDING_TOKEN])
    cased_rows = np.vstack([rows, reserved_rows(2)])
    cased = EmbeddingMatrix(cased_vocab, cased_rows, trainable=trainable)

    lower_order: list[str] = []
    groups: dict[str, list[int]] = {}
    for i, tok in enumerate(tokens):
        low = tok.lower()
        if low not in groups:
            groups[low] = []
            lower_order.append(low)
        groups[low].append(i)
    uncased_vocab = Vocabulary(lower_order + [UNKNOWN_TOKEN, PADDING_TOKEN])
    uncased_rows = np.vstack(
        [np.stack([rows[groups[low]].mean(axis=0) for low in lower_order]),
         reserved_rows(2)])
    uncased = EmbeddingMatrix(uncased_vocab, uncased_rows, trainable=trainable)
    return cased, uncased


def write_embedding_text(path, tokens, rows) -> None:
    """Write tokens and rows in the text format (used by corpus generators)."""
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(tokens)} {rows.shape[1]}\n")
        for tok, row in zip(tokens, rows):
            fh.write(tok + " " + " ".join(f"{v:.8f}" for v in row) + "\n")
