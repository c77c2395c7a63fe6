"""Fixed-size ordinally forgetting encoding (FOFE).

A token sequence over a vocabulary V is folded into a single |V|-dimensional
vector by the recursion

    z_0 = 0,    z_n = alpha * z_{n-1} + onehot(w_n)

with a constant forgetting factor 0 < alpha < 1.  For alpha <= 0.5 the
encoding is injective, so the sequence can be recovered exactly: the last
token is the unique component with coefficient >= 1, and peeling it off and
rescaling by 1/alpha rewinds the recursion one step.  For alpha > 0.5
injectivity can fail, but only for isolated choices of alpha; the
`uniqueness_check` utility hunts for such collisions by exhaustive
enumeration on small instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateToken, MalformedCode

UNKNOWN_TOKEN = "<unk>"
PADDING_TOKEN = "<pad>"

# Matching tolerance for uniqueness_check; near-collisions closer than this
# are reported as collisions.
COLLISION_TOL = 1e-9

# Absolute float-noise allowance for decode, expressed at the original code
# scale.  Encode/decode rounding stays orders of magnitude below this.
NOISE_FLOOR = 2e-13


class ForgettingFactor(float):
    """A forgetting factor, validated to lie strictly inside (0, 1)."""

    def __new__(cls, value: float) -> "ForgettingFactor":
        value = float(value)
        if not 0.0 < value < 1.0:
            raise ValueError(f"forgetting factor must be in (0, 1), got {value}")
        return super().__new__(cls, value)

    @property
    def value(self) -> float:
        return float(self)


class Vocabulary:
    """Ordered token inventory with a designated unknown entry.

    Token indices form a bijection onto [0, len); any out-of-vocabulary
    lookup resolves to the unknown token's index.
    """

    def __init__(self, tokens, unknown: str = UNKNOWN_TOKEN):
        tokens = list(tokens)
        if unknown not in tokens:
            tokens.append(unknown)
        self.tokens: list[str] = tokens
        self.index: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in self.index:
                raise DuplicateToken(f"token {tok!r} appears twice")
            self.index[tok] = i
        self.unknown = unknown
        self.unk_index = self.index[unknown]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.unk_index)

    def lookup_all(self, tokens) -> list[int]:
        get = self.index.get
        unk = self.unk_index
        return [get(t, unk) for t in tokens]

    @classmethod
    def of_size(cls, n: int) -> "Vocabulary":
        """Synthetic vocabulary of n distinct tokens: A, B, ... or t0, t1, ..."""
        if n <= 26:
            tokens = [chr(ord("A") + i) for i in range(n)]
        else:
            tokens = [f"t{i}" for i in range(n)]
        return cls(tokens)


@dataclass(frozen=True)
class FofeCode:
    """A dense encoding of a token sequence.

    values has one slot per vocabulary entry, all components >= 0, and the
    component sum equals (1 - alpha^N) / (1 - alpha) for a sequence of N
    tokens (0 for the empty sequence).
    """

    values: np.ndarray
    alpha: ForgettingFactor
    length: int

    def sparse(self) -> tuple[np.ndarray, np.ndarray]:
        """(indices, coefficients) of the nonzero components."""
        idx = np.nonzero(self.values)[0]
        return idx, self.values[idx]


def fofe_sparse(index_seq, alpha: float) -> dict[int, float]:
    """FOFE code of a sequence of token indices as an index -> coefficient map.

    The coefficient of the token at position n (1-based, out of N) is
    alpha^(N-n), summed over repeats.  alpha = 1.0 yields plain counts.
    """
    coef: dict[int, float] = {}
    for i in index_seq:
        if alpha != 1.0:
            for k in coef:
                coef[k] *= alpha
        coef[i] = coef.get(i, 0.0) + 1.0
    return coef


def encode(sequence, vocab: Vocabulary, alpha: ForgettingFactor) -> FofeCode:
    """Encode a token sequence left to right.

    Unknown tokens resolve to the vocabulary's unknown index; the empty
    sequence encodes to the zero vector.
    """
    alpha = ForgettingFactor(alpha)
    z = np.zeros(len(vocab))
    for tok in sequence:
        z *= alpha
        z[vocab.lookup(tok)] += 1.0
    return FofeCode(values=z, alpha=alpha, length=len(sequence))


def encode_reversed(sequence, vocab: Vocabulary, alpha: ForgettingFactor) -> FofeCode:
    """Encode a token sequence right to left: the first token ends up with
    coefficient 1."""
    return encode(list(sequence)[::-1], vocab, alpha)


def decode(code: FofeCode, vocab: Vocabulary, eps: float = 1e-6,
           max_steps: int = 10_000) -> list[str]:
    """Invert an encoding produced with alpha <= 0.5.

    Repeatedly locates the unique component >= 1 - eps (the last token),
    subtracts its one-hot and rescales by 1/alpha, until the residual is
    everywhere below the tolerance.  Raises MalformedCode when no component
    or more than one component qualifies, or a component drifts negative
    beyond the tolerance.

    The 1/alpha rescaling amplifies encode's rounding noise, so the
    comparisons carry a slack of NOISE_FLOOR / alpha^step on top of eps.
    Round trips are reliable while alpha^steps stays a few times above
    NOISE_FLOOR (length 12 at alpha = 0.1; far longer at alpha = 0.5,
    where the binding limit is the 2^-N injectivity margin of repeated
    tokens against eps).
    """
    alpha = float(code.alpha)
    if alpha > 0.5:
        raise ValueError(f"decode requires alpha <= 0.5, got {alpha}")
    z = np.array(code.values, dtype=float, copy=True)
    out: list[str] = []
    scale = 1.0
    for _ in range(max_steps):
        tol = eps + NOISE_FLOOR / scale
        if np.any(z < -tol):
            raise MalformedCode(f"negative component {z.min():.3g}")
        if np.all(z < tol):
            return out
        hits = np.nonzero(z >= 1.0 - tol)[0]
        if hits.size == 0:
            raise MalformedCode("residual mass but no component >= 1")
        if hits.size > 1:
            raise MalformedCode(f"{hits.size} components >= 1, expected one")
        i = int(hits[0])
        out.insert(0, vocab.tokens[i])
        z[i] -= 1.0
        z /= alpha
        scale *= alpha
    raise MalformedCode(f"did not terminate within {max_steps} steps")


@dataclass
class UniquenessReport:
    """Outcome of exhaustively checking encodings for collisions."""

    vocab_size: int
    max_len: int
    alpha: float
    total_sequences: int
    collisions: list[tuple[tuple[str, ...], tuple[str, ...]]] = field(default_factory=list)


def uniqueness_check(vocab_size: int, max_len: int,
                     alpha: ForgettingFactor) -> UniquenessReport:
    """Encode every sequence of length <= max_len over a synthetic vocabulary
    and report all pairs whose codes agree component-wise within 1e-9.

    Enumeration is exhaustive (vocab_size^max_len growth); the caller keeps
    instances small.  Injectivity for alpha <= 0.5 predicts zero collisions;
    for alpha > 0.5 isolated collision-inducing factors exist, e.g. the
    positive root of a^2 + a = 1 pairs up length-3 sequences.
    """
    alpha = ForgettingFactor(alpha)
    vocab = Vocabulary.of_size(vocab_size)
    names = vocab.tokens[:vocab_size]

    seqs: list[tuple[str, ...]] = []
    codes: list[np.ndarray] = []
    for n in range(max_len + 1):
        for seq in itertools.product(names, repeat=n):
            seqs.append(seq)
            codes.append(encode(seq, vocab, alpha).values[:vocab_size])
    mat = np.asarray(codes)

    # Sort by first component and sweep: colliding codes agree within the
    # tolerance on every component, so in particular on the sort key.
    order = np.lexsort(mat.T[::-1])
    collisions = []
    n = len(order)
    for a in range(n):
        i = order[a]
        for b in range(a + 1, n):
            j = order[b]
            if mat[j, 0] - mat[i, 0] > COLLISION_TOL:
                break
            if np.max(np.abs(mat[i] - mat[j])) <= COLLISION_TOL:
                pair = (seqs[i], seqs[j]) if seqs[i] <= seqs[j] else (seqs[j], seqs[i])
                collisions.append(pair)
    collisions.sort()
    return UniquenessReport(
        vocab_size=vocab_size,
        max_len=max_len,
        alpha=float(alpha),
        total_sequences=len(seqs),
        collisions=collisions,
    )
