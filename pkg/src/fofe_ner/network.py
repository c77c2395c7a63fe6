"""Grouped feed-forward classifier.

Two dedicated ReLU stacks, one for the fragment feature group and one for
the context group, are merged by concatenation into a shared ReLU stack
that feeds a softmax output layer.  Forward, backward, and the loss are
written directly against numpy in double precision; gradients are exact
enough to survive central-finite-difference checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, StaleCache


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"  # relu | identity

    def __post_init__(self):
        if self.in_dim <= 0 or self.out_dim <= 0:
            raise ValueError("layer dimensions must be positive")
        if self.activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def dropout_mask(rng: np.random.Generator, shape, p: float) -> np.ndarray:
    """Inverted-dropout mask: keeps with probability 1-p, scaled by 1/(1-p)
    so that the masked activation is unbiased and inference needs no rescale."""
    return (rng.random(shape) >= p) / (1.0 - p)


@dataclass
class ForwardCache:
    """Everything the backward pass needs from one training forward pass."""

    fragment_in: np.ndarray
    context_in: np.ndarray
    layer_inputs: list      # input to each linear layer, in execution order
    preacts: list           # pre-activation of each layer
    masks: list             # dropout mask per hidden layer (None in infer mode)
    probs: np.ndarray


@dataclass
class Gradients:
    """Parameter gradients plus gradients w.r.t. the two input groups."""

    params: dict[str, np.ndarray]
    d_fragment: np.ndarray
    d_context: np.ndarray


class GroupedNetwork:
    """Parameters and passes for the grouped classifier.

    Layer layout, in execution order: fragment stack, context stack, shared
    stack (input = concatenation of the two stack outputs), output layer
    (identity activation followed by softmax).
    """

    def __init__(self, frag_specs, ctx_specs, shared_specs, out_spec, params):
        self.frag_specs = list(frag_specs)
        self.ctx_specs = list(ctx_specs)
        self.shared_specs = list(shared_specs)
        self.out_spec = out_spec
        self.params = params  # name -> ndarray

    @classmethod
    def init(cls, fragment_dims, context_dims, shared_dims, n_classes: int,
             seed: int = 0) -> "GroupedNetwork":
        """Build a network with uniform Glorot weights and zero biases.

        fragment_dims/context_dims are [input, hidden...] size chains for
        the dedicated stacks; shared_dims lists the shared hidden sizes
        (its input is implied by the stack outputs).  Deterministic given
        the seed.
        """
        if len(fragment_dims) < 2 or len(context_dims) < 2:
            raise ValueError("each dedicated stack needs at least one hidden layer")
        if not shared_dims:
            raise ValueError("need at least one shared layer")
        rng = np.random.default_rng(seed)
        frag_specs = [LayerSpec(a, b) for a, b in zip(fragment_dims, fragment_dims[1:])]
        ctx_specs = [LayerSpec(a, b) for a, b in zip(context_dims, context_dims[1:])]
        merged = fragment_dims[-1] + context_dims[-1]
        chain = [merged] + list(shared_dims)
        shared_specs = [LayerSpec(a, b) for a, b in zip(chain, chain[1:])]
        out_spec = LayerSpec(shared_dims[-1], n_classes, activation="identity")

        params = {}
        for stack, specs in (("frag", frag_specs), ("ctx", ctx_specs),
                             ("shared", shared_specs), ("out", [out_spec])):
            for i, spec in enumerate(specs):
                key = f"net.{stack}.{i}"
                params[f"{key}.W"] = glorot_uniform(rng, spec.in_dim, spec.out_dim)
                params[f"{key}.b"] = np.zeros(spec.out_dim)
        return cls(frag_specs, ctx_specs, shared_specs, out_spec, params)

    @property
    def n_classes(self) -> int:
        return self.out_spec.out_dim

    def _hidden(self):
        """(param key, spec) pairs for all hidden layers, in execution order."""
        for stack, specs in (("frag", self.frag_specs), ("ctx", self.ctx_specs),
                             ("shared", self.shared_specs)):
            for i, spec in enumerate(specs):
                yield f"net.{stack}.{i}", spec

    def forward(self, fragment: np.ndarray, context: np.ndarray,
                train: bool = False, dropout_p: float = 0.0,
                rng: np.random.Generator | None = None):
        """Run a batch through the network.

        Returns (probs, cache); cache is None in inference mode.  In train
        mode inverted dropout is applied to the output of every hidden
        layer.
        """
        fragment = np.atleast_2d(np.asarray(fragment, dtype=float))
        context = np.atleast_2d(np.asarray(context, dtype=float))
        if fragment.shape[1] != self.frag_specs[0].in_dim:
            raise DimensionMismatch(
                f"fragment group has dim {fragment.shape[1]}, "
                f"stack expects {self.frag_specs[0].in_dim}")
        if context.shape[1] != self.ctx_specs[0].in_dim:
            raise DimensionMismatch(
                f"context group has dim {context.shape[1]}, "
                f"stack expects {self.ctx_specs[0].in_dim}")
        if fragment.shape[0] != context.shape[0]:
            raise DimensionMismatch("fragment/context batch sizes differ")
        use_dropout = train and dropout_p > 0.0
        if use_dropout and rng is None:
            raise ValueError("train-mode dropout needs an rng")

        layer_inputs, preacts, masks = [], [], []

        def run_stack(x, stack, n):
            for i in range(n):
                W = self.params[f"net.{stack}.{i}.W"]
                b = self.params[f"net.{stack}.{i}.b"]
                layer_inputs.append(x)
                z = x @ W + b
                preacts.append(z)
                x = np.maximum(z, 0.0)
                if use_dropout:
                    m = dropout_mask(rng, x.shape, dropout_p)
                    x = x * m
                    masks.append(m)
                else:
                    masks.append(None)
            return x

        hf = run_stack(fragment, "frag", len(self.frag_specs))
        hc = run_stack(context, "ctx", len(self.ctx_specs))
        h = run_stack(np.concatenate([hf, hc], axis=1), "shared", len(self.shared_specs))

        layer_inputs.append(h)
        logits = h @ self.params["net.out.0.W"] + self.params["net.out.0.b"]
        probs = softmax(logits)
        if not train:
            return probs, None
        cache = ForwardCache(fragment_in=fragment, context_in=context,
                             layer_inputs=layer_inputs, preacts=preacts,
                             masks=masks, probs=probs)
        return probs, cache

    def backward(self, cache: ForwardCache, gold: np.ndarray) -> Gradients:
        """Gradients of the mean cross-entropy loss over the batch.

        Walks the softmax/cross-entropy identity back through the shared
        stack, splits at the concatenation point, and continues through
        both dedicated stacks down to the input groups.
        """
        gold = np.asarray(gold, dtype=np.intp)
        B = cache.probs.shape[0]
        if gold.shape != (B,):
            raise StaleCache(f"cache holds batch of {B}, got {gold.shape} labels")

        grads: dict[str, np.ndarray] = {}
        d = cache.probs.copy()
        d[np.arange(B), gold] -= 1.0
        d /= B

        h = cache.layer_inputs[-1]
        grads["net.out.0.W"] = h.T @ d
        grads["net.out.0.b"] = d.sum(axis=0)
        d = d @ self.params["net.out.0.W"].T

        n_frag, n_ctx = len(self.frag_specs), len(self.ctx_specs)
        keys = [key for key, _ in self._hidden()]

        def back_stack(d, lo, hi):
            for j in range(hi - 1, lo - 1, -1):
                if cache.masks[j] is not None:
                    d = d * cache.masks[j]
                d = d * (cache.preacts[j] > 0.0)
                x = cache.layer_inputs[j]
                grads[f"{keys[j]}.W"] = x.T @ d
                grads[f"{keys[j]}.b"] = d.sum(axis=0)
                d = d @ self.params[f"{keys[j]}.W"].T
            return d

        d = back_stack(d, n_frag + n_ctx, len(keys))
        split = self.frag_specs[-1].out_dim
        d_frag = back_stack(d[:, :split], 0, n_frag)
        d_ctx = back_stack(d[:, split:], n_frag, n_frag + n_ctx)
        return Gradients(params=grads, d_fragment=d_frag, d_context=d_ctx)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def specs_json(self) -> str:
        def enc(specs):
            return [[s.in_dim, s.out_dim, s.activation] for s in specs]
        return json.dumps({
            "frag": enc(self.frag_specs), "ctx": enc(self.ctx_specs),
            "shared": enc(self.shared_specs), "out": enc([self.out_spec]),
        })

    @classmethod
    def from_specs_json(cls, text: str, params) -> "GroupedNetwork":
        raw = json.loads(text)
        dec = lambda items: [LayerSpec(*it) for it in items]
        return cls(dec(raw["frag"]), dec(raw["ctx"]), dec(raw["shared"]),
                   dec(raw["out"])[0], params)


def loss(probs: np.ndarray, gold) -> float:
    """Mean negative log-probability of the gold classes.

    Probabilities are clamped at 1e-12 before the log, so the result is
    finite for any input.
    """
    probs = np.atleast_2d(probs)
    gold = np.asarray(gold, dtype=np.intp)
    p = np.clip(probs[np.arange(len(gold)), gold], 1e-12, None)
    return float(-np.log(p).mean())
