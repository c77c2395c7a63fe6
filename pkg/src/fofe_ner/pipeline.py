"""Local-detection NER: candidate enumeration, supervision, span decoding,
and exact-match scoring.

Each sentence fragment up to a length cap is scored independently; the
decoder keeps, per sentence, a non-conflicting subset of the confident
predictions, chosen greedily by probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OverlappingGold
from .features import Fragment, Sentence

NONE_LABEL = "NONE"


class LabelSet:
    """Entity class names plus the reserved NONE class, always last."""

    def __init__(self, entity_classes):
        classes = list(entity_classes)
        if len(set(classes)) != len(classes):
            raise ValueError("duplicate class names")
        if NONE_LABEL in classes:
            raise ValueError(f"{NONE_LABEL} is reserved")
        self.classes = classes + [NONE_LABEL]
        self.index = {c: i for i, c in enumerate(self.classes)}
        self.none_index = len(self.classes) - 1

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    @property
    def entity_classes(self):
        return self.classes[:-1]


@dataclass(frozen=True)
class EntitySpan:
    """A typed entity occupying tokens [start, end) of a sentence."""

    sentence: int
    start: int
    end: int
    label: str
    doc_id: str = ""

    def __post_init__(self):
        if self.label == NONE_LABEL:
            raise ValueError("entity spans cannot carry the NONE class")
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span bounds [{self.start}, {self.end})")

    def key(self):
        return (self.doc_id, self.sentence, self.start, self.end, self.label)

    def overlaps(self, other: "EntitySpan") -> bool:
        return (self.doc_id == other.doc_id and self.sentence == other.sentence
                and self.start < other.end and other.start < self.end)


@dataclass(frozen=True)
class LabeledFragment:
    fragment: Fragment
    label: int


@dataclass
class CandidatePrediction:
    """A fragment with its probability distribution over classes + NONE."""

    fragment: Fragment
    distribution: np.ndarray


def enumerate_fragments(sentence: Sentence, max_len: int) -> list[Fragment]:
    """All spans of 1..max_len tokens, ordered by (start, length)."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    n = len(sentence)
    return [Fragment(sentence, i, i + k)
            for i in range(n)
            for k in range(1, min(max_len, n - i) + 1)]


def label_candidates(fragments, gold_spans, labels: LabelSet) -> list[LabeledFragment]:
    """Exact-match supervision: a fragment equal to a gold span gets that
    span's class, everything else gets NONE."""
    by_sentence: dict[tuple, dict] = {}
    seen: dict[tuple, list[EntitySpan]] = {}
    for g in gold_spans:
        sent_key = (g.doc_id, g.sentence)
        for other in seen.setdefault(sent_key, []):
            if g.overlaps(other):
                raise OverlappingGold(f"{g} overlaps {other}")
        seen[sent_key].append(g)
        if g.label not in labels.index:
            raise KeyError(f"gold label {g.label!r} is not in the label set "
                           f"{labels.entity_classes}")
        by_sentence[(g.doc_id, g.sentence, g.start, g.end)] = labels.index[g.label]

    out = []
    for frag in fragments:
        key = (frag.sentence.doc_id, frag.sentence.index, frag.start, frag.end)
        out.append(LabeledFragment(frag, by_sentence.get(key, labels.none_index)))
    return out


def decode(predictions, labels: LabelSet, threshold: float = 0.5) -> list[EntitySpan]:
    """Greedy non-overlapping span selection.

    Keeps candidates whose best entity-class probability is at least the
    threshold and not below the NONE probability, then accepts them in
    order of decreasing probability (ties: longer span, then smaller
    start), skipping any that overlap an accepted span.  Output is in
    textual order.
    """
    survivors = []
    for pred in predictions:
        dist = np.asarray(pred.distribution, dtype=float)
        best = int(np.argmax(dist[:labels.none_index]))
        p = float(dist[best])
        if p < threshold or p < float(dist[labels.none_index]):
            continue
        frag = pred.fragment
        survivors.append((p, frag, labels.classes[best]))

    survivors.sort(key=lambda t: (-t[0], -(t[1].end - t[1].start), t[1].start,
                                  t[1].sentence.index, t[1].sentence.doc_id))
    accepted: list[EntitySpan] = []
    for p, frag, cls in survivors:
        span = EntitySpan(sentence=frag.sentence.index, start=frag.start,
                          end=frag.end, label=cls, doc_id=frag.sentence.doc_id)
        if not any(span.overlaps(a) for a in accepted):
            accepted.append(span)
    accepted.sort(key=lambda s: (s.doc_id, s.sentence, s.start, s.end))
    return accepted


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    n_predicted: int
    n_gold: int
    n_correct: int


@dataclass
class EvalResult:
    precision: float
    recall: float
    f1: float
    per_class: dict[str, ClassScores] = field(default_factory=dict)
    n_predicted: int = 0
    n_gold: int = 0
    n_correct: int = 0


def _prf(n_correct: int, n_predicted: int, n_gold: int):
    p = n_correct / n_predicted if n_predicted else 0.0
    r = n_correct / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def evaluate(predicted, gold) -> EvalResult:
    """Exact-match micro P/R/F1 with a per-class breakdown.

    A prediction counts iff its (document, sentence, start, end, class)
    all match a gold span.  Empty denominators score 0.
    """
    pred_keys = {s.key() for s in predicted}
    gold_keys = {s.key() for s in gold}
    correct = pred_keys & gold_keys
    p, r, f1 = _prf(len(correct), len(pred_keys), len(gold_keys))
    result = EvalResult(precision=p, recall=r, f1=f1,
                        n_predicted=len(pred_keys), n_gold=len(gold_keys),
                        n_correct=len(correct))
    classes = sorted({k[-1] for k in pred_keys | gold_keys})
    for cls in classes:
        np_ = sum(1 for k in pred_keys if k[-1] == cls)
        ng = sum(1 for k in gold_keys if k[-1] == cls)
        nc = sum(1 for k in correct if k[-1] == cls)
        cp, cr, cf = _prf(nc, np_, ng)
        result.per_class[cls] = ClassScores(cp, cr, cf, np_, ng, nc)
    return result
