"""Column-format corpus ingestion.

One token per line with the tag in the last column, blank lines between
sentences, and "-DOCSTART-" lines between documents.  B-X/I-X tag runs
become entity spans; an I-X with no open span of the same class opens a
new one (lenient repair, as in IOB1-tagged data), logged per occurrence
at DEBUG with a WARNING summary per parse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .features import Sentence
from .errors import MalformedLine
from .pipeline import EntitySpan

logger = logging.getLogger(__name__)

DOCSTART = "-DOCSTART-"


@dataclass
class ConllDocument:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)
    gold_spans: list[EntitySpan] = field(default_factory=list)

    @property
    def entity_classes(self):
        return sorted({s.label for s in self.gold_spans})


def _tags_to_spans(tags, doc_id: str, sentence_index: int, line_nos, repairs):
    spans = []
    open_start, open_class = None, None

    def close(end):
        nonlocal open_start, open_class
        if open_class is not None:
            spans.append(EntitySpan(sentence=sentence_index, start=open_start,
                                    end=end, label=open_class, doc_id=doc_id))
        open_start, open_class = None, None

    for i, tag in enumerate(tags):
        if tag == "O":
            close(i)
        elif tag.startswith("B-"):
            close(i)
            open_start, open_class = i, tag[2:]
        elif tag.startswith("I-"):
            cls = tag[2:]
            if open_class != cls:
                close(i)
                if open_class is None:
                    repairs.append(line_nos[i])
                    logger.debug("line %d: I-%s without open %s span, starting new span",
                                 line_nos[i], cls, cls)
                else:
                    repairs.append(line_nos[i])
                    logger.debug("line %d: I-%s after %s span, starting new span",
                                 line_nos[i], cls, open_class)
                open_start, open_class = i, cls
        else:
            raise MalformedLine(line_nos[i], f"unrecognized tag {tag!r}")
    close(len(tags))
    return spans


def parse_conll(stream) -> list[ConllDocument]:
    """Parse column-format text into documents with sentences and gold spans.

    `stream` is an iterable of lines (an open file works).  Raises
    MalformedLine for lines with fewer than two columns.
    """
    docs: list[ConllDocument] = []
    tokens: list[str] = []
    tags: list[str] = []
    line_nos: list[int] = []
    repairs: list[int] = []
    current: ConllDocument | None = None

    def ensure_doc() -> ConllDocument:
        nonlocal current
        if current is None:
            current = ConllDocument(doc_id=f"doc{len(docs)}")
            docs.append(current)
        return current

    def flush_sentence():
        nonlocal tokens, tags, line_nos
        if not tokens:
            return
        doc = ensure_doc()
        idx = len(doc.sentences)
        doc.sentences.append(Sentence(tokens, doc_id=doc.doc_id, index=idx))
        doc.gold_spans.extend(_tags_to_spans(tags, doc.doc_id, idx, line_nos, repairs))
        tokens, tags, line_nos = [], [], []

    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush_sentence()
            continue
        cols = line.split()
        if cols[0] == DOCSTART:
            flush_sentence()
            current = ConllDocument(doc_id=f"doc{len(docs)}")
            docs.append(current)
            continue
        if len(cols) < 2:
            raise MalformedLine(line_no, f"expected token and tag columns, got {line!r}")
        tokens.append(cols[0])
        tags.append(cols[-1])
        line_nos.append(line_no)
    flush_sentence()

    docs = [d for d in docs if d.sentences]
    for i, d in enumerate(docs):
        if d.doc_id != f"doc{i}":
            _renumber(d, f"doc{i}")
    if repairs:
        logger.warning("%d lenient BIO repairs while parsing (first at line %d)",
                       len(repairs), repairs[0])
    return docs


def _renumber(doc: ConllDocument, new_id: str) -> None:
    doc.sentences = [Sentence(s.tokens, doc_id=new_id, index=s.index)
                     for s in doc.sentences]
    doc.gold_spans = [EntitySpan(sentence=g.sentence, start=g.start, end=g.end,
                                 label=g.label, doc_id=new_id)
                      for g in doc.gold_spans]
    doc.doc_id = new_id


def document_to_conll(doc: ConllDocument) -> str:
    """Render a document back to two-column format with BIO2 tags."""
    by_sentence: dict[int, list[EntitySpan]] = {}
    for g in doc.gold_spans:
        by_sentence.setdefault(g.sentence, []).append(g)
    lines = [DOCSTART, ""]
    for idx, sent in enumerate(doc.sentences):
        tags = ["O"] * len(sent)
        for g in by_sentence.get(idx, ()):
            tags[g.start] = f"B-{g.label}"
            for i in range(g.start + 1, g.end):
                tags[i] = f"I-{g.label}"
        lines.extend(f"{tok} {tag}" for tok, tag in zip(sent.tokens, tags))
        lines.append("")
    return "\n".join(lines) + "\n"


def to_character_level(doc: ConllDocument) -> ConllDocument:
    """Re-tokenize every sentence into single characters, remapping spans.

    Data that is already labelled one character per token passes through
    unchanged (token offsets are preserved).
    """
    out = ConllDocument(doc_id=doc.doc_id)
    span_map: dict[int, list[int]] = {}
    for idx, sent in enumerate(doc.sentences):
        chars: list[str] = []
        offsets = [0]
        for tok in sent.tokens:
            chars.extend(tok)
            offsets.append(len(chars))
        out.sentences.append(Sentence(chars, doc_id=doc.doc_id, index=idx))
        span_map[idx] = offsets
    for g in doc.gold_spans:
        offsets = span_map[g.sentence]
        out.gold_spans.append(EntitySpan(sentence=g.sentence,
                                         start=offsets[g.start],
                                         end=offsets[g.end],
                                         label=g.label, doc_id=g.doc_id))
    return out
