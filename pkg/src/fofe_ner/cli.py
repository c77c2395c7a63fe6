"""Command-line interface.

Subcommands: train, eval, tag, synth, and fofe-inspect (encode/decode/
uniqueness utilities).  Reports are written as TSV files with matplotlib
figures rendered alongside.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import report
from .config import PROFILES, resolve_config
from .conll import parse_conll, to_character_level
from .embeddings import load_embeddings
from .errors import FofeNerError
from .features import Sentence
from .fofe import (ForgettingFactor, FofeCode, Vocabulary, decode as fofe_decode,
                   encode, uniqueness_check)
from .model import NerModel, build_model
from .pipeline import LabelSet, enumerate_fragments, evaluate, label_candidates
from .training import train as run_training


@click.group()
def main():
    """Span-based NER with ordinally forgetting encodings."""


def _fail(exc) -> "click.ClickException":
    return click.ClickException(str(exc))


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"expected key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


def _load_config(profile, config_path, overrides):
    file_text = None
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            file_text = fh.read()
    try:
        return resolve_config(profile=profile, file_text=file_text,
                              overrides=_parse_overrides(overrides))
    except (KeyError, ValueError) as exc:
        raise _fail(exc)


def _load_docs(path, tokenization):
    with open(path, encoding="utf-8") as fh:
        docs = parse_conll(fh)
    if tokenization == "character":
        docs = [to_character_level(d) for d in docs]
    return docs


@main.command(name="train")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Flat key=value configuration file.")
@click.option("--profile", type=click.Choice(sorted(PROFILES)),
              help="Named hyper-parameter profile.")
@click.option("-o", "--override", "overrides", multiple=True,
              help="Override any config key, e.g. -o max_epochs=20.")
@click.option("--out", "out_dir", default="train_out", show_default=True,
              help="Output directory for checkpoint, log, and figures.")
def train_cmd(config_path, profile, overrides, out_dir):
    """Train a model from a config file and/or profile."""
    cfg = _load_config(profile, config_path, overrides)
    for key in ("train_file", "dev_file", "embeddings_file"):
        if not getattr(cfg, key):
            raise _fail(f"config key {key} is required for training")
    try:
        train_docs = _load_docs(cfg.train_file, cfg.tokenization)
        dev_docs = _load_docs(cfg.dev_file, cfg.tokenization)
        with open(cfg.embeddings_file, encoding="utf-8") as fh:
            cased, uncased = load_embeddings(fh, seed=cfg.seed)
    except (OSError, FofeNerError) as exc:
        raise _fail(exc)

    if cfg.labels_file:
        with open(cfg.labels_file, encoding="utf-8") as fh:
            classes = [line.strip() for line in fh if line.strip()]
    else:
        classes = sorted({g.label for d in train_docs for g in d.gold_spans})
    if not classes:
        raise _fail("no entity classes: annotate the training data or "
                    "provide labels_file")
    labels = LabelSet(classes)
    model = build_model(
        cased, uncased, labels,
        fragment_size=cfg.fragment_layers, context_size=cfg.context_layers,
        shared_size=cfg.shared_layers, fragment_depth=cfg.fragment_depth,
        context_depth=cfg.context_depth, shared_depth=cfg.shared_depth,
        char_embed_dim=cfg.char_embed_dim, conv_filters=cfg.conv_filters,
        alpha_word=cfg.alpha_word, alpha_char=cfg.alpha_char,
        max_fragment_len=cfg.max_fragment_len, threshold=cfg.threshold,
        seed=cfg.seed, tokenization=cfg.tokenization)

    candidates = []
    try:
        for doc in train_docs:
            for sent in doc.sentences:
                frags = enumerate_fragments(sent, cfg.max_fragment_len)
                candidates.extend(label_candidates(frags, doc.gold_spans, labels))
    except (KeyError, FofeNerError) as exc:
        raise _fail(exc)

    def progress(rec):
        click.echo(report.format_log_line(rec))

    click.echo("\t".join(report.LOG_HEADER))
    try:
        result = run_training(model, candidates, dev_docs, cfg.training(),
                              progress=progress)
    except FofeNerError as exc:
        raise _fail(exc)

    report.ensure_dir(out_dir)
    model_path = os.path.join(out_dir, "model.npz")
    log_path = os.path.join(out_dir, "training_log.tsv")
    fig_path = os.path.join(out_dir, "training_curves.png")
    model.save(model_path)
    report.write_training_log(log_path, result.log)
    report.plot_training_curves(fig_path, result.log)
    click.echo(f"best epoch {result.best_epoch} dev F1 {result.best_f1:.4f}")
    click.echo(f"wrote {model_path}, {log_path}, {fig_path}")


@main.command(name="eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="eval_out", show_default=True)
def eval_cmd(model_path, test_path, out_dir):
    """Score a model on a column-format test file."""
    try:
        model = NerModel.load(model_path)
        docs = _load_docs(test_path, model.tokenization)
    except (OSError, ValueError, FofeNerError) as exc:
        raise _fail(exc)
    predicted = []
    gold = []
    for doc in docs:
        predicted.extend(span for span, _ in model.tag(doc.sentences))
        gold.extend(doc.gold_spans)
    result = evaluate(predicted, gold)

    report.ensure_dir(out_dir)
    tsv_path = os.path.join(out_dir, "eval_report.tsv")
    fig_path = os.path.join(out_dir, "eval_scores.png")
    report.write_eval_report(tsv_path, result)
    report.plot_eval_scores(fig_path, result)
    for cls, s in sorted(result.per_class.items()):
        click.echo(f"{cls}\tP {s.precision:.4f}\tR {s.recall:.4f}\tF1 {s.f1:.4f}")
    click.echo(f"ALL\tP {result.precision:.4f}\tR {result.recall:.4f}"
               f"\tF1 {result.f1:.4f}")
    click.echo(f"wrote {tsv_path}, {fig_path}")


@main.command(name="tag")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", default="-",
              help="Tokenized text, one sentence per line ('-' for stdin).")
@click.option("--out", "out_path", default="-",
              help="Where to write the span TSV ('-' for stdout).")
def tag_cmd(model_path, input_path, out_path):
    """Tag whitespace-tokenized sentences with entity spans."""
    try:
        model = NerModel.load(model_path)
    except (OSError, ValueError) as exc:
        raise _fail(exc)
    if input_path == "-":
        lines = sys.stdin.read().splitlines()
        doc_id = "stdin"
    else:
        with open(input_path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        doc_id = os.path.splitext(os.path.basename(input_path))[0]
    sentences = []
    for i, line in enumerate(lines):
        tokens = line.split()
        if not tokens:
            continue
        if model.tokenization == "character":
            tokens = [c for tok in tokens for c in tok]
        sentences.append(Sentence(tokens, doc_id=doc_id, index=i))
    tagged = model.tag(sentences) if sentences else []
    if out_path == "-":
        report.write_spans(sys.stdout, tagged)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            report.write_spans(fh, tagged)


@main.command(name="synth")
@click.option("--out", "out_dir", default="synthetic_data", show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--train-sentences", default=50, show_default=True)
@click.option("--dev-sentences", default=20, show_default=True)
def synth_cmd(out_dir, seed, train_sentences, dev_sentences):
    """Generate the bundled synthetic corpus (data files + config)."""
    from .synthetic import write_corpus

    paths = write_corpus(out_dir, n_train=train_sentences,
                         n_dev=dev_sentences, seed=seed)
    click.echo(f"wrote {paths['config_file']}")
    click.echo(f"train with: fofe-ner train --profile synthetic "
               f"--config {paths['config_file']} --out {out_dir}/run")


@main.group(name="fofe-inspect")
def fofe_inspect():
    """Encode, decode, and uniqueness utilities for the sequence encoding."""


def _vocab_from_option(vocab_str) -> Vocabulary:
    tokens = [t for t in vocab_str.split(",") if t]
    if not tokens:
        raise click.BadParameter("vocabulary must list at least one token")
    return Vocabulary(tokens)


@fofe_inspect.command(name="encode")
@click.option("--alpha", default=0.5, show_default=True)
@click.option("--vocab", "vocab_str", required=True,
              help="Comma-separated token list, e.g. A,B,C.")
@click.option("--reverse", "reverse_", is_flag=True,
              help="Encode right to left instead.")
@click.argument("tokens", nargs=-1, required=True)
def encode_cmd(alpha, vocab_str, reverse_, tokens):
    """Print the encoding of a token sequence."""
    vocab = _vocab_from_option(vocab_str)
    n_shown = len([t for t in vocab_str.split(",") if t])
    try:
        a = ForgettingFactor(alpha)
    except ValueError as exc:
        raise _fail(exc)
    seq = list(tokens)[::-1] if reverse_ else list(tokens)
    code = encode(seq, vocab, a)
    click.echo(" ".join(f"{v:g}" for v in code.values[:n_shown]))


@fofe_inspect.command(name="decode")
@click.option("--alpha", default=0.5, show_default=True)
@click.option("--vocab", "vocab_str", required=True)
@click.argument("values", nargs=-1, required=True, type=float)
def decode_cmd(alpha, vocab_str, values):
    """Recover the token sequence from an encoding."""
    vocab = _vocab_from_option(vocab_str)
    vec = np.zeros(len(vocab))
    if len(values) > len(vocab):
        raise _fail(f"{len(values)} components but vocabulary has {len(vocab)}")
    vec[:len(values)] = values
    try:
        code = FofeCode(values=vec, alpha=ForgettingFactor(alpha), length=-1)
        tokens = fofe_decode(code, vocab)
    except (ValueError, FofeNerError) as exc:
        raise _fail(exc)
    click.echo(" ".join(tokens))


@fofe_inspect.command(name="uniqueness")
@click.option("--vocab-size", default=2, show_default=True)
@click.option("--max-len", default=5, show_default=True)
@click.option("--alpha", default=0.5, show_default=True)
@click.option("--show", default=10, show_default=True,
              help="How many collision pairs to print.")
def uniqueness_cmd(vocab_size, max_len, alpha, show):
    """Exhaustively search small instances for encoding collisions."""
    try:
        rep = uniqueness_check(vocab_size, max_len, ForgettingFactor(alpha))
    except ValueError as exc:
        raise _fail(exc)
    click.echo(f"sequences: {rep.total_sequences}")
    click.echo(f"collisions: {len(rep.collisions)}")
    for a, b in rep.collisions[:show]:
        click.echo(f"  {' '.join(a) or '(empty)'}  ==  {' '.join(b) or '(empty)'}")


if __name__ == "__main__":
    main()
