"""Run reports: tab-separated records plus matplotlib figures.

Training and evaluation both emit a delimited file (stable, byte-identical
for identical runs) and a rendered figure next to it.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

LOG_HEADER = ("epoch", "mean_loss", "lr", "dev_precision", "dev_recall", "dev_f1")


def format_log_line(record) -> str:
    return "\t".join([str(record.epoch)] +
                     [f"{v:.6f}" for v in (record.mean_loss, record.lr,
                                           record.dev_precision,
                                           record.dev_recall, record.dev_f1)])


def write_training_log(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(LOG_HEADER) + "\n")
        for rec in records:
            fh.write(format_log_line(rec) + "\n")


def plot_training_curves(path, records) -> None:
    epochs = [r.epoch for r in records]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    axes[0].plot(epochs, [r.mean_loss for r in records], color="tab:red")
    axes[0].set_xlabel("epoch")
    axes[0].set_ylabel("mean training loss")
    axes[1].plot(epochs, [r.lr for r in records], color="tab:orange")
    axes[1].set_xlabel("epoch")
    axes[1].set_ylabel("learning rate")
    axes[2].plot(epochs, [r.dev_f1 for r in records], label="F1", color="tab:blue")
    axes[2].plot(epochs, [r.dev_precision for r in records], label="P",
                 color="tab:green", alpha=0.6)
    axes[2].plot(epochs, [r.dev_recall for r in records], label="R",
                 color="tab:purple", alpha=0.6)
    axes[2].set_xlabel("epoch")
    axes[2].set_ylabel("dev score")
    axes[2].set_ylim(-0.02, 1.02)
    axes[2].legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_eval_report(path, result) -> None:
    """Per-class and overall scores as TSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class\tprecision\trecall\tf1\tpredicted\tgold\tcorrect\n")
        for cls, s in sorted(result.per_class.items()):
            fh.write(f"{cls}\t{s.precision:.6f}\t{s.recall:.6f}\t{s.f1:.6f}"
                     f"\t{s.n_predicted}\t{s.n_gold}\t{s.n_correct}\n")
        fh.write(f"ALL\t{result.precision:.6f}\t{result.recall:.6f}"
                 f"\t{result.f1:.6f}\t{result.n_predicted}\t{result.n_gold}"
                 f"\t{result.n_correct}\n")


def plot_eval_scores(path, result) -> None:
    classes = sorted(result.per_class)
    labels = classes + ["ALL"]
    p = [result.per_class[c].precision for c in classes] + [result.precision]
    r = [result.per_class[c].recall for c in classes] + [result.recall]
    f = [result.per_class[c].f1 for c in classes] + [result.f1]
    x = range(len(labels))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * len(labels)), 3.5))
    ax.bar([i - width for i in x], p, width, label="precision", color="tab:green")
    ax.bar(list(x), r, width, label="recall", color="tab:purple")
    ax.bar([i + width for i in x], f, width, label="F1", color="tab:blue")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_spans(fh, tagged) -> None:
    """One line per entity: doc, sentence, start, end, class, probability."""
    for span, prob in tagged:
        fh.write(f"{span.doc_id}\t{span.sentence}\t{span.start}\t{span.end}"
                 f"\t{span.label}\t{prob:.6f}\n")


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
