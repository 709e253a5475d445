"""Delimited reports and the figures rendered alongside them.

Every report path writes a TSV first (the machine-readable artifact,
formatted with fixed precision so identical runs are byte-identical) and
then a PNG figure next to it for quick inspection.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, float):
        return "%.6f" % x
    return str(x)


def tune_trace_figure(report, path):
    """BLEU and Smatch across tuning evaluations, accepted steps marked."""
    fig, ax1 = plt.subplots(figsize=(7, 4))
    xs = range(len(report.evaluations))
    bleus = [e.bleu for e in report.evaluations]
    smatches = [e.smatch for e in report.evaluations]
    ax1.plot(xs, bleus, color="tab:blue", label="BLEU (AMRese)", lw=1.2)
    ax1.set_xlabel("evaluation")
    ax1.set_ylabel("BLEU (AMRese)", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(xs, smatches, color="tab:red", label="Smatch F", lw=1.2)
    ax2.set_ylabel("Smatch F", color="tab:red")
    accepted = [i for i, e in enumerate(report.evaluations) if e.accepted]
    ax1.plot(accepted, [bleus[i] for i in accepted], "o", color="tab:blue", ms=4)
    ax2.plot(accepted, [smatches[i] for i in accepted], "o", color="tab:red", ms=4)
    title = "objective: %s" % report.objective
    if report.correlation is not None:
        title += "   corr(BLEU, Smatch) = %.3f" % report.correlation
    ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def score_figure(corpus_scores, per_sentence_f, path):
    """Corpus P/R/F bars per data set plus a per-sentence F histogram."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    names = list(corpus_scores)
    metrics = ("precision", "recall", "f_score")
    width = 0.25
    for k, metric in enumerate(metrics):
        xs = [i + (k - 1) * width for i in range(len(names))]
        ys = [getattr(corpus_scores[n], metric) for n in names]
        ax1.bar(xs, ys, width=width, label=metric.replace("_score", ""))
    ax1.set_xticks(range(len(names)))
    ax1.set_xticklabels(names)
    ax1.set_ylim(0, 1.05)
    ax1.set_title("corpus Smatch")
    ax1.legend(fontsize=8)
    values = [f for fs in per_sentence_f.values() for f in fs]
    if values:
        ax2.hist(values, bins=20, range=(0.0, 1.0), color="tab:gray")
    ax2.set_title("per-sentence F")
    ax2.set_xlabel("Smatch F")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def crossings_figure(before, after, path):
    """Histogram of per-sentence alignment crossings before/after
    reordering."""
    fig, ax = plt.subplots(figsize=(6, 4))
    top = max(before + after) if (before or after) else 1
    bins = range(0, max(top + 2, 2))
    ax.hist([before, after], bins=bins, label=["before", "after"],
            color=["tab:orange", "tab:green"])
    ax.set_xlabel("crossings per sentence")
    ax.set_ylabel("sentences")
    total_before, total_after = sum(before), sum(after)
    if total_before:
        pct = 100.0 * (total_before - total_after) / total_before
        ax.set_title("crossing reduction: %.1f%%" % pct)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
