import numpy as np
from matplotlib import pyplot as plt


def plot_comparison(table, filename=None, **kwargs):
    """
    Draw a bar plot of mean time and energy per workload (with standard
    deviation error bars) from a :class:`hdqual.metering.ComparisonTable`.
    The ratio relative to the reference workload is written next to each
    bar.

    table
         a ComparisonTable returned by :func:`hdqual.metering.compare`
    filename
         if given, the figure is saved there

    usage:

    >>> table = compare([("hdc_fit", fit_hdc), ("mlp_fit", fit_mlp)], src,
    ...                 reference="mlp_fit")
    >>> plot_comparison(table, "bench.png")

    """

    summary = table.summary
    names = list(summary.index)
    xpos = np.arange(len(names))

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    panels = [
        ("duration_mean_s", "duration_std_s", "speedup", "Mean time (s)"),
        ("energy_mean_j", "energy_std_j", "energy_ratio", "Mean energy (J)"),
    ]

    for ax, (mean, std, ratio, label) in zip(axes, panels):
        ax.bar(xpos, summary[mean], yerr=summary[std], capsize=4, **kwargs)
        for x, y, r in zip(xpos, summary[mean], summary[ratio]):
            ax.text(x, y, "{:.1f}x".format(r), ha="center", va="bottom")
        ax.set_xticks(xpos)
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel(label)
        ax.grid(True, axis="y")

    fig.suptitle("relative to '{}'".format(table.reference))
    fig.tight_layout()

    if filename is not None:
        fig.savefig(filename)
    return fig


def plot_confusion(cm, filename=None, cmap="Blues"):
    """
    Draw a confusion matrix (rows: true label, columns: predicted label)
    with the counts written in each cell.
    """

    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.imshow(cm.counts, cmap=cmap)
    ticks = np.arange(len(cm.labels))
    ax.set_xticks(ticks)
    ax.set_yticks(ticks)
    ax.set_xticklabels(cm.labels)
    ax.set_yticklabels(cm.labels)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    for (row, col), count in np.ndenumerate(cm.counts):
        ax.text(col, row, str(count), ha="center", va="center")
    fig.tight_layout()

    if filename is not None:
        fig.savefig(filename)
    return fig
