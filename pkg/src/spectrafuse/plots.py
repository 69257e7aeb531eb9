"""Static SVG report figures.

Text is kept as real ``<text>`` elements and every curve carries a ``gid``
so downstream tooling (and tests) can locate artists structurally.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_GROUP_COLORS = {"breast": "tab:red", "colon": "tab:orange", "control": "tab:blue"}


def _new_axes(title: str):
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(6.5, 5.0))
    ax.set_title(title)
    return fig, ax


def roc_svg(path: str | Path, curves: dict, title: str) -> Path:
    """Mean ROC per configuration with a +/- std band.

    ``curves`` maps configuration name -> (fpr, mean_tpr, std_tpr).
    """
    fig, ax = _new_axes(title)
    for name, (fpr, mean_tpr, std_tpr) in curves.items():
        (line,) = ax.plot(fpr, mean_tpr, label=name)
        line.set_gid(f"roc-mean-{name}")
        lo = (mean_tpr - std_tpr).clip(0.0, 1.0)
        hi = (mean_tpr + std_tpr).clip(0.0, 1.0)
        band = ax.fill_between(fpr, lo, hi, alpha=0.2, color=line.get_color())
        band.set_gid(f"roc-band-{name}")
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.legend(loc="lower right", fontsize=8)
    path = Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def learning_curve_svg(path: str | Path, rows: list[dict], title: str) -> Path:
    """AUC against mean training-set size with a +/- std band."""
    fig, ax = _new_axes(title)
    x = [r["n_train_mean"] for r in rows]
    mean = [r["auc_mean"] for r in rows]
    std = [r["auc_std"] for r in rows]
    (line,) = ax.plot(x, mean, marker="o")
    line.set_gid("learning-curve-mean")
    lo = [m - s for m, s in zip(mean, std)]
    hi = [min(m + s, 1.0) for m, s in zip(mean, std)]
    band = ax.fill_between(x, lo, hi, alpha=0.2)
    band.set_gid("learning-curve-band")
    ax.set_xlabel("Training samples")
    ax.set_ylabel("ROC-AUC")
    path = Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def pca_svg(path: str | Path, groups: list[str], coords, evr, title: str) -> Path:
    """2-D principal-component scatter colored by cohort group; axis labels
    carry the explained-variance percentages."""
    fig, ax = _new_axes(title)
    seen = []
    for g in groups:
        if g not in seen:
            seen.append(g)
    for g in seen:
        idx = [i for i, gg in enumerate(groups) if gg == g]
        sc = ax.scatter(coords[idx, 0], coords[idx, 1], s=14, alpha=0.75,
                        label=g, color=_GROUP_COLORS.get(g))
        sc.set_gid(f"pca-{g}")
    ax.set_xlabel(f"PC1 ({100.0 * evr[0]:.1f}% explained variance)")
    ax.set_ylabel(f"PC2 ({100.0 * evr[1]:.1f}% explained variance)")
    ax.legend(fontsize=8)
    path = Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
