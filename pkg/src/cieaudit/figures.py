"""Render audit figures to files alongside the delimited plot data.

Two figures per comparison:

* accuracy vs percentile threshold, baseline and variant curves;
* over-index scatter of train fraction vs CIE-set fraction.

PNG metadata is stripped so reruns are byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = dict(dpi=120, metadata={"Software": None})


def accuracy_vs_percentile(report: dict, out_dir: str | Path, stem: str = "accuracy_vs_percentile") -> list[Path]:
    """Line chart (and CSV) of CIE-set accuracy per percentile threshold."""
    acc = report.get("accuracy")
    if not acc:
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pcts = sorted(
        float(k[1:]) for k in next(iter(acc.values())) if k.startswith("p")
    )
    written = []

    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["population", "percentile", "cie_acc", "all_acc"])
        for pop, per in acc.items():
            for p in pcts:
                part = per[f"p{p:g}"]
                w.writerow([pop, p, part["cie_acc"], part["all_acc"]])
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for pop, per in acc.items():
        ys = [per[f"p{p:g}"]["cie_acc"] for p in pcts]
        ax.plot(pcts, ys, marker="o", label=pop)
        ax.axhline(per[f"p{pcts[0]:g}"]["all_acc"], linestyle="--", linewidth=0.8,
                   color=ax.lines[-1].get_color(), alpha=0.6)
    ax.set_xlabel("taxicab percentile threshold")
    ax.set_ylabel("top-1 accuracy on surfaced set (%)")
    ax.set_title("Accuracy on surfaced exemplars vs threshold")
    ax.legend()
    fig.tight_layout()
    png_path = out_dir / f"{stem}.png"
    fig.savefig(png_path, **_SAVE_KW)
    plt.close(fig)
    written.append(png_path)
    return written


def overindex_scatter(report: dict, out_dir: str | Path, stem: str = "overindex", set_name: str = "modal") -> list[Path]:
    """Scatter (and CSV) of attribute train fraction vs CIE-set fraction."""
    over = report.get("overindex", {})
    rows = over.get(set_name)
    if not rows:
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = out_dir / f"{stem}_{set_name}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["attribute", "train_fraction", "cie_fraction", "representation_ratio"])
        for r in rows:
            w.writerow([r["attribute"], r["train_fraction"], r["cie_fraction"],
                        "" if r["representation_ratio"] is None else r["representation_ratio"]])
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(5, 5))
    xs = [r["train_fraction"] for r in rows]
    ys = [r["cie_fraction"] for r in rows]
    ax.scatter(xs, ys)
    for r in rows:
        ax.annotate(r["attribute"], (r["train_fraction"], r["cie_fraction"]),
                    textcoords="offset points", xytext=(4, 4), fontsize=8)
    lim = max(max(xs), max(ys)) * 1.1 or 1.0
    ax.plot([0, lim], [0, lim], linestyle=":", color="gray", linewidth=0.8)
    ax.set_xlim(0, lim)
    ax.set_ylim(0, lim)
    ax.set_xlabel("fraction of training set")
    ax.set_ylabel(f"fraction of CIE set ({set_name})")
    ax.set_title("Attribute over-indexing in the CIE set")
    fig.tight_layout()
    png_path = out_dir / f"{stem}_{set_name}.png"
    fig.savefig(png_path, **_SAVE_KW)
    plt.close(fig)
    written.append(png_path)
    return written


def render_all(report: dict, out_dir: str | Path) -> list[Path]:
    written = accuracy_vs_percentile(report, out_dir)
    for set_name in report.get("overindex", {}):
        written += overindex_scatter(report, out_dir, set_name=set_name)
    return written
