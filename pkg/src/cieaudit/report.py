"""Audit report assembly: divergence summary, accuracy partitions,
disaggregated subgroup rates and over-indexing.

Both the CLI and the HTTP service build their numbers here, so the two
surfaces can never drift apart.  All arithmetic is full precision; the
rendered table rounds to 2 decimals and prints ``undef`` for rates whose
denominator was zero.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .divergence import CieScore, audit_set_size, rank_and_threshold
from .ledger import AttributeTable, Ledger
from .metrics import (
    accuracy_partition,
    confusion_counts,
    normalized_difference,
    overindex_table,
    subgroup_rates,
)

log = logging.getLogger(__name__)

UNDEF = "undef"


@dataclass
class AuditRunManifest:
    """Provenance of one audit run; its hash is embedded in every artifact.

    The hash covers the audit configuration (populations, thresholds, seed)
    but not the timestamp or file locations, so reruns with identical
    configuration produce identical artifacts wherever they are written.
    """

    inputs: dict[str, str]
    baseline_id: str
    variant_id: str
    percentiles: list[float]
    rng_seed: int
    out_dir: str
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def hash(self) -> str:
        d = asdict(self)
        for transient in ("timestamp", "out_dir", "inputs"):
            d.pop(transient)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        d = asdict(self)
        d["manifest_hash"] = self.hash()
        Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _round(x, nd=2):
    return None if x is None else round(x, nd)


def _fmt(x):
    return UNDEF if x is None else f"{x:.2f}"


def _subgroup_masks(attributes: AttributeTable, example_ids: Sequence[str]):
    """(name, id-list) pairs: aggregate, each attribute and its complement,
    then declared intersections."""
    yield "aggregate", list(example_ids)
    for name in attributes.attribute_names:
        mask = attributes.mask(example_ids, name)
        yield name, [e for e, m in zip(example_ids, mask) if m]
        yield f"not_{name}", [e for e, m in zip(example_ids, mask) if not m]
    for name in attributes.intersections:
        mask = attributes.mask(example_ids, name)
        yield name, [e for e, m in zip(example_ids, mask) if m]


def build_report(
    ledger: Ledger,
    scores: Sequence[CieScore],
    baseline_id: str,
    variant_id: str,
    percentiles: Sequence[float] = (90.0, 95.0, 99.0),
    attributes: AttributeTable | None = None,
    train_fractions: dict[str, float] | None = None,
    rng_seed: int = 0,
    positive_class: int = 1,
) -> dict:
    """Machine-readable audit report for one baseline/variant comparison.

    Sections degrade gracefully: without ground truth only the divergence
    summary is emitted; without an attribute table the subgroup and
    over-index sections are omitted (with a notice).
    """
    example_ids = sorted(s.example_id for s in scores)
    m = len(example_ids)
    notes: list[str] = []
    taxis = np.array([s.taxicab for s in scores])
    modal_set = sorted(s.example_id for s in scores if s.modal_cie)
    report: dict = {
        "baseline_id": baseline_id,
        "variant_id": variant_id,
        "examples": m,
        "rng_seed": rng_seed,
        "positive_class": positive_class,
        "divergence": {
            "modal_cie_count": len(modal_set),
            "taxicab_mean": float(taxis.mean()),
            "taxicab_max": int(taxis.max()),
            "taxicab_nonzero": int((taxis > 0).sum()),
            "tie_count": int(sum(s.tie_flag for s in scores)),
        },
        "notes": notes,
    }
    if report["divergence"]["taxicab_nonzero"] == 0:
        notes.append("zero divergence on every example; audit sets are empty")

    audit_sets = {}
    for p in percentiles:
        selected = rank_and_threshold(scores, p, rng_seed=rng_seed)
        audit_sets[p] = [s.example_id for s in selected]

    have_truth = ledger.has_true_labels(example_ids)
    if not have_truth:
        notes.append("ground truth missing; divergence-only report")
    else:
        acc: dict = {}
        for pop in (baseline_id, variant_id):
            per_pop = {
                "all": _part_dict(accuracy_partition(ledger, pop, example_ids, modal_set)),
            }
            for p, aset in audit_sets.items():
                per_pop[f"p{p:g}"] = _part_dict(
                    accuracy_partition(ledger, pop, example_ids, aset)
                )
            acc[pop] = per_pop
        report["accuracy"] = acc

    if attributes is None:
        notes.append("no attribute table; subgroup and over-index sections omitted")
        return report

    if have_truth:
        subgroups = {}
        for name, ids in _subgroup_masks(attributes, example_ids):
            if not ids:
                subgroups[name] = {"empty": True}
                continue
            base_rates = subgroup_rates(confusion_counts(ledger, baseline_id, ids, positive_class))
            var_rates = subgroup_rates(confusion_counts(ledger, variant_id, ids, positive_class))
            subgroups[name] = {
                "size": len(ids),
                "baseline": base_rates,
                "variant": var_rates,
                "normalized_diff": {
                    k: normalized_difference(base_rates[k], var_rates[k]) for k in base_rates
                },
            }
        report["subgroups"] = subgroups

    if train_fractions is None:
        notes.append("no training fractions; over-index section omitted")
    else:
        names = [n for n in attributes.subgroup_names if n in train_fractions]
        skipped = [n for n in attributes.subgroup_names if n not in train_fractions]
        if skipped:
            notes.append(f"no training fraction for {skipped}; excluded from over-index table")
        over: dict = {}
        if modal_set:
            over["modal"] = [asdict(r) for r in overindex_table(attributes, train_fractions, modal_set, names)]
        for p, aset in audit_sets.items():
            if aset:
                over[f"p{p:g}"] = [asdict(r) for r in overindex_table(attributes, train_fractions, aset, names)]
        report["overindex"] = over
    return report


def _part_dict(part) -> dict:
    return {
        "cie_acc": part.cie_acc,
        "noncie_acc": part.noncie_acc,
        "all_acc": part.all_acc,
        "cie_count": part.cie_count,
        "total": part.total,
    }


def render_text(report: dict) -> str:
    """Human-readable rendering: divergence summary, accuracy table, and the
    Error/FPR/FNR table in the absolute-then-normalized layout."""
    lines = []
    lines.append(f"Audit report: {report['baseline_id']} vs {report['variant_id']}")
    lines.append(f"Examples: {report['examples']}")
    d = report["divergence"]
    lines.append(
        f"Modal CIEs: {d['modal_cie_count']}  "
        f"taxicab mean {d['taxicab_mean']:.2f} max {d['taxicab_max']} "
        f"nonzero {d['taxicab_nonzero']}  modal ties {d['tie_count']}"
    )
    for note in report["notes"]:
        lines.append(f"note: {note}")

    acc = report.get("accuracy")
    if acc:
        lines.append("")
        lines.append("Top-1 accuracy (CIE set / non-CIE / all), percent")
        cols = list(next(iter(acc.values())).keys())
        lines.append("  population      " + "".join(f"{c:>22}" for c in cols))
        for pop, per in acc.items():
            row = f"  {pop:<15}"
            for c in cols:
                p = per[c]
                row += f"{_fmt(p['cie_acc']):>7}/{_fmt(p['noncie_acc'])}/{_fmt(p['all_acc'])}".rjust(22)
            lines.append(row)

    sub = report.get("subgroups")
    if sub:
        names = [n for n in sub if not sub[n].get("empty")]
        lines.append("")
        lines.append("Error metrics per subgroup, percent")
        header = "  model      metric " + "".join(f"{n:>14}" for n in names)
        lines.append(header)
        for block, key in (("baseline", "baseline"), ("variant", "variant"),
                           ("norm.diff", "normalized_diff")):
            for metric in ("error", "fpr", "fnr"):
                row = f"  {block:<10} {metric:<6} "
                for n in names:
                    row += f"{_fmt(sub[n][key][metric]):>14}"
                lines.append(row)

    over = report.get("overindex")
    if over:
        lines.append("")
        lines.append("Over-indexing (train fraction -> CIE-set fraction, ratio)")
        for setname, rows in over.items():
            for r in rows:
                ratio = UNDEF if r["representation_ratio"] is None else f"{r['representation_ratio']:.2f}x"
                lines.append(
                    f"  [{setname}] {r['attribute']:<16} "
                    f"{r['train_fraction']:.4f} -> {r['cie_fraction']:.4f}  {ratio}"
                )
    return "\n".join(lines) + "\n"


def write_report(report: dict, out_dir: str | Path, stem: str, manifest_hash: str | None = None) -> dict[str, Path]:
    """Write report.json and report.txt; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if manifest_hash:
        report = {"manifest_hash": manifest_hash, **report}
    json_path = out_dir / f"{stem}.json"
    txt_path = out_dir / f"{stem}.txt"
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    text = render_text(report)
    if manifest_hash:
        text = f"# manifest_hash={manifest_hash}\n" + text
    txt_path.write_text(text)
    return {"json": json_path, "txt": txt_path}
