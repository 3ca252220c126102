"""Disaggregated error metrics and compression-impact summaries.

Rates are pooled over every model of a population (count-identical to
averaging per-model rates when coverage is complete).  Zero denominators
yield ``None`` rather than 0 so degenerate subgroups stay visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ledger import AttributeTable, Ledger, LedgerError


class MetricsError(LedgerError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    positive_class: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        if other.positive_class != self.positive_class:
            raise MetricsError("cannot add confusion counts with different positive classes")
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp,
            self.tn + other.tn, self.fn + other.fn, self.positive_class,
        )


def confusion_counts(
    ledger: Ledger,
    population_id: str,
    example_ids: Sequence[str],
    positive_class: int = 1,
) -> ConfusionCounts:
    """Pooled confusion counts over all models of a population on a subgroup."""
    if not len(example_ids):
        raise MetricsError("empty subgroup")
    preds = ledger.prediction_matrix(population_id, example_ids)
    truth = ledger.true_label_vector(example_ids)
    pos_pred = preds == positive_class
    pos_true = np.broadcast_to(truth == positive_class, preds.shape)
    return ConfusionCounts(
        tp=int((pos_pred & pos_true).sum()),
        fp=int((pos_pred & ~pos_true).sum()),
        tn=int((~pos_pred & ~pos_true).sum()),
        fn=int((~pos_pred & pos_true).sum()),
        positive_class=positive_class,
    )


def subgroup_rates(c: ConfusionCounts) -> dict[str, float | None]:
    """Error, FPR and FNR as percentages; None where the denominator is zero."""

    def rate(num, den):
        return 100.0 * num / den if den > 0 else None

    return {
        "error": rate(c.fp + c.fn, c.total),
        "fpr": rate(c.fp, c.fp + c.tn),
        "fnr": rate(c.fn, c.fn + c.tp),
    }


def normalized_difference(baseline_rate: float | None, compressed_rate: float | None) -> float | None:
    """Relative change of a rate vs baseline, as a percentage; None if undefined."""
    if baseline_rate is None or compressed_rate is None or baseline_rate == 0:
        return None
    return 100.0 * (compressed_rate - baseline_rate) / baseline_rate


@dataclass(frozen=True)
class AccuracyPartition:
    cie_acc: float | None
    noncie_acc: float | None
    all_acc: float
    cie_count: int
    total: int


def accuracy_partition(
    ledger: Ledger,
    population_id: str,
    example_ids: Sequence[str],
    audit_set: Sequence[str],
) -> AccuracyPartition:
    """Top-1 accuracy (percent) on the audit set, its complement and all examples.

    An empty audit set or complement gives None for that side; the weighted
    average identity all = (cie*|A| + noncie*(M-|A|)) / M holds otherwise.
    """
    if not len(example_ids):
        raise MetricsError("empty example set")
    audit = set(audit_set)
    unknown = audit - set(example_ids)
    if unknown:
        raise MetricsError(f"audit set contains {len(unknown)} examples outside the universe")
    preds = ledger.prediction_matrix(population_id, example_ids)
    truth = ledger.true_label_vector(example_ids)
    correct = preds == truth  # (models, examples)
    in_audit = np.array([e in audit for e in example_ids], dtype=bool)

    def acc(mask):
        n = int(mask.sum())
        return float(100.0 * correct[:, mask].mean()) if n else None

    return AccuracyPartition(
        cie_acc=acc(in_audit),
        noncie_acc=acc(~in_audit),
        all_acc=float(100.0 * correct.mean()),
        cie_count=int(in_audit.sum()),
        total=len(example_ids),
    )


@dataclass(frozen=True)
class OverindexRow:
    attribute: str
    train_fraction: float
    cie_fraction: float
    representation_ratio: float | None  # None when train_fraction is 0


def overindex_table(
    attributes: AttributeTable,
    train_fractions: dict[str, float],
    audit_set: Sequence[str],
    names: Sequence[str] | None = None,
) -> list[OverindexRow]:
    """How much each attribute is over-represented in the audit set."""
    if not len(audit_set):
        raise MetricsError("empty audit set")
    rows = []
    for name in (attributes.subgroup_names if names is None else names):
        if name not in train_fractions:
            raise MetricsError(f"no training fraction for attribute {name!r}")
        train_frac = float(train_fractions[name])
        cie_frac = attributes.fraction(list(audit_set), name)
        ratio = cie_frac / train_frac if train_frac > 0 else None
        rows.append(OverindexRow(name, train_frac, cie_frac, ratio))
    return rows
