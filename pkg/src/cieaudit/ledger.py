"""Prediction ledger: ingest, validate and index prediction logs.

A ledger holds the predicted labels of one or more model populations over a
shared set of examples.  File formats:

* prediction log: CSV with columns
  ``example_id,population_id,model_id,predicted_label,true_label``
  (``true_label`` empty when unknown);
* ledger header: JSON declaring ``num_classes`` and the population specs;
* attribute table: CSV with ``example_id`` plus one 0/1 column per attribute.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

BASELINE = "baseline"
PRUNED = "pruned"
QUANTIZED = "quantized"
QUANT_KINDS = ("hybrid_int8", "fixedpoint_int8")


class LedgerError(Exception):
    """Base class for ledger validation failures."""


class DuplicateRecordError(LedgerError):
    pass


class UnknownPopulationError(LedgerError):
    pass


class LabelOutOfRangeError(LedgerError):
    pass


class IncompleteCoverageError(LedgerError):
    pass


class PairingError(LedgerError):
    pass


@dataclass(frozen=True)
class Compression:
    """Compression configuration of one population."""

    kind: str  # baseline | pruned | quantized
    target_sparsity: float | None = None
    quant_kind: str | None = None

    def __post_init__(self):
        if self.kind == PRUNED:
            if self.target_sparsity is None or not 0.0 < self.target_sparsity < 1.0:
                raise ValueError(f"pruned compression needs target_sparsity in (0,1), got {self.target_sparsity}")
        elif self.kind == QUANTIZED:
            if self.quant_kind not in QUANT_KINDS:
                raise ValueError(f"quant_kind must be one of {QUANT_KINDS}, got {self.quant_kind!r}")
        elif self.kind != BASELINE:
            raise ValueError(f"unknown compression kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == PRUNED:
            return f"pruned_{self.target_sparsity:g}"
        if self.kind == QUANTIZED:
            return f"quantized_{self.quant_kind}"
        return BASELINE

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.target_sparsity is not None:
            d["target_sparsity"] = self.target_sparsity
        if self.quant_kind is not None:
            d["quant_kind"] = self.quant_kind
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Compression":
        return cls(kind=d["kind"], target_sparsity=d.get("target_sparsity"), quant_kind=d.get("quant_kind"))

    @classmethod
    def baseline(cls) -> "Compression":
        return cls(BASELINE)

    @classmethod
    def pruned(cls, t: float) -> "Compression":
        return cls(PRUNED, target_sparsity=t)

    @classmethod
    def quantized(cls, kind: str) -> "Compression":
        return cls(QUANTIZED, quant_kind=kind)


@dataclass(frozen=True)
class PopulationSpec:
    population_id: str
    compression: Compression
    model_count: int

    def __post_init__(self):
        if self.model_count <= 0:
            raise ValueError("model_count must be positive")

    @property
    def is_baseline(self) -> bool:
        return self.compression.kind == BASELINE


@dataclass(frozen=True)
class LedgerHeader:
    num_classes: int
    populations: tuple[PopulationSpec, ...]

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be at least 2")
        ids = [p.population_id for p in self.populations]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate population_id in header")

    def spec(self, population_id: str) -> PopulationSpec:
        for p in self.populations:
            if p.population_id == population_id:
                return p
        raise UnknownPopulationError(
            f"unknown population {population_id!r}; known: {sorted(p.population_id for p in self.populations)}"
        )

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "populations": [
                {
                    "population_id": p.population_id,
                    "compression": p.compression.to_dict(),
                    "model_count": p.model_count,
                }
                for p in self.populations
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LedgerHeader":
        pops = tuple(
            PopulationSpec(
                population_id=p["population_id"],
                compression=Compression.from_dict(p["compression"]),
                model_count=int(p["model_count"]),
            )
            for p in d["populations"]
        )
        return cls(num_classes=int(d["num_classes"]), populations=pops)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LedgerHeader":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PredictionRecord:
    example_id: str
    population_id: str
    model_id: str
    predicted_label: int
    true_label: int | None = None


class Ledger:
    """Immutable index of prediction records.

    Build with :func:`ingest_predictions` or :meth:`Ledger.from_files`; after
    construction the ledger is read-only and safe for concurrent readers.
    """

    def __init__(self, header: LedgerHeader, predictions, true_labels, dropped_examples):
        self.header = header
        self.num_classes = header.num_classes
        # population_id -> model_id -> {example_id: label}
        self._predictions = predictions
        self._true_labels = true_labels
        self.dropped_examples = dropped_examples
        self._histogram_cache: dict[tuple[str, str], np.ndarray] = {}

    # -- introspection -----------------------------------------------------

    @property
    def population_ids(self) -> list[str]:
        return sorted(self._predictions)

    def models(self, population_id: str) -> list[str]:
        self._check_population(population_id)
        return sorted(self._predictions[population_id])

    def examples(self, population_id: str) -> list[str]:
        """Sorted ids of examples covered by every model of the population."""
        self._check_population(population_id)
        models = self._predictions[population_id]
        sets = [set(preds) for preds in models.values()]
        covered = set.intersection(*sets) if sets else set()
        return sorted(covered)

    def true_label(self, example_id: str) -> int | None:
        return self._true_labels.get(example_id)

    def has_true_labels(self, example_ids: Iterable[str]) -> bool:
        return all(e in self._true_labels for e in example_ids)

    def record_count(self) -> int:
        return sum(len(p) for m in self._predictions.values() for p in m.values())

    # -- histograms --------------------------------------------------------

    def histogram(self, population_id: str, example_id: str) -> np.ndarray:
        """Per-class vote counts of the population on one example."""
        key = (population_id, example_id)
        cached = self._histogram_cache.get(key)
        if cached is not None:
            return cached
        self._check_population(population_id)
        counts = np.zeros(self.num_classes, dtype=np.int64)
        models = self._predictions[population_id]
        missing = [m for m in models if example_id not in models[m]]
        if missing or not models:
            raise IncompleteCoverageError(
                f"incomplete coverage for example {example_id!r} in population "
                f"{population_id!r}: missing models {sorted(missing)}"
            )
        for preds in models.values():
            counts[preds[example_id]] += 1
        self._histogram_cache[key] = counts
        return counts

    def prediction_matrix(self, population_id: str, example_ids: Sequence[str]) -> np.ndarray:
        """(n_models, n_examples) int array of predicted labels."""
        self._check_population(population_id)
        models = self.models(population_id)
        out = np.empty((len(models), len(example_ids)), dtype=np.int64)
        for i, m in enumerate(models):
            preds = self._predictions[population_id][m]
            try:
                out[i] = [preds[e] for e in example_ids]
            except KeyError as exc:
                raise IncompleteCoverageError(
                    f"model {m!r} in population {population_id!r} has no prediction for {exc.args[0]!r}"
                ) from exc
        return out

    def true_label_vector(self, example_ids: Sequence[str]) -> np.ndarray:
        missing = [e for e in example_ids if e not in self._true_labels]
        if missing:
            raise LedgerError(f"missing ground truth for {len(missing)} examples, e.g. {missing[:3]}")
        return np.array([self._true_labels[e] for e in example_ids], dtype=np.int64)

    def _check_population(self, population_id: str) -> None:
        if population_id not in self._predictions:
            raise UnknownPopulationError(
                f"unknown population {population_id!r}; known: {self.population_ids}"
            )

    @classmethod
    def from_files(cls, log_path: str | Path, header_path: str | Path, drop_incomplete: bool = False) -> "Ledger":
        header = LedgerHeader.load(header_path)
        return ingest_predictions(read_prediction_log(log_path), header, drop_incomplete=drop_incomplete)


def read_prediction_log(path: str | Path) -> Iterable[PredictionRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for row in reader:
            true = row.get("true_label", "")
            yield PredictionRecord(
                example_id=row["example_id"],
                population_id=row["population_id"],
                model_id=row["model_id"],
                predicted_label=int(row["predicted_label"]),
                true_label=int(true) if true not in ("", None) else None,
            )


def write_prediction_log(path: str | Path, records: Iterable[PredictionRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["example_id", "population_id", "model_id", "predicted_label", "true_label"])
        for r in records:
            w.writerow([r.example_id, r.population_id, r.model_id, r.predicted_label,
                        "" if r.true_label is None else r.true_label])


def ingest_predictions(
    source: Iterable[PredictionRecord],
    header: LedgerHeader,
    drop_incomplete: bool = False,
) -> Ledger:
    """Validate and index a stream of prediction records.

    Rejects duplicate (example, population, model) triples, unknown
    populations and out-of-range labels.  Each model of a population must
    predict every example the population covers; with ``drop_incomplete``
    the offending examples are dropped (and counted) instead of raising.
    """
    known = {p.population_id for p in header.populations}
    predictions: dict[str, dict[str, dict[str, int]]] = {pid: {} for pid in known}
    true_labels: dict[str, int] = {}

    for rec in source:
        if rec.population_id not in known:
            raise UnknownPopulationError(
                f"unknown population {rec.population_id!r}; known: {sorted(known)}"
            )
        if not 0 <= rec.predicted_label < header.num_classes:
            raise LabelOutOfRangeError(
                f"label out of range: {rec.predicted_label} for example {rec.example_id!r} "
                f"(num_classes={header.num_classes})"
            )
        if rec.true_label is not None and not 0 <= rec.true_label < header.num_classes:
            raise LabelOutOfRangeError(
                f"true label out of range: {rec.true_label} for example {rec.example_id!r}"
            )
        by_model = predictions[rec.population_id].setdefault(rec.model_id, {})
        if rec.example_id in by_model:
            raise DuplicateRecordError(
                f"duplicate record ({rec.example_id!r}, {rec.population_id!r}, {rec.model_id!r})"
            )
        by_model[rec.example_id] = rec.predicted_label
        if rec.true_label is not None:
            prev = true_labels.get(rec.example_id)
            if prev is not None and prev != rec.true_label:
                raise LedgerError(
                    f"conflicting true labels for example {rec.example_id!r}: {prev} vs {rec.true_label}"
                )
            true_labels[rec.example_id] = rec.true_label

    dropped: dict[str, list[str]] = {}
    for pid, models in predictions.items():
        spec = header.spec(pid)
        if models and len(models) != spec.model_count:
            raise LedgerError(
                f"population {pid!r} declares model_count={spec.model_count} "
                f"but {len(models)} distinct models observed"
            )
        if not models:
            continue
        union = set()
        for preds in models.values():
            union |= set(preds)
        incomplete = sorted(
            e for e in union if any(e not in preds for preds in models.values())
        )
        if incomplete:
            if not drop_incomplete:
                missing = {
                    m: sorted(set(incomplete) - set(preds))[:5]
                    for m, preds in models.items()
                    if set(incomplete) - set(preds)
                }
                raise IncompleteCoverageError(
                    f"population {pid!r}: {len(incomplete)} examples not covered by all "
                    f"models; missing per model (first 5 shown): {missing}"
                )
            for preds in models.values():
                for e in incomplete:
                    preds.pop(e, None)
            dropped[pid] = incomplete
            log.warning("population %s: dropped %d incompletely covered examples", pid, len(incomplete))

    return Ledger(header, predictions, true_labels, dropped)


# -- population pairing ----------------------------------------------------


@dataclass(frozen=True)
class PairingReport:
    baseline_id: str
    variant_id: str
    n_baseline: int
    n_variant: int
    shared_examples: tuple[str, ...]
    frequency_mode: bool
    # histogram multipliers bringing both populations to a common total
    scale_baseline: int = 1
    scale_variant: int = 1

    @property
    def common_total(self) -> int:
        return self.n_baseline * self.scale_baseline


def validate_pairing(ledger: Ledger, baseline_id: str, variant_id: str, strict: bool = True) -> PairingReport:
    """Check two populations are comparable and return their shared examples.

    With ``strict`` (default) unequal population sizes are rejected; in
    frequency mode histograms are rescaled to the lcm of the two sizes so
    the distance formulas keep equal totals.
    """
    base_models = ledger.models(baseline_id)
    var_models = ledger.models(variant_id)
    n_b, n_v = len(base_models), len(var_models)
    if n_b != n_v and strict:
        raise PairingError(
            f"population size mismatch: {baseline_id!r} has {n_b} models, "
            f"{variant_id!r} has {n_v} (use frequency mode to compare anyway)"
        )
    shared = sorted(set(ledger.examples(baseline_id)) & set(ledger.examples(variant_id)))
    if not shared:
        raise PairingError(
            f"populations {baseline_id!r} and {variant_id!r} share no fully covered examples"
        )
    lcm = math.lcm(n_b, n_v)
    return PairingReport(
        baseline_id=baseline_id,
        variant_id=variant_id,
        n_baseline=n_b,
        n_variant=n_v,
        shared_examples=tuple(shared),
        frequency_mode=(n_b != n_v),
        scale_baseline=lcm // n_b,
        scale_variant=lcm // n_v,
    )


# -- attribute table -------------------------------------------------------


@dataclass
class AttributeTable:
    """Binary attributes per example, with optional intersections."""

    attribute_names: list[str]
    values: dict[str, dict[str, int]]  # example_id -> {attr: 0/1}
    intersections: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for name, attrs in self.intersections.items():
            self._check_intersection(name, attrs)

    def _check_intersection(self, name, attrs):
        unknown = [a for a in attrs if a not in self.attribute_names]
        if unknown:
            raise LedgerError(f"intersection {name!r} references unknown attributes {unknown}")

    def define_intersection(self, name: str, attrs: Sequence[str]) -> None:
        self._check_intersection(name, attrs)
        self.intersections[name] = tuple(attrs)

    @property
    def subgroup_names(self) -> list[str]:
        return list(self.attribute_names) + list(self.intersections)

    def has(self, example_id: str, subgroup: str) -> bool:
        row = self.values.get(example_id)
        if row is None:
            raise LedgerError(f"example {example_id!r} not in attribute table")
        if subgroup in self.intersections:
            return all(row[a] == 1 for a in self.intersections[subgroup])
        if subgroup not in self.attribute_names:
            raise LedgerError(f"unknown attribute {subgroup!r}; known: {self.subgroup_names}")
        return row[subgroup] == 1

    def mask(self, example_ids: Sequence[str], subgroup: str, negate: bool = False) -> np.ndarray:
        m = np.array([self.has(e, subgroup) for e in example_ids], dtype=bool)
        return ~m if negate else m

    def fraction(self, example_ids: Sequence[str], subgroup: str) -> float:
        if not len(example_ids):
            raise LedgerError("fraction over empty example set")
        return float(self.mask(example_ids, subgroup).mean())

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["example_id"] + self.attribute_names)
            for eid in sorted(self.values):
                row = self.values[eid]
                w.writerow([eid] + [row[a] for a in self.attribute_names])

    @classmethod
    def load(cls, path: str | Path) -> "AttributeTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[0] != "example_id":
                raise LedgerError(f"attribute table must start with example_id column, got {header[0]!r}")
            names = header[1:]
            values = {}
            for row in reader:
                values[row[0]] = {a: int(v) for a, v in zip(names, row[1:])}
        return cls(attribute_names=names, values=values)
