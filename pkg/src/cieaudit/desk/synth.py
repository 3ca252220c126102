"""Synthetic long-tail binary classification data with protected attributes.

The generator mimics the regime where a rare attribute carries its own,
weaker predictive signal: models must dedicate capacity to the minority
pattern, and capacity-starved (compressed) models lose it first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ledger import AttributeTable, LedgerError


class DatasetError(LedgerError):
    pass


@dataclass(frozen=True)
class AttributeSpec:
    """One binary attribute of the synthetic population.

    ``signal_features`` index the feature block that carries the label signal
    for examples with this attribute; ``signal_strength`` scales it.  An
    attribute with no signal features is decorative (useful as an
    over-indexing control).
    """

    name: str
    frequency: float
    signal_features: tuple[int, ...] = ()
    signal_strength: float = 0.0
    # constant mean shift on these features, independent of the label
    shift_features: tuple[int, ...] = ()
    shift: float = 0.0


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    num_examples: int = 12000
    num_features: int = 20
    test_fraction: float = 1.0 / 6.0
    # label signal for examples carrying no signal-bearing attribute
    default_signal_features: tuple[int, ...] = (0, 1, 2, 3, 4)
    default_signal_strength: float = 1.8
    attributes: tuple[AttributeSpec, ...] = (
        AttributeSpec("minority", 0.05, signal_features=(5, 6, 7, 8, 9), signal_strength=1.0),
        AttributeSpec("common", 0.30, shift_features=(10, 11), shift=0.5),
    )
    noise_level: float = 1.0
    # per-example multiplier on the signal magnitude (spread of margins)
    margin_spread: float = 0.35
    # fraction of examples with near-zero margin (coin flips for any model)
    ambiguous_fraction: float = 0.0
    ambiguous_margin: float = 0.1
    label_noise: float = 0.02
    seed: int = 0

    def validate(self) -> None:
        if self.num_examples < 10:
            raise DatasetError("num_examples too small")
        if not 0 < self.test_fraction < 1:
            raise DatasetError("test_fraction must be in (0,1)")
        for a in self.attributes:
            if not 0.0 < a.frequency < 1.0:
                raise DatasetError(f"attribute {a.name!r}: frequency must be in (0,1), got {a.frequency}")
            for idx in a.signal_features + a.shift_features:
                if idx >= self.num_features:
                    raise DatasetError(f"attribute {a.name!r} references feature {idx} >= num_features")
        for idx in self.default_signal_features:
            if idx >= self.num_features:
                raise DatasetError("default signal feature out of range")


@dataclass
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    train_ids: list[str]
    test_ids: list[str]
    train_attributes: AttributeTable
    test_attributes: AttributeTable
    spec: SyntheticDatasetSpec = field(repr=False, default=None)

    @property
    def train_fractions(self) -> dict[str, float]:
        ids = self.train_ids
        return {
            name: self.train_attributes.fraction(ids, name)
            for name in self.train_attributes.subgroup_names
        }

    def save_attribute_table(self, path: str | Path) -> None:
        self.test_attributes.save(path)


def generate_dataset(spec: SyntheticDatasetSpec) -> Dataset:
    """Deterministically generate a dataset from the spec's seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, d = spec.num_examples, spec.num_features

    attrs = np.zeros((n, len(spec.attributes)), dtype=np.int64)
    for j, a in enumerate(spec.attributes):
        attrs[:, j] = rng.random(n) < a.frequency

    y = (rng.random(n) < 0.5).astype(np.int64)
    sign = np.where(y == 1, 1.0, -1.0)
    # per-example margin multiplier; clipped at 0 so a hardness tail exists
    margin = np.clip(rng.normal(1.0, spec.margin_spread, size=n), 0.0, None)
    if spec.ambiguous_fraction > 0:
        ambiguous = rng.random(n) < spec.ambiguous_fraction
        margin[ambiguous] = np.abs(rng.normal(0.0, spec.ambiguous_margin, size=int(ambiguous.sum())))

    x = rng.normal(0.0, spec.noise_level, size=(n, d))
    signal_attr = [j for j, a in enumerate(spec.attributes) if a.signal_features]
    carries_special = attrs[:, signal_attr].any(axis=1) if signal_attr else np.zeros(n, dtype=bool)

    default_feats = list(spec.default_signal_features)
    unit = 1.0 / np.sqrt(len(default_feats))
    rows = ~carries_special
    x[np.ix_(rows, default_feats)] += (
        sign[rows, None] * margin[rows, None] * spec.default_signal_strength * unit
    )
    for j in signal_attr:
        a = spec.attributes[j]
        feats = list(a.signal_features)
        rows = attrs[:, j].astype(bool)
        x[np.ix_(rows, feats)] += (
            sign[rows, None] * margin[rows, None] * a.signal_strength / np.sqrt(len(feats))
        )
    for j, a in enumerate(spec.attributes):
        if a.shift_features:
            rows = attrs[:, j].astype(bool)
            x[np.ix_(rows, list(a.shift_features))] += a.shift

    if spec.label_noise > 0:
        flip = rng.random(n) < spec.label_noise
        y = np.where(flip, 1 - y, y)

    n_test = int(round(n * spec.test_fraction))
    perm = rng.permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]

    names = [a.name for a in spec.attributes]

    def table(indices, prefix):
        ids = [f"{prefix}{i:06d}" for i in range(len(indices))]
        values = {
            eid: {name: int(attrs[idx, j]) for j, name in enumerate(names)}
            for eid, idx in zip(ids, indices)
        }
        return ids, AttributeTable(attribute_names=names, values=values)

    train_ids, train_table = table(train_idx, "tr")
    test_ids, test_table = table(test_idx, "te")
    return Dataset(
        x_train=x[train_idx], y_train=y[train_idx],
        x_test=x[test_idx], y_test=y[test_idx],
        train_ids=train_ids, test_ids=test_ids,
        train_attributes=train_table, test_attributes=test_table,
        spec=spec,
    )
