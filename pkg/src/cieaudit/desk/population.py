"""Train a population of models under one compression setting and emit logs."""

from __future__ import annotations

import logging
from dataclasses import replace

from ..ledger import BASELINE, PRUNED, QUANTIZED, PopulationSpec, PredictionRecord
from .quantize import QuantSpec, quantize
from .synth import Dataset
from .train import MLPClassifier, PruneSchedule, TrainConfig, TrainError, train_model

log = logging.getLogger(__name__)


def train_members(
    dataset: Dataset,
    config: TrainConfig,
    seeds: list[int],
    schedule: PruneSchedule | None = None,
) -> dict[int, MLPClassifier]:
    """One independently trained model per seed."""
    members = {}
    for seed in seeds:
        try:
            members[seed] = train_model(dataset, replace(config, seed=seed), schedule)
        except TrainError as exc:
            raise TrainError(f"population member with seed {seed} failed: {exc}") from exc
    return members


def run_population(
    dataset: Dataset,
    config: TrainConfig,
    spec: PopulationSpec,
    seeds: list[int],
    schedule: PruneSchedule | None = None,
    trained_members: dict[int, MLPClassifier] | None = None,
) -> list[PredictionRecord]:
    """Prediction records for every (seed, test example) pair of a population.

    For quantized populations, ``trained_members`` lets the caller reuse the
    float models of the baseline population (quantization is post-training).
    Deterministic: identical inputs give identical records in identical order.
    """
    if len(seeds) < 2:
        raise TrainError("population too small: need at least 2 seeds")
    if len(set(seeds)) != len(seeds):
        raise TrainError("duplicate seeds in population")
    comp = spec.compression
    if comp.kind == PRUNED and schedule is None:
        schedule = PruneSchedule(target_sparsity=comp.target_sparsity)
    elif comp.kind == PRUNED:
        schedule = replace(schedule, target_sparsity=comp.target_sparsity)
    elif comp.kind in (BASELINE, QUANTIZED):
        schedule = None

    if trained_members is None:
        trained_members = train_members(dataset, config, seeds, schedule)
    missing = [s for s in seeds if s not in trained_members]
    if missing:
        raise TrainError(f"no trained member for seeds {missing}")

    records = []
    for seed in seeds:
        model = trained_members[seed]
        if comp.kind == QUANTIZED:
            model = quantize(model, QuantSpec(kind=comp.quant_kind), calibration=dataset.x_train)
        preds = model.predict(dataset.x_test)
        model_id = f"seed{seed}"
        for eid, pred, truth in zip(dataset.test_ids, preds, dataset.y_test):
            records.append(
                PredictionRecord(
                    example_id=eid,
                    population_id=spec.population_id,
                    model_id=model_id,
                    predicted_label=int(pred),
                    true_label=int(truth),
                )
            )
    log.info("population %s: %d records from %d models", spec.population_id, len(records), len(seeds))
    return records
