"""Desk-scale experiment harness: synthetic data, small models, compression."""

from .synth import SyntheticDatasetSpec, Dataset, generate_dataset
from .train import TrainConfig, PruneSchedule, MLPClassifier, train_model
from .quantize import QuantSpec, quantize
from .population import run_population

__all__ = [
    "SyntheticDatasetSpec", "Dataset", "generate_dataset",
    "TrainConfig", "PruneSchedule", "MLPClassifier", "train_model",
    "QuantSpec", "quantize", "run_population",
]
