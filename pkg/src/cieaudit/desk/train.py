"""Small feed-forward classifier with gradual magnitude pruning.

Plain SGD on softmax cross-entropy.  Pruning zeroes the globally
smallest-magnitude weights (biases excluded) on a linear ramp of events;
pruned positions stay zero for the rest of training and at inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ledger import LedgerError
from .synth import Dataset


class TrainError(LedgerError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    hidden_units: int = 64
    steps: int = 3000
    batch_size: int = 128
    learning_rate: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.steps <= 0 or self.batch_size <= 0:
            raise TrainError("steps and batch_size must be positive")
        if self.learning_rate <= 0:
            raise TrainError("learning_rate must be positive")


@dataclass(frozen=True)
class PruneSchedule:
    target_sparsity: float
    prune_interval: int = 100
    prune_start_step: int = 500
    prune_end_step: int = 2500

    def validate(self, total_steps: int) -> None:
        if not 0.0 < self.target_sparsity < 1.0:
            raise TrainError(f"target_sparsity must be in (0,1), got {self.target_sparsity}")
        if not self.prune_start_step < self.prune_end_step <= total_steps:
            raise TrainError(
                f"schedule infeasible: need start < end <= steps, got "
                f"{self.prune_start_step} < {self.prune_end_step} <= {total_steps}"
            )
        if self.prune_interval <= 0:
            raise TrainError("prune_interval must be positive")

    def events(self) -> list[int]:
        return list(range(self.prune_start_step, self.prune_end_step + 1, self.prune_interval))


class MLPClassifier:
    """One-hidden-layer ReLU network with a persistent pruning mask."""

    def __init__(self, num_features: int, hidden_units: int, num_classes: int, rng: np.random.Generator):
        scale1 = np.sqrt(2.0 / num_features)
        scale2 = np.sqrt(2.0 / hidden_units)
        self.w1 = rng.normal(0.0, scale1, size=(num_features, hidden_units))
        self.b1 = np.zeros(hidden_units)
        self.w2 = rng.normal(0.0, scale2, size=(hidden_units, num_classes))
        self.b2 = np.zeros(num_classes)
        self.mask1 = np.ones_like(self.w1, dtype=bool)
        self.mask2 = np.ones_like(self.w2, dtype=bool)
        self.achieved_sparsity = 0.0

    @property
    def weight_tensors(self) -> list[np.ndarray]:
        return [self.w1, self.w2]

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)

    def sparsity(self) -> float:
        total = self.w1.size + self.w2.size
        zeros = int((~self.mask1).sum() + (~self.mask2).sum())
        return zeros / total

    def prune_to(self, sparsity: float) -> None:
        """Zero the globally smallest-magnitude weights up to the fraction given.

        Already-pruned weights always stay pruned (masks are monotone).
        """
        flat = np.concatenate([np.abs(self.w1).ravel(), np.abs(self.w2).ravel()])
        alive = np.concatenate([self.mask1.ravel(), self.mask2.ravel()])
        total = flat.size
        k = int(round(sparsity * total))
        k = max(k, total - int(alive.sum()))  # never unprune
        if k > 0:
            # pruned weights are exactly 0 so they sort first; ties broken stably
            order = np.argsort(flat, kind="stable")
            keep = np.ones(total, dtype=bool)
            keep[order[:k]] = False
            keep &= alive
            self.mask1 = keep[: self.w1.size].reshape(self.w1.shape)
            self.mask2 = keep[self.w1.size:].reshape(self.w2.shape)
            self.w1 *= self.mask1
            self.w2 *= self.mask2
        self.achieved_sparsity = self.sparsity()


def train_model(dataset: Dataset, config: TrainConfig, schedule: PruneSchedule | None = None) -> MLPClassifier:
    """Train one model; with a schedule, prune on a linear sparsity ramp."""
    config.validate()
    if schedule is not None:
        schedule.validate(config.steps)
    rng = np.random.default_rng(config.seed)
    x, y = dataset.x_train, dataset.y_train
    num_classes = int(y.max()) + 1
    model = MLPClassifier(x.shape[1], config.hidden_units, num_classes, rng)

    events = schedule.events() if schedule is not None else []
    n = x.shape[0]
    lr = config.learning_rate
    for step in range(1, config.steps + 1):
        idx = rng.integers(0, n, size=config.batch_size)
        xb, yb = x[idx], y[idx]

        h_pre = xb @ model.w1 + model.b1
        h = np.maximum(h_pre, 0.0)
        logits = h @ model.w2 + model.b2
        logits -= logits.max(axis=1, keepdims=True)
        expl = np.exp(logits)
        probs = expl / expl.sum(axis=1, keepdims=True)
        if not np.all(np.isfinite(probs)):
            raise TrainError(f"non-finite loss at step {step}")

        grad_logits = probs
        grad_logits[np.arange(len(yb)), yb] -= 1.0
        grad_logits /= len(yb)
        grad_w2 = h.T @ grad_logits
        grad_b2 = grad_logits.sum(axis=0)
        grad_h = grad_logits @ model.w2.T
        grad_h[h_pre <= 0.0] = 0.0
        grad_w1 = xb.T @ grad_h
        grad_b1 = grad_h.sum(axis=0)

        model.w1 -= lr * grad_w1 * model.mask1
        model.b1 -= lr * grad_b1
        model.w2 -= lr * grad_w2 * model.mask2
        model.b2 -= lr * grad_b2

        if events and step in events:
            k = events.index(step) + 1
            ramp = schedule.target_sparsity * k / len(events)
            model.prune_to(ramp)

    if schedule is not None:
        model.prune_to(schedule.target_sparsity)
        if abs(model.achieved_sparsity - schedule.target_sparsity) > 0.01:
            raise TrainError(
                f"achieved sparsity {model.achieved_sparsity:.4f} misses target "
                f"{schedule.target_sparsity} by more than 1%"
            )
    return model
