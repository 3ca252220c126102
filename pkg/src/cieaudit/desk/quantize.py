"""Post-training int8 quantization of a trained classifier.

Two modes:

* ``hybrid_int8``: weights only, per-tensor symmetric scale max|w|/127,
  dequantized at inference (dynamic-range style);
* ``fixedpoint_int8``: weights as above, plus activations clipped to
  per-layer [min, max] ranges fixed from a calibration set and snapped to
  256 levels.

The original float model is never modified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ledger import LedgerError
from .train import MLPClassifier

HYBRID = "hybrid_int8"
FIXEDPOINT = "fixedpoint_int8"


class QuantError(LedgerError):
    pass


@dataclass(frozen=True)
class QuantSpec:
    kind: str = HYBRID
    calibration_set_size: int = 100

    def validate(self) -> None:
        if self.kind not in (HYBRID, FIXEDPOINT):
            raise QuantError(f"unknown quantization kind {self.kind!r}")
        if self.calibration_set_size <= 0:
            raise QuantError("calibration_set_size must be positive")


def _quantize_tensor(w: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Symmetric per-tensor int8; an all-zero tensor gets scale 1 and a flag."""
    max_abs = float(np.abs(w).max()) if w.size else 0.0
    degenerate = max_abs == 0.0
    scale = 1.0 if degenerate else max_abs / 127.0
    q = np.clip(np.round(w / scale), -127, 127).astype(np.int8)
    return q, scale, degenerate


class QuantizedModel:
    """Int8 view over a trained classifier; prediction-compatible with it."""

    def __init__(self, model: MLPClassifier, spec: QuantSpec, calibration: np.ndarray | None):
        spec.validate()
        self.spec = spec
        self.q1, self.scale1, deg1 = _quantize_tensor(model.w1)
        self.q2, self.scale2, deg2 = _quantize_tensor(model.w2)
        self.degenerate_tensors = int(deg1) + int(deg2)
        self.b1 = model.b1.copy()
        self.b2 = model.b2.copy()
        self.activation_ranges: list[tuple[float, float]] | None = None
        if spec.kind == FIXEDPOINT:
            if calibration is None or not len(calibration):
                raise QuantError("fixedpoint quantization requires calibration data")
            calib = calibration[: spec.calibration_set_size]
            self.activation_ranges = [
                (float(calib.min()), float(calib.max())),
                self._hidden_range(calib),
            ]

    @property
    def w1(self) -> np.ndarray:
        return self.q1.astype(np.float64) * self.scale1

    @property
    def w2(self) -> np.ndarray:
        return self.q2.astype(np.float64) * self.scale2

    def _hidden_range(self, x: np.ndarray) -> tuple[float, float]:
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        return float(h.min()), float(h.max())

    @staticmethod
    def _snap(a: np.ndarray, lo: float, hi: float) -> np.ndarray:
        if hi <= lo:
            return np.full_like(a, lo)
        step = (hi - lo) / 255.0
        levels = np.clip(np.round((a - lo) / step), 0, 255)
        return lo + levels * step

    def logits(self, x: np.ndarray) -> np.ndarray:
        if self.activation_ranges is not None:
            x = self._snap(x, *self.activation_ranges[0])
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        if self.activation_ranges is not None:
            h = self._snap(h, *self.activation_ranges[1])
        return h @ self.w2 + self.b2

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)


def quantize(model: MLPClassifier, spec: QuantSpec, calibration: np.ndarray | None = None) -> QuantizedModel:
    return QuantizedModel(model, spec, calibration)
