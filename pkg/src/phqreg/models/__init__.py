"""Trainable predictors with a uniform predict contract, plus model file I/O.

Model files are versioned, self-describing JSON: a format version, the model
kind, hyperparameters, normalization statistics and parameters. Loading a
file with a mismatched format version fails loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lstm import LstmConfig, LstmModel, gradient_check, lstm_train
from .reptree import RepTreeModel, RepTreeRegressor, reptree_train
from .svr import SvrModel, SvrRegressor, svr_train

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class MeanModel:
    """Baseline: predict the training-label mean for every input."""

    mean: float
    kind: str = field(default="mean", init=False)

    def predict(self, X) -> np.ndarray:
        return np.full(len(X), self.mean)

    def to_dict(self) -> dict:
        return {"mean": self.mean}

    @classmethod
    def from_dict(cls, d: dict) -> "MeanModel":
        return cls(mean=d["mean"])


def mean_train(y) -> MeanModel:
    return MeanModel(mean=float(np.mean(np.asarray(y, dtype=np.float64))))


_MODEL_KINDS = {"svr": SvrModel, "reptree": RepTreeModel, "lstm": LstmModel, "mean": MeanModel}


def save_model(model, path, extra: dict | None = None) -> None:
    """Write a model to its JSON envelope; ``extra`` carries pipeline metadata."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "model": model.to_dict(),
        "extra": extra or {},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path) -> tuple[object, dict]:
    """Read a model envelope; returns (model, extra metadata)."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"{path}: model format version {version!r}, expected {MODEL_FORMAT_VERSION}")
    kind = payload.get("kind")
    cls = _MODEL_KINDS.get(kind)
    if cls is None:
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    return cls.from_dict(payload["model"]), payload.get("extra", {})


__all__ = [
    "LstmConfig", "LstmModel", "lstm_train", "gradient_check",
    "RepTreeModel", "RepTreeRegressor", "reptree_train",
    "SvrModel", "SvrRegressor", "svr_train",
    "MeanModel", "mean_train",
    "save_model", "load_model", "ModelFormatError", "MODEL_FORMAT_VERSION",
]
