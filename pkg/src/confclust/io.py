"""JSON artifacts: writing with a stable layout and reloading into library types."""

from __future__ import annotations

import json
from pathlib import Path

from .conformal import PredictionSet
from .geometry import Clustering, VolumeEstimate
from .kmeans import GeneralModel, SphereModel
from .levelset import LevelSetModel
from .selection import TestDecision, VolumeCurve

__all__ = ["dump_json", "read_json", "model_from_dict", "load_artifact"]

_MODEL_TYPES = {"sphere": SphereModel, "general": GeneralModel, "levelset": LevelSetModel}


def dump_json(doc, path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def model_from_dict(doc: dict):
    try:
        cls = _MODEL_TYPES[doc["type"]]
    except KeyError:
        raise ValueError(f"unknown model type {doc.get('type')!r}") from None
    return cls.from_dict(doc)


def load_artifact(path):
    """Reload any file written by the command-line tool into its library type."""
    path = Path(path)
    doc = read_json(path)
    name = path.name
    if name == "model.json":
        return model_from_dict(doc)
    if name == "prediction_set.json":
        return PredictionSet.from_dict(doc)
    if name == "clustering.json":
        return Clustering.from_dict(doc)
    if name == "volume.json":
        return VolumeEstimate.from_dict(doc)
    if name == "curve.json":
        return VolumeCurve.from_dict(doc)
    if name == "decision.json":
        test = doc.get("test")
        return doc if test is None else {**doc, "test": TestDecision.from_dict(test)}
    raise ValueError(f"not a known artifact file: {name}")
