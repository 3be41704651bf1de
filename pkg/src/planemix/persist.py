"""Model files: versioned JSON holding pipeline, planes, sharpness, temperature.

Floats are emitted through Python's shortest round-trip repr, so a saved and
reloaded model reproduces bit-identical predictions. Non-finite parameters
are refused at save time; version or structure mismatches are refused at load
time with the offending field named.
"""

from __future__ import annotations

import json

import numpy as np

from .features import FeaturePipeline, PcaMap, RffMap, Standardizer
from .model import PlaneMixture

FORMAT_NAME = "planemix-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be trusted: bad JSON, wrong version,
    missing or malformed fields."""


def _check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise ValueError(f"cannot serialize non-finite values in {name}")
    return arr


def _pipeline_payload(pipe: FeaturePipeline) -> dict:
    payload = {
        "standardizer": {
            "mean": _check_finite("standardizer.mean", pipe.standardizer.mean).tolist(),
            "scale": _check_finite("standardizer.scale", pipe.standardizer.scale).tolist(),
        },
        "pca": None,
        "rff": None,
    }
    if pipe.pca is not None:
        payload["pca"] = {
            "components": _check_finite("pca.components", pipe.pca.components).tolist(),
            "center": _check_finite("pca.center", pipe.pca.center).tolist(),
            "eigenvalues": _check_finite("pca.eigenvalues", pipe.pca.eigenvalues).tolist(),
            "variance_retained": pipe.pca.variance_retained,
        }
    if pipe.rff is not None:
        payload["rff"] = {
            "omega": _check_finite("rff.omega", pipe.rff.omega).tolist(),
            "phases": _check_finite("rff.phases", pipe.rff.phases).tolist(),
            "gamma": pipe.rff.gamma,
        }
    return payload


def save_model(model: PlaneMixture, path: str, temperature: float | None = None,
               metadata: dict | None = None) -> None:
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "alpha": model.alpha,
        "temperature": temperature,
        "planes": {
            "weights": _check_finite("weights", model.weights).tolist(),
            "biases": _check_finite("biases", model.biases).tolist(),
            "offsets": model.offsets.tolist(),
        },
        "class_names": list(model.class_names) if model.class_names else None,
        "pipeline": _pipeline_payload(model.pipeline),
        "metadata": metadata or {},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, allow_nan=False)
        fh.write("\n")


def _need(obj: dict, field: str, where: str):
    if not isinstance(obj, dict) or field not in obj:
        raise ModelFormatError(f"model file is missing field {where}.{field}")
    return obj[field]


def _array(obj: dict, field: str, where: str, ndim: int) -> np.ndarray:
    raw = _need(obj, field, where)
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise ModelFormatError(f"field {where}.{field} is not numeric") from None
    if arr.ndim != ndim:
        raise ModelFormatError(f"field {where}.{field} must be {ndim}-D, "
                               f"got {arr.ndim}-D")
    return arr


def load_model(path: str):
    """Returns (model, temperature, metadata). Rejects unknown versions."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    fmt = _need(payload, "format", "$")
    if fmt != FORMAT_NAME:
        raise ModelFormatError(f"{path}: format {fmt!r} is not {FORMAT_NAME!r}")
    version = _need(payload, "version", "$")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: file version {version} does not match "
                               f"supported version {FORMAT_VERSION}")

    pipe_obj = _need(payload, "pipeline", "$")
    std_obj = _need(pipe_obj, "standardizer", "pipeline")
    standardizer = Standardizer(
        _array(std_obj, "mean", "pipeline.standardizer", 1),
        _array(std_obj, "scale", "pipeline.standardizer", 1))
    pca = None
    if pipe_obj.get("pca") is not None:
        p = pipe_obj["pca"]
        pca = PcaMap(_array(p, "components", "pipeline.pca", 2),
                     _array(p, "center", "pipeline.pca", 1),
                     _array(p, "eigenvalues", "pipeline.pca", 1),
                     float(_need(p, "variance_retained", "pipeline.pca")))
    rff = None
    if pipe_obj.get("rff") is not None:
        r = pipe_obj["rff"]
        rff = RffMap(_array(r, "omega", "pipeline.rff", 2),
                     _array(r, "phases", "pipeline.rff", 1),
                     float(_need(r, "gamma", "pipeline.rff")))
    pipeline = FeaturePipeline(standardizer, pca, rff)

    planes = _need(payload, "planes", "$")
    weights = _array(planes, "weights", "planes", 2)
    biases = _array(planes, "biases", "planes", 1)
    offsets = np.asarray(_need(planes, "offsets", "planes"), dtype=np.int64)
    names = payload.get("class_names")
    try:
        model = PlaneMixture(weights, biases, offsets,
                             float(_need(payload, "alpha", "$")), pipeline,
                             tuple(names) if names else None)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None

    temperature = payload.get("temperature")
    if temperature is not None:
        temperature = float(temperature)
        if not temperature > 0:
            raise ModelFormatError(f"{path}: temperature must be > 0")
    metadata = payload.get("metadata") or {}
    return model, temperature, metadata
