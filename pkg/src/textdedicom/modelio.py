"""Versioned model files (numpy ``.npz``) for all three factorization methods.

Every file carries ``format``, ``version`` and ``method`` entries plus the
method's raw factors, the JSON-encoded training config and the final loss.
A' is never stored; it is recomputed from ``A_raw`` on load.
"""

from __future__ import annotations

import json

import numpy as np

from textdedicom.baselines import NmfModel, SvdModel
from textdedicom.dedicom import DedicomModel
from textdedicom.errors import InputError

MODEL_FORMAT = "textdedicom-model"
MODEL_VERSION = 1

_FIELDS = {
    "dedicom": ("A_raw", "R"),
    "nmf": ("W", "H"),
    "svd": ("U", "Sigma", "V"),
}


def method_of(model) -> str:
    if isinstance(model, DedicomModel):
        return "dedicom"
    if isinstance(model, NmfModel):
        return "nmf"
    if isinstance(model, SvdModel):
        return "svd"
    raise InputError(f"unsupported model type {type(model).__name__}")


def save_model(model, path, config=None, final_loss=float("nan")) -> None:
    method = method_of(model)
    arrays = {name: np.asarray(getattr(model, name), dtype=np.float64) for name in _FIELDS[method]}
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=np.array(MODEL_FORMAT),
            version=np.array(MODEL_VERSION),
            method=np.array(method),
            config=np.array(json.dumps(config or {}, sort_keys=True)),
            final_loss=np.array(float(final_loss)),
            **arrays,
        )


def load_model(path):
    """Return ``(model, config_dict, final_loss)``."""
    with np.load(path, allow_pickle=False) as data:
        if "format" not in data or str(data["format"]) != MODEL_FORMAT:
            raise InputError(f"{path}: not a model file")
        if int(data["version"]) != MODEL_VERSION:
            raise InputError(f"{path}: unsupported model version {int(data['version'])}")
        method = str(data["method"])
        if method not in _FIELDS:
            raise InputError(f"{path}: unknown method {method!r}")
        arrays = [data[name].copy() for name in _FIELDS[method]]
        config = json.loads(str(data["config"]))
        final_loss = float(data["final_loss"])
    model = {"dedicom": DedicomModel, "nmf": NmfModel, "svd": SvdModel}[method](*arrays)
    return model, config, final_loss
