"""Self-describing JSON model snapshots.

Arrays are stored as base64 of their little-endian bytes so a load gives
back the exact same float64 values; output is key-sorted for stable diffs.
"""
from __future__ import annotations

import base64
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .core import LifConsts, NetworkModel, NeuronPopulation, Variant
from .errors import SnapshotError
from .quant import QuantConfig

FORMAT = "snnbudget.model"
VERSION = 1


def _pack(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    dtype = arr.dtype.newbyteorder("<")
    return {"dtype": dtype.str, "shape": list(arr.shape),
            "data": base64.b64encode(arr.astype(dtype).tobytes()).decode("ascii")}


def _unpack(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"], validate=True)
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).astype(
        np.dtype(d["dtype"]).newbyteorder("="))


def _pop_dict(pop: NeuronPopulation) -> dict:
    return {k: _pack(getattr(pop, k)) for k in ("v_mem", "v_th_base", "theta", "refrac_remaining", "labels")}


def model_to_dict(model: NetworkModel, extra: dict | None = None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "arch": {"n_input": model.n_input, "n_exc": model.n_exc, "variant": model.variant.value,
                 "inh_strength": model.inh_strength, "exc_to_inh": model.exc_to_inh,
                 "w_min": model.w_min, "w_max": model.w_max},
        "lif_exc": asdict(model.lif_exc),
        "lif_inh": asdict(model.lif_inh),
        "quant": model.quant.to_dict(),
        "seed": model.seed,
        "neurons": {"exc": _pop_dict(model.exc),
                    "inh": None if model.inh is None else _pop_dict(model.inh)},
        "weights": _pack(model.weights),
        "extra": extra or {},
    }


def model_from_dict(d: dict) -> NetworkModel:
    try:
        if d.get("format") != FORMAT or d.get("version") != VERSION:
            raise SnapshotError(f"not a {FORMAT} v{VERSION} snapshot")
        arch = d["arch"]
        neurons = d["neurons"]

        def pop(p):
            return None if p is None else NeuronPopulation(**{k: _unpack(v) for k, v in p.items()})

        return NetworkModel(
            arch["n_input"], arch["n_exc"], Variant(arch["variant"]), _unpack(d["weights"]),
            pop(neurons["exc"]), pop(neurons["inh"]), arch["inh_strength"], arch["exc_to_inh"],
            LifConsts(**d["lif_exc"]), LifConsts(**d["lif_inh"]), arch["w_min"], arch["w_max"],
            QuantConfig.from_dict(d["quant"]), d["seed"])
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"corrupt model snapshot: {exc}") from exc


def dumps(model: NetworkModel, extra: dict | None = None) -> str:
    return json.dumps(model_to_dict(model, extra), sort_keys=True, indent=1) + "\n"


def save_model(model: NetworkModel, path, extra: dict | None = None) -> None:
    Path(path).write_text(dumps(model, extra))


def load_model(path) -> NetworkModel:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read model {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise SnapshotError("model snapshot must be a JSON object")
    return model_from_dict(d)
