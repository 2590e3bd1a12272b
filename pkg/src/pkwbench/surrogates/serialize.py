"""One binary container for every fitted surrogate.

Layout: a fixed header (magic ``WNSM``, format version, model kind byte),
a JSON block carrying hyperparameters and array shapes, then the raw
little-endian array payload in the order the JSON block declares.  Arrays
round-trip bit for bit, so a reloaded model predicts identically.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import MalformedModel
from .pointnet import PointNetConfig, PointNetMini
from .trees import BoostedModel, ForestModel, RegressionTree, TreeParams

__all__ = ["save_model", "load_model"]

_MAGIC = b"WNSM"
_VERSION = 1
_PREFIX = struct.Struct("<4sHBI")  # magic, version, kind, header length

_KIND_TREE = 1
_KIND_FOREST = 2
_KIND_GBM = 3
_KIND_POINTNET = 4

_TREE_FIELDS = (
    ("feature", "<i4"),
    ("threshold", "<f8"),
    ("left", "<i4"),
    ("right", "<i4"),
    ("value", "<f8"),
)


def _params_to_json(params: TreeParams) -> dict:
    return {
        "max_depth": params.max_depth,
        "min_samples_leaf": params.min_samples_leaf,
        "min_samples_split": params.min_samples_split,
    }


def _params_from_json(obj) -> TreeParams:
    try:
        return TreeParams(
            max_depth=obj["max_depth"],
            min_samples_leaf=obj["min_samples_leaf"],
            min_samples_split=obj["min_samples_split"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedModel(f"bad tree hyperparameter block: {exc}") from exc


def _tree_blobs(tree: RegressionTree):
    for name, dtype in _TREE_FIELDS:
        yield np.ascontiguousarray(getattr(tree, name), dtype=dtype)


def _pack_trees(trees):
    counts = [tree.n_nodes for tree in trees]
    blobs = []
    for tree in trees:
        blobs.extend(_tree_blobs(tree))
    return counts, blobs


def _unpack_trees(reader, counts, n_features, params):
    trees = []
    for count in counts:
        fields = {}
        for name, dtype in _TREE_FIELDS:
            fields[name] = reader.take(count, dtype)
        trees.append(
            RegressionTree(n_features=n_features, params=params, **fields)
        )
    return trees


class _PayloadReader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, count, dtype) -> np.ndarray:
        dt = np.dtype(dtype)
        nbytes = int(count) * dt.itemsize
        end = self.pos + nbytes
        if end > len(self.buf):
            raise MalformedModel("model payload is truncated")
        out = np.frombuffer(self.buf[self.pos : end], dtype=dt).copy()
        self.pos = end
        return out

    def finish(self):
        if self.pos != len(self.buf):
            raise MalformedModel(
                f"{len(self.buf) - self.pos} unexpected trailing payload bytes"
            )


def _describe(model):
    if isinstance(model, RegressionTree):
        counts, blobs = _pack_trees([model])
        header = {
            "n_features": model.n_features,
            "params": _params_to_json(model.params),
            "tree_nodes": counts,
        }
        return _KIND_TREE, header, blobs
    if isinstance(model, ForestModel):
        counts, blobs = _pack_trees(model.trees)
        header = {
            "n_features": model.n_features,
            "params": _params_to_json(model.params),
            "tree_nodes": counts,
            "seed": model.seed,
            "bootstrap": model.bootstrap,
            "max_features": model.max_features,
        }
        return _KIND_FOREST, header, blobs
    if isinstance(model, BoostedModel):
        counts, blobs = _pack_trees(model.trees)
        header = {
            "n_features": model.n_features,
            "params": _params_to_json(model.params),
            "tree_nodes": counts,
            "base_value": model.base_value,
            "learning_rate": model.learning_rate,
            "train_mse_path": list(model.train_mse_path),
        }
        return _KIND_GBM, header, blobs
    if isinstance(model, PointNetMini):
        keys = model._key_order()
        header = {
            "weights": [[k, list(model.params[k].shape)] for k in keys],
            "config": {
                f.name: getattr(model.config, f.name)
                for f in model.config.__dataclass_fields__.values()
            },
            "history": _history_to_json(model.history),
        }
        blobs = [np.ascontiguousarray(model.params[k], dtype="<f8") for k in keys]
        return _KIND_POINTNET, header, blobs
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _history_to_json(history):
    out = {}
    for key, val in history.items():
        out[key] = list(val) if isinstance(val, tuple) else val
    return out


def _history_from_json(obj):
    out = {}
    for key, val in obj.items():
        out[key] = tuple(val) if isinstance(val, list) else val
    return out


def save_model(path, model):
    """Write any fitted surrogate to ``path``."""
    kind, header, blobs = _describe(model)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(_MAGIC, _VERSION, kind, len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob.tobytes())


def load_model(path):
    """Read a model container back; the kind byte selects the class."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _PREFIX.size:
        raise MalformedModel(f"file is only {len(raw)} bytes")
    magic, version, kind, header_len = _PREFIX.unpack_from(raw)
    if magic != _MAGIC:
        raise MalformedModel(f"bad magic {magic!r}")
    if version != _VERSION:
        raise MalformedModel(f"unsupported container version {version}")
    header_end = _PREFIX.size + header_len
    if len(raw) < header_end:
        raise MalformedModel("header is truncated")
    try:
        header = json.loads(raw[_PREFIX.size : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedModel(f"unreadable header: {exc}") from exc
    reader = _PayloadReader(raw[header_end:])
    try:
        if kind == _KIND_TREE:
            model = _load_tree(header, reader)
        elif kind == _KIND_FOREST:
            model = _load_forest(header, reader)
        elif kind == _KIND_GBM:
            model = _load_gbm(header, reader)
        elif kind == _KIND_POINTNET:
            model = _load_pointnet(header, reader)
        else:
            raise MalformedModel(f"unknown model kind {kind}")
    except KeyError as exc:
        raise MalformedModel(f"header is missing field {exc}") from exc
    reader.finish()
    return model


def _load_tree(header, reader):
    params = _params_from_json(header["params"])
    trees = _unpack_trees(reader, header["tree_nodes"], header["n_features"], params)
    if len(trees) != 1:
        raise MalformedModel(f"tree container holds {len(trees)} trees")
    return trees[0]


def _load_forest(header, reader):
    params = _params_from_json(header["params"])
    trees = _unpack_trees(reader, header["tree_nodes"], header["n_features"], params)
    return ForestModel(
        trees=tuple(trees),
        n_features=header["n_features"],
        seed=header["seed"],
        bootstrap=header["bootstrap"],
        max_features=header["max_features"],
        params=params,
    )


def _load_gbm(header, reader):
    params = _params_from_json(header["params"])
    trees = _unpack_trees(reader, header["tree_nodes"], header["n_features"], params)
    return BoostedModel(
        base_value=header["base_value"],
        learning_rate=header["learning_rate"],
        trees=tuple(trees),
        n_features=header["n_features"],
        params=params,
        train_mse_path=tuple(header["train_mse_path"]),
    )


def _load_pointnet(header, reader):
    params = {}
    for key, shape in header["weights"]:
        flat = reader.take(int(np.prod(shape)), "<f8")
        params[key] = flat.reshape(shape)
    try:
        config = PointNetConfig(**header["config"])
    except (TypeError, ValueError) as exc:
        raise MalformedModel(f"bad network config block: {exc}") from exc
    try:
        return PointNetMini(
            params, config=config, history=_history_from_json(header["history"])
        )
    except Exception as exc:
        raise MalformedModel(f"inconsistent network weights: {exc}") from exc
