"""Versioned JSON storage for networks.

Layout::

    {"version": 1,
     "activation": {"kind": "leaky_relu", "alpha": 0.5},
     "layers": [{"rows": m, "cols": n, "w": [row-major reals], "b": [reals]}, ...]}

Mostly-zero layers use ``"format": "coo"`` with parallel ``i``/``j``/``v``
lists instead of ``w``, and factored layers use ``"format": "factored"``
with a two-element ``factors`` list of coo blocks (left factor first).
Floats are written with Python's shortest round-trip representation, so
save/load/save is byte-identical for finite values.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from .network import Activation, Layer, Network
from .weights import LowRank

__all__ = [
    "FORMAT_VERSION",
    "dumps",
    "load",
    "loads",
    "network_from_dict",
    "network_to_dict",
    "param_count_from_file",
    "save",
]

FORMAT_VERSION = 1


def _floats(values) -> list[float]:
    out = [float(v) for v in np.asarray(values, dtype=np.float64).ravel()]
    for v in out:
        if not math.isfinite(v):
            raise ValueError("network contains non-finite values and cannot be stored")
    return out


def _coo_block(mat: sp.csr_array) -> dict[str, Any]:
    coo = mat.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return {
        "rows": int(mat.shape[0]),
        "cols": int(mat.shape[1]),
        "format": "coo",
        "i": [int(v) for v in coo.row[order]],
        "j": [int(v) for v in coo.col[order]],
        "v": _floats(coo.data[order]),
    }


def _layer_to_dict(layer: Layer) -> dict[str, Any]:
    rows, cols = layer.shape
    w = layer.weight
    if isinstance(w, LowRank):
        out = {"rows": rows, "cols": cols, "format": "factored",
               "factors": [_coo_block(w.left), _coo_block(w.right)]}
    elif rows * cols <= max(256, 2 * w.nnz):
        out = {"rows": rows, "cols": cols, "w": _floats(w.toarray())}
    else:
        out = _coo_block(w)
    out["b"] = _floats(layer.bias)
    return out


def _block_from_dict(data: dict[str, Any]) -> sp.csr_array:
    rows, cols = int(data["rows"]), int(data["cols"])
    fmt = data.get("format", "dense")
    if fmt == "dense":
        flat = np.array(data["w"], dtype=np.float64)
        if flat.size != rows * cols:
            raise ValueError(f"dense block holds {flat.size} values, expected {rows * cols}")
        return sp.csr_array(flat.reshape(rows, cols))
    if fmt == "coo":
        i = np.array(data["i"], dtype=np.int64)
        j = np.array(data["j"], dtype=np.int64)
        v = np.array(data["v"], dtype=np.float64)
        if not (i.size == j.size == v.size):
            raise ValueError("coo block has mismatched index/value lengths")
        return sp.csr_array((v, (i, j)), shape=(rows, cols))
    raise ValueError(f"unknown block format {fmt!r}")


def _layer_from_dict(data: dict[str, Any]) -> Layer:
    if data.get("format") == "factored":
        left, right = (_block_from_dict(f) for f in data["factors"])
        weight = LowRank(left, right)
        if weight.shape != (int(data["rows"]), int(data["cols"])):
            raise ValueError("factored layer shape does not match its factors")
        return Layer.make(weight, data["b"])
    return Layer.make(_block_from_dict(data), data["b"])


def network_to_dict(net: Network, act: Activation) -> dict[str, Any]:
    return {
        "version": FORMAT_VERSION,
        "activation": act.to_dict(),
        "layers": [_layer_to_dict(layer) for layer in net.layers],
    }


def network_from_dict(data: dict[str, Any]) -> tuple[Network, Activation]:
    if data.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {data.get('version')!r}")
    act = Activation.from_dict(data["activation"])
    return Network([_layer_from_dict(d) for d in data["layers"]]), act


def dumps(net: Network, act: Activation) -> str:
    return json.dumps(network_to_dict(net, act), separators=(",", ":"))


def loads(text: str) -> tuple[Network, Activation]:
    return network_from_dict(json.loads(text))


def save(net: Network, act: Activation, path: str | Path) -> None:
    Path(path).write_text(dumps(net, act))


def load(path: str | Path) -> tuple[Network, Activation]:
    return loads(Path(path).read_text())


def param_count_from_file(path: str | Path) -> int:
    """Recount the structural parameter count directly from a stored file."""
    data = json.loads(Path(path).read_text())
    return sum(int(d["rows"]) * (int(d["cols"]) + 1) for d in data["layers"])
