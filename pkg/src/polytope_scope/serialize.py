"""JSON persistence for networks and cell complexes.

Floats are written with ``repr``, the shortest decimal string that parses back
to the identical float64, so every round trip is bit-exact.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .network import DenseLayer, ReluNetwork


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def network_to_dict(net: ReluNetwork) -> dict:
    return {
        "widths": list(net.widths),
        "weights": [[float(v) for v in l.weight.ravel()] for l in net.layers],
        "biases": [[float(v) for v in l.bias] for l in net.layers],
    }


def network_from_dict(d: dict) -> ReluNetwork:
    widths = d["widths"]
    layers = []
    for i, (w, b) in enumerate(zip(d["weights"], d["biases"])):
        shape = (widths[i + 1], widths[i])
        layers.append(DenseLayer(np.array(w, dtype=np.float64).reshape(shape), np.array(b, dtype=np.float64)))
    return ReluNetwork(tuple(layers))


def save_checkpoint(net: ReluNetwork, path, epoch: int, seed: int, loss: float):
    d = network_to_dict(net)
    d.update(epoch=int(epoch), seed=int(seed), loss=float(loss))
    atomic_write_text(path, dumps(d))


def load_checkpoint(path):
    """Return ``(net, meta)`` where meta holds epoch, seed and loss."""
    d = json.loads(Path(path).read_text())
    meta = {k: d[k] for k in ("epoch", "seed", "loss") if k in d}
    return network_from_dict(d), meta


_SIGN_CHARS = {-1: "-", 0: "0", 1: "+"}
_SIGN_VALUES = {"-": -1, "0": 0, "+": 1}


def sign_string(signs) -> str:
    return "".join(_SIGN_CHARS[int(s)] for s in signs)


def parse_sign_string(s: str) -> np.ndarray:
    return np.array([_SIGN_VALUES[c] for c in s], dtype=np.int8)


def complex_to_dict(cx) -> dict:
    d = {
        "box": [cx.box.x_min, cx.box.x_max, cx.box.y_min, cx.box.y_max],
        "n_hidden": int(cx.vertex_signs.shape[1]),
        "vertices": [[float(a), float(b)] for a, b in cx.vertices],
        "vertex_signs": [sign_string(s) for s in cx.vertex_signs],
        "edges": [[int(a), int(b)] for a, b in cx.edges],
        "edge_signs": [sign_string(s) for s in cx.edge_signs],
        "faces": [[int(e) for e in cyc] for cyc in cx.face_edges],
        "face_vertices": [[int(v) for v in cyc] for cyc in cx.face_vertices],
        "face_signs": [sign_string(s) for s in cx.face_signs],
    }
    if cx.network is not None:
        d["network"] = network_to_dict(cx.network)
    return d


def complex_from_dict(d: dict):
    from .polydecomp import BoundingBox2D, CellComplex2D

    h = int(d["n_hidden"])

    def signs(rows):
        if not rows:
            return np.zeros((0, h), dtype=np.int8)
        return np.vstack([parse_sign_string(s) for s in rows]).reshape(len(rows), h)

    return CellComplex2D(
        box=BoundingBox2D(*d["box"]),
        vertices=np.array(d["vertices"], dtype=np.float64).reshape(-1, 2),
        vertex_signs=signs(d["vertex_signs"]),
        edges=np.array(d["edges"], dtype=np.int64).reshape(-1, 2),
        edge_signs=signs(d["edge_signs"]),
        face_vertices=[list(c) for c in d["face_vertices"]],
        face_edges=[list(c) for c in d["faces"]],
        face_signs=signs(d["face_signs"]),
        network=network_from_dict(d["network"]) if "network" in d else None,
    )


def save_complex(cx, path):
    atomic_write_text(path, dumps(complex_to_dict(cx)))


def load_complex(path):
    return complex_from_dict(json.loads(Path(path).read_text()))
