"""Dual graph of a polyhedral decomposition and its (vertex-weighted) Fiedler partition."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EigenError
from .jacobi import jacobi_eigh
from .network import ReluNetwork
from .polydecomp import CellComplex2D, count_points_per_face, locate_many
from .unionfind import count_components

log = logging.getLogger(__name__)

KERNEL_TOL = 1e-10
ZERO_ENTRY = 1e-12


@dataclass(frozen=True)
class DualGraph:
    patterns: list  # node i is face i of the complex
    edges: np.ndarray  # (E, 2), tail < head

    @property
    def n_nodes(self) -> int:
        return len(self.patterns)

    def n_components(self) -> int:
        return count_components(self.n_nodes, self.edges)


@dataclass(frozen=True)
class WeightedLaplacianSpec:
    vertex_weights: np.ndarray
    edge_weights: np.ndarray

    def __post_init__(self):
        if np.any(self.vertex_weights <= 0) or np.any(self.edge_weights <= 0):
            raise ValueError("weights must be positive")

    @classmethod
    def unweighted(cls, g: DualGraph):
        return cls(np.ones(g.n_nodes), np.ones(len(g.edges)))


@dataclass
class PartitionReport:
    fiedler_value: float
    fiedler_vector: np.ndarray  # canonically oriented
    signs: np.ndarray  # +1 / -1 per node
    restricted_nodes: np.ndarray
    average_labels: np.ndarray  # per restricted node
    predicted: np.ndarray  # per restricted node, in {0, 1}
    misclassified_fraction: float
    l2_error: float
    n_components: int = 1

    def to_dict(self):
        return {
            "fiedler_value": float(self.fiedler_value),
            "fiedler_vector": [float(v) for v in self.fiedler_vector],
            "signs": [int(s) for s in self.signs],
            "restricted_nodes": [int(i) for i in self.restricted_nodes],
            "average_labels": [float(v) for v in self.average_labels],
            "predicted": [int(v) for v in self.predicted],
            "misclassified_fraction": float(self.misclassified_fraction),
            "l2_error": float(self.l2_error),
            "n_components": int(self.n_components),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            fiedler_value=float(d["fiedler_value"]),
            fiedler_vector=np.array(d["fiedler_vector"], dtype=np.float64),
            signs=np.array(d["signs"], dtype=np.int64),
            restricted_nodes=np.array(d["restricted_nodes"], dtype=np.int64),
            average_labels=np.array(d["average_labels"], dtype=np.float64),
            predicted=np.array(d["predicted"], dtype=np.int64),
            misclassified_fraction=float(d["misclassified_fraction"]),
            l2_error=float(d["l2_error"]),
            n_components=int(d.get("n_components", 1)),
        )


def build_dual_graph(cx: CellComplex2D) -> DualGraph:
    """One node per face; edges join faces whose patterns differ in exactly one bit."""
    patterns = [cx.face_pattern(f) for f in range(len(cx.face_vertices))]
    index = {p: i for i, p in enumerate(patterns)}
    edges = []
    for i, p in enumerate(patterns):
        for k in range(len(p)):
            q = p[:k] + (1 - p[k],) + p[k + 1:]
            j = index.get(q)
            if j is not None and i < j:
                edges.append((i, j))
    edges.sort()
    return DualGraph(patterns, np.array(edges, dtype=np.int64).reshape(-1, 2))


def geometric_adjacency(cx: CellComplex2D) -> set:
    """Pairs of faces sharing an edge of the complex."""
    owners = {}
    for f, cyc in enumerate(cx.face_edges):
        for e in cyc:
            owners.setdefault(e, []).append(f)
    return {tuple(sorted(fs)) for fs in owners.values() if len(fs) == 2}


def hamming_vs_geometric(cx: CellComplex2D, g: DualGraph):
    """Return (hamming-only pairs, geometric-only pairs); logs the first kind."""
    ham = {tuple(e) for e in g.edges.tolist()}
    geo = geometric_adjacency(cx)
    extra = sorted(ham - geo)
    if extra:
        log.info("%d Hamming-1 pairs are not geometrically adjacent", len(extra))
    return extra, sorted(geo - ham)


def coboundary(g: DualGraph) -> np.ndarray:
    D = np.zeros((len(g.edges), g.n_nodes))
    rows = np.arange(len(g.edges))
    D[rows, g.edges[:, 0]] = -1.0
    D[rows, g.edges[:, 1]] = 1.0
    return D


def laplacian(g: DualGraph, edge_weights=None) -> np.ndarray:
    """``D^T W_E D`` for the coboundary ``D``; unweighted by default."""
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    D = coboundary(g)
    if edge_weights is None:
        return D.T @ D
    return D.T @ (np.asarray(edge_weights)[:, None] * D)


def fiedler(g: DualGraph, spec: WeightedLaplacianSpec | None = None, solver="jacobi"):
    """Smallest eigenvalue above 1e-10 of ``L v = lam W_V v`` and its eigenvector.

    Solved through the symmetric matrix ``W_V^-1/2 L W_V^-1/2``; the returned
    vector is ``W_V^-1/2 u`` for the unit eigenvector ``u``.
    """
    spec = spec or WeightedLaplacianSpec.unweighted(g)
    L = laplacian(g, spec.edge_weights)
    inv_sqrt = 1.0 / np.sqrt(spec.vertex_weights)
    S = inv_sqrt[:, None] * L * inv_sqrt[None, :]
    n_comp = g.n_components()
    if n_comp > 1:
        log.warning("dual graph has %d connected components", n_comp)
    if solver == "jacobi":
        w, U = jacobi_eigh(S)
    elif solver == "numpy":
        w, U = np.linalg.eigh(S)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    above = np.flatnonzero(w > KERNEL_TOL)
    if above.size == 0:
        raise EigenError("no eigenvalue above the kernel threshold")
    k = above[0]
    return float(w[k]), inv_sqrt * U[:, k]


def vertex_weights_from_data(cx: CellComplex2D, net: ReluNetwork, train_points) -> WeightedLaplacianSpec:
    counts = count_points_per_face(cx, net, train_points)
    return WeightedLaplacianSpec(1.0 + counts.astype(np.float64), np.ones(len(build_dual_graph(cx).edges)))


def _predict(v):
    return np.where(np.abs(v) < ZERO_ENTRY, 1, np.where(v > 0, 1, 0))


def _score(v, restricted, avg):
    pred = _predict(v[restricted])
    diff = avg - pred
    return float(np.mean(np.abs(diff) >= 0.5)), float(np.linalg.norm(diff)), pred


def score_partition(g: DualGraph, fiedler_vector, cx: CellComplex2D, net: ReluNetwork,
                    points, labels, fiedler_value=float("nan")) -> PartitionReport:
    """Compare Fiedler signs with per-face average labels over faces holding data.

    Both global signs are scored; the one with fewer misclassified faces wins,
    then the smaller L2 error, then the one whose first nonzero entry is positive.
    """
    v = np.asarray(fiedler_vector, dtype=np.float64)
    ids = locate_many(cx, net, points)
    labels = np.asarray(labels, dtype=np.float64)
    keep = ids >= 0
    sums = np.bincount(ids[keep], weights=labels[keep], minlength=g.n_nodes)
    counts = np.bincount(ids[keep], minlength=g.n_nodes)
    restricted = np.flatnonzero(counts > 0)
    if restricted.size == 0:
        raise ValueError("no face contains a labelled point")
    avg = sums[restricted] / counts[restricted]

    nz = np.flatnonzero(np.abs(v) >= ZERO_ENTRY)
    first_positive = nz.size == 0 or v[nz[0]] > 0
    candidates = []
    for sign in (1.0, -1.0):
        mis, l2, pred = _score(sign * v, restricted, avg)
        lead = first_positive if sign > 0 else not first_positive
        candidates.append(((mis, l2, not lead), sign, mis, l2, pred))
    candidates.sort(key=lambda c: c[0])
    _, sign, mis, l2, pred = candidates[0]
    oriented = sign * v
    if np.any(np.abs(oriented) < ZERO_ENTRY):
        log.info("%d Fiedler entries are numerically zero; assigned class 1",
                 int(np.sum(np.abs(oriented) < ZERO_ENTRY)))
    return PartitionReport(
        fiedler_value=fiedler_value,
        fiedler_vector=oriented,
        signs=np.where(_predict(oriented) == 1, 1, -1),
        restricted_nodes=restricted,
        average_labels=avg,
        predicted=pred,
        misclassified_fraction=mis,
        l2_error=l2,
        n_components=g.n_components(),
    )
