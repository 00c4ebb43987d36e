"""Exact cell decomposition of a 2D rectangle induced by a ReLU network.

The complex is built by edge subdivision.  Neurons are processed in pattern
order; inside every current cell all earlier neurons have a fixed sign, so the
preactivation of the next neuron is affine there and its zero set crosses each
convex face along at most one segment.  Crossing edges are split at the linear
root, then every face whose boundary now changes sign is cut along the segment
joining its two zero vertices.

Only vertex sign vectors are tracked during the sweep.  Edge and face sign
vectors follow from them: for each neuron an edge takes the sign of any
nonzero endpoint (0 if both endpoints are zero), and a face the sign of any
nonzero boundary vertex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegeneracyError, DimensionError, LocateError
from .network import DenseLayer, ReluNetwork, forward_batch, patterns_batch

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
JITTER = 1e-7


@dataclass(frozen=True)
class BoundingBox2D:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "x_max", "y_min", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")

    @classmethod
    def around(cls, points, inflate=0.2):
        """Bounding box of ``points`` grown by ``inflate`` times its extent on every side."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = inflate * np.maximum(hi - lo, 1e-12)
        return cls(lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])

    def inflated(self, inflate):
        return BoundingBox2D.around(self.corners(), inflate)

    def contains(self, points):
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return ((p[:, 0] >= self.x_min) & (p[:, 0] <= self.x_max)
                & (p[:, 1] >= self.y_min) & (p[:, 1] <= self.y_max))

    def corners(self):
        return np.array([[self.x_min, self.y_min], [self.x_max, self.y_min],
                         [self.x_max, self.y_max], [self.x_min, self.y_max]])


@dataclass(frozen=True)
class FVector:
    f0: int
    f1: int
    f2: int

    @property
    def euler(self) -> int:
        return self.f0 - self.f1 + self.f2

    @property
    def total(self) -> int:
        return self.f0 + self.f1 + self.f2

    def as_tuple(self):
        return (self.f0, self.f1, self.f2)


@dataclass(frozen=True)
class CellComplex2D:
    box: BoundingBox2D
    vertices: np.ndarray  # (V, 2)
    vertex_signs: np.ndarray  # (V, h) in {-1, 0, 1}
    edges: np.ndarray  # (E, 2) vertex ids
    edge_signs: np.ndarray
    face_vertices: list  # counterclockwise vertex cycles
    face_edges: list  # matching edge-id cycles
    face_signs: np.ndarray
    network: ReluNetwork | None = field(default=None, repr=False, compare=False)  # the net actually cut
    face_by_pattern: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bits = (self.face_signs > 0).astype(np.uint8)
        object.__setattr__(self, "face_by_pattern", {tuple(int(b) for b in row): i for i, row in enumerate(bits)})

    @property
    def n_hidden(self) -> int:
        return self.vertex_signs.shape[1]

    def f_vector(self) -> FVector:
        return FVector(len(self.vertices), len(self.edges), len(self.face_vertices))

    def face_pattern(self, face_id):
        return tuple(int(s > 0) for s in self.face_signs[face_id])

    def face_polygon(self, face_id) -> np.ndarray:
        return self.vertices[self.face_vertices[face_id]]

    def face_centroid(self, face_id) -> np.ndarray:
        return polygon_centroid(self.face_polygon(face_id))


def f_vector(cx: CellComplex2D) -> FVector:
    return cx.f_vector()


def polygon_area(poly) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2
    if abs(a) < 1e-300:
        return poly.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6 * a)


class _VertexTable:
    """Growable coordinate / preactivation / sign storage."""

    def __init__(self, coords, h):
        n = len(coords)
        cap = max(64, 2 * n)
        self.n = n
        self.xy = np.zeros((cap, 2))
        self.pre = np.zeros((cap, h))
        self.sign = np.zeros((cap, h), dtype=np.int8)
        self.xy[:n] = coords

    def _grow(self):
        cap = 2 * len(self.xy)
        for name in ("xy", "pre", "sign"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def add(self, xy, pre, sign):
        if self.n == len(self.xy):
            self._grow()
        i = self.n
        self.xy[i], self.pre[i], self.sign[i] = xy, pre, sign
        self.n += 1
        return i


def _subdivide(net: ReluNetwork, box: BoundingBox2D, tol: float) -> CellComplex2D:
    h = net.n_hidden
    V = _VertexTable(box.corners(), h)
    edges = {(0, 1), (1, 2), (2, 3), (0, 3)}
    faces = [[0, 1, 2, 3]]

    for li, layer in enumerate(net.hidden):
        lo, hi = net.offsets[li], net.offsets[li + 1]
        n = V.n
        if li == 0:
            inputs = V.xy[:n]
        else:
            plo = net.offsets[li - 1]
            inputs = np.where(V.sign[:n, plo:lo] > 0, V.pre[:n, plo:lo], 0.0)
        V.pre[:n, lo:hi] = inputs @ layer.weight.T + layer.bias

        for k in range(lo, hi):
            g = V.pre[: V.n, k]
            cls = np.where(g > tol, 1, np.where(g < -tol, -1, 0)).astype(np.int8)
            V.pre[: V.n, k][cls == 0] = 0.0
            V.sign[: V.n, k] = cls
            cls_list = cls.tolist()

            split = {}
            for a, b in sorted(e for e in edges if cls_list[e[0]] * cls_list[e[1]] < 0):
                ga, gb = V.pre[a, k], V.pre[b, k]
                t = ga / (ga - gb)
                pre = (1 - t) * V.pre[a] + t * V.pre[b]
                pre[k] = 0.0
                sign = np.sign(V.sign[a].astype(np.int16) + V.sign[b]).astype(np.int8)
                sign[k] = 0
                sign[k + 1:] = 0
                c = V.add((1 - t) * V.xy[a] + t * V.xy[b], pre, sign)
                cls_list.append(0)
                split[(a, b)] = c
                edges.discard((a, b))
                edges.add((min(a, c), max(a, c)))
                edges.add((min(b, c), max(b, c)))

            new_faces = []
            for cyc in faces:
                signs = {cls_list[v] for v in cyc}
                if not (1 in signs and -1 in signs):
                    if signs == {0}:
                        raise DegeneracyError(f"neuron {k} vanishes on a whole face")
                    new_faces.append(cyc)
                    continue
                full = []
                m = len(cyc)
                for i in range(m):
                    a, b = cyc[i], cyc[(i + 1) % m]
                    full.append(a)
                    c = split.get((min(a, b), max(a, b)))
                    if c is not None:
                        full.append(c)
                zeros = [i for i, v in enumerate(full) if cls_list[v] == 0]
                m = len(full)
                if len(zeros) != 2 or (zeros[1] - zeros[0]) in (1, m - 1):
                    raise DegeneracyError(
                        f"neuron {k}: face crossing has {len(zeros)} zero vertices"
                    )
                i, j = zeros
                left = full[i : j + 1]
                right = full[j:] + full[: i + 1]
                for piece in (left, right):
                    piece_signs = {cls_list[v] for v in piece}
                    if 1 in piece_signs and -1 in piece_signs:
                        raise DegeneracyError(f"neuron {k}: face cut leaves mixed signs")
                new_faces.append(left)
                new_faces.append(right)
                a, b = full[i], full[j]
                edges.add((min(a, b), max(a, b)))
            faces = new_faces

    return _assemble(box, V, edges, faces)


def _assemble(box, V, edges, faces) -> CellComplex2D:
    n = V.n
    xy = V.xy[:n].copy()
    vsign = V.sign[:n].copy()
    edge_list = sorted(edges)
    edge_arr = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
    edge_id = {e: i for i, e in enumerate(edge_list)}
    esign = np.sign(vsign[edge_arr[:, 0]].astype(np.int16) + vsign[edge_arr[:, 1]]).astype(np.int8)
    face_edges = []
    fsign = np.zeros((len(faces), vsign.shape[1]), dtype=np.int8)
    for f, cyc in enumerate(faces):
        m = len(cyc)
        face_edges.append([edge_id[(min(cyc[i], cyc[(i + 1) % m]), max(cyc[i], cyc[(i + 1) % m]))]
                           for i in range(m)])
        fsign[f] = np.sign(vsign[cyc].astype(np.int32).sum(axis=0))
    if vsign.shape[1] and np.any(fsign == 0):
        raise DegeneracyError("a face ended up with a zero sign entry")
    keys = {tuple(row) for row in fsign.tolist()}
    if len(keys) != len(faces):
        raise DegeneracyError("two faces share one sign vector")
    return CellComplex2D(box, xy, vsign, edge_arr, esign, [list(c) for c in faces], face_edges, fsign)


def jitter_biases(net: ReluNetwork, seed: int, scale=JITTER) -> ReluNetwork:
    rng = np.random.default_rng(seed)
    layers = [DenseLayer(l.weight, l.bias + rng.uniform(-scale, scale, size=l.bias.shape)) for l in net.hidden]
    return ReluNetwork(tuple(layers) + (net.layers[-1],))


def decompose(net: ReluNetwork, box: BoundingBox2D, tol: float = DEFAULT_TOL, retries: int = 3,
              jitter_seed: int = 0) -> CellComplex2D:
    """Polyhedral complex of ``box`` cut by every hidden neuron of ``net``.

    On a degenerate configuration the hidden biases are jittered by at most
    1e-7 and the sweep restarted, up to ``retries`` times.
    """
    if net.input_dim != 2:
        raise DimensionError(f"decomposition needs 2D input, network takes {net.input_dim}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    current = net
    for attempt in range(retries + 1):
        try:
            return replace(_subdivide(current, box, tol), network=current)
        except DegeneracyError as exc:
            if attempt == retries:
                raise
            log.warning("degenerate subdivision (%s); retrying with jittered biases", exc)
            current = jitter_biases(net, seed=1000 * jitter_seed + attempt)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------- point location


def _fallback_face(cx: CellComplex2D, pre_row, pattern, tol):
    confident = np.abs(pre_row) > tol
    want = np.where(pre_row > 0, 1, -1).astype(np.int8)
    ok = np.all(cx.face_signs[:, confident] == want[confident], axis=1)
    cand = np.flatnonzero(ok)
    if cand.size == 0:
        return None
    agree = (cx.face_signs[cand] == np.where(np.asarray(pattern) > 0, 1, -1)).sum(axis=1)
    return int(cand[np.argmax(agree)])


def locate_many(cx: CellComplex2D, net: ReluNetwork, points, tol=1e-6) -> np.ndarray:
    """Face id for every point, -1 for points outside the box.

    Patterns come from the network recorded on the complex when there is one,
    so a bias-jittered decomposition is queried with the jittered weights.
    """
    if cx.network is not None:
        net = cx.network
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    out = np.full(len(pts), -1, dtype=np.int64)
    inside = np.flatnonzero(cx.box.contains(pts))
    if inside.size == 0:
        return out
    if cx.n_hidden == 0:
        out[inside] = 0
        return out
    pats = patterns_batch(net, pts[inside])
    missing = []
    for row, idx in zip(pats.tolist(), inside):
        fid = cx.face_by_pattern.get(tuple(row))
        if fid is None:
            missing.append(idx)
        else:
            out[idx] = fid
    if missing:
        _, pres = forward_batch(net, pts[missing])
        pre = np.concatenate(pres, axis=1)
        for r, idx in enumerate(missing):
            fid = _fallback_face(cx, pre[r], (pre[r] > 0).astype(int), tol)
            if fid is None:
                raise LocateError(f"no face consistent with point {pts[idx]}")
            out[idx] = fid
    return out


def locate(cx: CellComplex2D, net: ReluNetwork, point, tol=1e-6) -> int:
    p = np.asarray(point, dtype=np.float64).reshape(2)
    if not cx.box.contains(p)[0]:
        raise LocateError(f"point {p} lies outside the box")
    return int(locate_many(cx, net, p[None, :], tol)[0])


def count_points_per_face(cx: CellComplex2D, net: ReluNetwork, points) -> np.ndarray:
    """Training points per face (indexed by face id); points outside the box are ignored."""
    ids = locate_many(cx, net, points)
    return np.bincount(ids[ids >= 0], minlength=len(cx.face_vertices))
