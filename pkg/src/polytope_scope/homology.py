"""Z2 persistence of a 2D cell complex under dimension-blocked random filtrations.

Filtration step ``t`` means the first ``t`` cells have been added, so the
cell at filtration index ``j`` enters at ``t = j + 1`` and ``t`` runs over
``0..T`` with ``T`` the total number of cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChainConditionError, OracleMismatchError
from .polydecomp import CellComplex2D
from .unionfind import UnionFind

DEFAULT_TRIALS = 10
DEFAULT_BINS = 200


@dataclass(frozen=True)
class Filtration:
    dims: np.ndarray  # dimension of the cell at each filtration index
    cells: np.ndarray  # index of that cell within its dimension
    seed: object = None

    def __len__(self):
        return len(self.dims)


@dataclass(frozen=True)
class PersistencePairs:
    pairs: list  # (birth index, death index, dimension)
    essentials: list  # (birth index, dimension)


@dataclass(frozen=True)
class BettiCurve:
    values: np.ndarray  # length T + 1
    dim: int


@dataclass(frozen=True)
class AveragedCurves:
    steps: np.ndarray
    percent: np.ndarray
    beta0: np.ndarray
    beta1: np.ndarray
    n_trials: int

    @property
    def n_cells(self) -> int:
        return len(self.steps) - 1


@dataclass
class HeatMapGrid:
    dim: int
    epochs: list
    y: np.ndarray  # normalised filtration position, [0, 1]
    values: np.ndarray  # (n_epochs, n_bins) averaged Betti numbers
    loss: np.ndarray
    max_cells: int
    critical: np.ndarray  # per epoch: first argmax of the averaged curve / max_cells


def _rng(seed):
    return np.random.default_rng(seed)


def random_filtration(cx: CellComplex2D, seed) -> Filtration:
    """Vertices, then edges, then faces, each block uniformly shuffled."""
    rng = _rng(seed)
    f0, f1, f2 = cx.f_vector().as_tuple()
    cells = np.concatenate([rng.permutation(f0), rng.permutation(f1), rng.permutation(f2)])
    dims = np.repeat(np.array([0, 1, 2], dtype=np.int8), [f0, f1, f2])
    return Filtration(dims, cells.astype(np.int64), seed)


def boundary_columns(cx: CellComplex2D, filt: Filtration) -> list:
    """Z2 boundary matrix as one sorted list of filtration indices per column."""
    f0, f1, f2 = cx.f_vector().as_tuple()
    pos = [np.empty(f0, dtype=np.int64), np.empty(f1, dtype=np.int64), np.empty(f2, dtype=np.int64)]
    for j, (d, c) in enumerate(zip(filt.dims.tolist(), filt.cells.tolist())):
        pos[d][c] = j
    vpos, epos = pos[0].tolist(), pos[1].tolist()
    edges = cx.edges.tolist()
    cols = []
    for j, (d, c) in enumerate(zip(filt.dims.tolist(), filt.cells.tolist())):
        if d == 0:
            col = []
        elif d == 1:
            a, b = edges[c]
            col = sorted((vpos[a], vpos[b]))
        else:
            col = sorted(epos[e] for e in cx.face_edges[c])
        if col and col[-1] >= j:
            raise ChainConditionError(f"column {j} references a later cell")
        cols.append(col)
    return cols


def check_chain_condition(cx: CellComplex2D):
    """Raise unless the boundary of every face boundary vanishes mod 2."""
    edges = cx.edges.tolist()
    for f, cyc in enumerate(cx.face_edges):
        acc = set()
        for e in cyc:
            acc ^= set(edges[e])
        if acc:
            raise ChainConditionError(f"face {f}: boundary of boundary is {sorted(acc)}")
        if len(set(cyc)) != len(cyc):
            raise ChainConditionError(f"face {f} repeats an edge")


def persistence(cx: CellComplex2D, filt: Filtration, clearing=True) -> PersistencePairs:
    """Standard Z2 column reduction; with ``clearing``, 2-cells are reduced first."""
    check_chain_condition(cx)
    cols = boundary_columns(cx, filt)
    dims = filt.dims.tolist()
    n = len(cols)
    low_owner = {}
    lows = [-1] * n
    cleared = [False] * n
    order = sorted(range(n), key=lambda j: (-dims[j], j)) if clearing else range(n)
    for j in order:
        if cleared[j] or not cols[j]:
            continue
        col = set(cols[j])
        low = max(col)
        while low in low_owner:
            col ^= low_owner[low]
            if not col:
                low = -1
                break
            low = max(col)
        if low >= 0:
            low_owner[low] = col
            lows[j] = low
            if clearing:
                cleared[low] = True
    pairs = sorted((low, j, dims[low]) for j, low in enumerate(lows) if low >= 0)
    dead = {p[0] for p in pairs}
    essentials = [(j, dims[j]) for j in range(n) if lows[j] < 0 and j not in dead]
    return PersistencePairs(pairs, essentials)


def betti_from_pairs(pairs: PersistencePairs, T: int):
    """Betti curves for t = 0..T from persistence pairs."""
    out = []
    for dim in (0, 1):
        diff = np.zeros(T + 2, dtype=np.int64)
        for b, dm in pairs.essentials:
            if dm == dim:
                diff[b + 1] += 1
        for b, d, dm in pairs.pairs:
            if dm == dim:
                diff[b + 1] += 1
                diff[d + 1] -= 1
        out.append(BettiCurve(np.cumsum(diff)[: T + 1], dim))
    return tuple(out)


def betti_oracle(cx: CellComplex2D, filt: Filtration):
    """Independent Betti curves: union-find for beta0, Euler's formula for beta1."""
    T = len(filt)
    edges = cx.edges.tolist()
    b0 = np.zeros(T + 1, dtype=np.int64)
    b1 = np.zeros(T + 1, dtype=np.int64)
    uf = UnionFind(len(cx.vertices))
    uf.components = 0
    counts = [0, 0, 0]
    for j, (d, c) in enumerate(zip(filt.dims.tolist(), filt.cells.tolist())):
        counts[d] += 1
        if d == 0:
            uf.components += 1
        elif d == 1:
            uf.union(*edges[c])
        b0[j + 1] = uf.components
        # beta2 = 0 for a planar 2-complex
        b1[j + 1] = uf.components - counts[0] + counts[1] - counts[2]
    return BettiCurve(b0, 0), BettiCurve(b1, 1)


def betti_curves(pairs: PersistencePairs, T: int, cx: CellComplex2D | None = None,
                 filt: Filtration | None = None):
    """Betti curves from pairs; when the complex and filtration are given they
    are checked against the union-find / Euler oracle and a mismatch raises."""
    b0, b1 = betti_from_pairs(pairs, T)
    if cx is not None and filt is not None:
        o0, o1 = betti_oracle(cx, filt)
        if not (np.array_equal(b0.values, o0.values) and np.array_equal(b1.values, o1.values)):
            bad = np.flatnonzero((b0.values != o0.values) | (b1.values != o1.values))
            raise OracleMismatchError(f"persistence and oracle disagree at t = {bad[:5].tolist()}")
    return b0, b1


def single_trial(cx: CellComplex2D, seed):
    filt = random_filtration(cx, seed)
    pairs = persistence(cx, filt)
    return betti_curves(pairs, len(filt), cx, filt)


def averaged_curves(cx: CellComplex2D, n_trials: int = DEFAULT_TRIALS, base_seed: int = 0) -> AveragedCurves:
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    T = cx.f_vector().total
    acc0 = np.zeros(T + 1)
    acc1 = np.zeros(T + 1)
    for trial in range(n_trials):
        b0, b1 = single_trial(cx, (base_seed, trial))
        acc0 += b0.values
        acc1 += b1.values
    steps = np.arange(T + 1)
    return AveragedCurves(steps, 100.0 * steps / max(T, 1), acc0 / n_trials, acc1 / n_trials, n_trials)


def critical_step(curve) -> int:
    """Smallest step attaining the curve's maximum."""
    return int(np.argmax(np.asarray(curve)))


def resample(curve, max_cells: int, y):
    """Evaluate a step curve at normalised positions ``y`` of a ``max_cells`` axis."""
    curve = np.asarray(curve)
    t = np.floor(np.asarray(y) * max_cells + 1e-9).astype(np.int64)
    return curve[np.clip(t, 0, len(curve) - 1)]


def heat_map(sweep, n_trials: int = DEFAULT_TRIALS, base_seed: int = 0, bins: int = DEFAULT_BINS,
             curves=None):
    """Heat-map grids ``(beta0, beta1)`` over epochs.

    ``sweep`` is a list of ``(epoch, complex, loss)``; precomputed averaged
    curves may be passed in ``curves`` (same order) to avoid recomputation.
    """
    if len(sweep) < 2:
        raise ValueError("a heat map needs at least two epochs")
    if curves is None:
        curves = [averaged_curves(cx, n_trials, base_seed) for _, cx, _ in sweep]
    max_cells = max(c.n_cells for c in curves)
    y = np.linspace(0.0, 1.0, bins)
    epochs = [int(e) for e, _, _ in sweep]
    loss = np.array([float(l) for _, _, l in sweep])
    grids = []
    for dim in (0, 1):
        rows = [c.beta0 if dim == 0 else c.beta1 for c in curves]
        values = np.vstack([resample(r, max_cells, y) for r in rows])
        critical = np.array([critical_step(r) / max_cells for r in rows])
        grids.append(HeatMapGrid(dim, epochs, y, values, loss, max_cells, critical))
    return tuple(grids)
