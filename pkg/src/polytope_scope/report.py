"""Tabular and JSON artefacts: experiment summaries, curves, heat maps, f-vectors, graphs."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .serialize import atomic_write_text, dumps, sign_string

TABLE_GROUP_HEADER = ["", "", "Loss", "", "Unweighted", "", "Weighted", ""]
TABLE_HEADER = ["Dataset", "Architecture", "Train", "Test",
                "Missclass. (%)", "L2 Error", "Missclass. (%)", "L2 Error"]


@dataclass(frozen=True)
class ExperimentSummary:
    dataset: str
    architecture: tuple
    train_loss: float
    test_loss: float
    unweighted_misclass: float  # percent
    unweighted_l2: float
    weighted_misclass: float  # percent
    weighted_l2: float
    seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d["architecture"] = list(self.architecture)
        return d

    @classmethod
    def from_reports(cls, dataset, widths, train_loss, test_loss, unweighted, weighted, seed=0):
        return cls(dataset, tuple(int(w) for w in widths), float(train_loss), float(test_loss),
                   100.0 * unweighted.misclassified_fraction, unweighted.l2_error,
                   100.0 * weighted.misclassified_fraction, weighted.l2_error, int(seed))


def _table_number(x) -> str:
    """Whole numbers without decimals, everything else to two decimals."""
    r = round(float(x), 2)
    return str(int(r)) if r == int(r) else f"{r:.2f}"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def summary_table(rows) -> str:
    """CSV with the two-level header of the classification results table."""
    out = [TABLE_GROUP_HEADER, TABLE_HEADER]
    for r in rows:
        out.append([
            r.dataset,
            "(" + ",".join(str(w) for w in r.architecture) + ")",
            f"{r.train_loss:.5f}",
            f"{r.test_loss:.5f}",
            _table_number(r.unweighted_misclass) + "%",
            _table_number(r.unweighted_l2),
            _table_number(r.weighted_misclass) + "%",
            _table_number(r.weighted_l2),
        ])
    return _csv_text(out)


def _f(x) -> str:
    return repr(float(x))


CURVE_FIELDS = ["epoch", "trial", "dim", "t", "percent", "beta"]


def curves_rows(epoch, curves, trial="mean"):
    """Rows of the curves CSV for one averaged curve pair (or one trial)."""
    rows = []
    for dim, values in ((0, curves.beta0), (1, curves.beta1)):
        for t, pct, b in zip(curves.steps.tolist(), curves.percent.tolist(), np.asarray(values).tolist()):
            rows.append([epoch, trial, dim, t, _f(pct), _f(b)])
    return rows


def write_curves_csv(path, per_epoch):
    """``per_epoch`` is a list of (epoch, AveragedCurves)."""
    rows = [CURVE_FIELDS]
    for epoch, curves in per_epoch:
        rows.extend(curves_rows(epoch, curves))
    atomic_write_text(path, _csv_text(rows))


def write_heatmap_csv(path, grid):
    """One row per epoch: loss, critical position, then the averaged value in every bin."""
    rows = [["epoch", "loss", "critical"] + [f"{y:.6f}" for y in grid.y]]
    for i, e in enumerate(grid.epochs):
        rows.append([e, _f(grid.loss[i]), _f(grid.critical[i])] + [_f(v) for v in grid.values[i]])
    atomic_write_text(path, _csv_text(rows))


def write_fvector_csv(path, epochs, fvectors, losses):
    rows = [["epoch", "loss", "f0", "f1", "f2", "euler"]]
    for e, fv, l in zip(epochs, fvectors, losses):
        rows.append([e, _f(l), fv.f0, fv.f1, fv.f2, fv.euler])
    atomic_write_text(path, _csv_text(rows))


def write_graph_csv(path, g):
    """Dual-graph edge list with the activation pattern of both endpoints."""
    pat = ["".join(str(b) for b in p) for p in g.patterns]
    rows = [["tail", "head", "tail_pattern", "head_pattern"]]
    rows.extend([a, b, pat[a], pat[b]] for a, b in g.edges.tolist())
    atomic_write_text(path, _csv_text(rows))


def partition_json(report, g) -> str:
    d = report.to_dict()
    d["nodes"] = [{"id": i, "pattern": "".join(str(b) for b in p),
                   "sign": sign_string([report.signs[i]]), "value": float(report.fiedler_vector[i])}
                  for i, p in enumerate(g.patterns)]
    return dumps(d)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2:
        return float("nan")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    return float(np.dot(a, b) / den) if den > 0 else float("nan")


def loss_spike_correlation(loss, critical) -> tuple:
    """Pearson correlation of consecutive loss changes with critical-position changes."""
    dl = np.diff(np.asarray(loss, dtype=np.float64))
    dc = np.diff(np.asarray(critical, dtype=np.float64))
    return pearson(dl, dc), len(dl), dl, dc


def write_correlation_csv(path, grids):
    """One row per Betti dimension: number of consecutive-epoch pairs, r, and its sign."""
    rows = [["dim", "n_pairs", "pearson_r", "sign"]]
    for grid in grids:
        r, n, _, _ = loss_spike_correlation(grid.loss, grid.critical)
        sign = "nan" if not np.isfinite(r) else ("+" if r > 0 else "-" if r < 0 else "0")
        rows.append([grid.dim, n, repr(r) if np.isfinite(r) else "nan", sign])
    atomic_write_text(path, _csv_text(rows))
    return rows


def write_deltas_csv(path, grids):
    rows = [["dim", "epoch", "loss_delta", "critical_delta"]]
    for grid in grids:
        _, _, dl, dc = loss_spike_correlation(grid.loss, grid.critical)
        for e, a, b in zip(grid.epochs[1:], dl, dc):
            rows.append([grid.dim, e, _f(a), _f(b)])
    atomic_write_text(path, _csv_text(rows))
