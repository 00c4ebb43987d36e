"""End-to-end experiment steps shared by the CLI and the acceptance suite.

In-memory helpers (``classification_experiment``, ``analyse_checkpoint``,
``sweep_analyses``) do the work; the ``cmd_*`` functions wrap them with the run
directory layout and return the files they wrote.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report, svg
from .config import RunConfig, Task
from .datagen import (DuffingParams, DuffingTrajectory, LabeledDataset2D, duffing_trajectory, gen_two_circles,
                      gen_two_moons, pinn_pairs, read_dataset_csv, read_trajectory_csv, write_dataset_csv,
                      write_trajectory_csv)
from .dualgraph import (PartitionReport, build_dual_graph, fiedler, hamming_vs_geometric, score_partition,
                        vertex_weights_from_data)
from .errors import EigenError, MissingArtifactError
from .homology import AveragedCurves, HeatMapGrid, averaged_curves, critical_step, heat_map
from .network import ReluNetwork, init_network
from .polydecomp import BoundingBox2D, CellComplex2D, FVector, decompose
from .serialize import (atomic_write_text, dumps, load_checkpoint, load_complex, network_from_dict,
                        network_to_dict, save_complex)
from .trainer import LossKind, TrainConfig, read_log_csv, train

log = logging.getLogger(__name__)

DATASET_NAMES = {Task.CIRCLES: "Circles", Task.MOONS: "Moons"}


# ------------------------------------------------------------------ data and boxes

def duffing_params(cfg: RunConfig) -> DuffingParams:
    d = cfg.data
    return DuffingParams(d.delta, d.alpha, d.beta, d.gamma, d.omega)


def make_data(cfg: RunConfig):
    d = cfg.data
    if cfg.task is Task.CIRCLES:
        return gen_two_circles(d.n_points, d.r_inner, d.r_outer, d.noise_sd, seed=cfg.seed)
    if cfg.task is Task.MOONS:
        return gen_two_moons(d.n_points, d.noise_sd, seed=cfg.seed)
    return duffing_trajectory(duffing_params(cfg), d.n_steps, d.dt)


def classification_box(ds: LabeledDataset2D, inflate=0.2) -> BoundingBox2D:
    return BoundingBox2D.around(ds.points, inflate)


def pinn_box(traj: DuffingTrajectory, inflate=0.1, t_max=20.0) -> BoundingBox2D:
    """``[0, t_max] x [min x, max x]`` grown by ``inflate`` of its extent."""
    return BoundingBox2D(0.0, t_max, float(np.min(traj.x)), float(np.max(traj.x))).inflated(inflate)


def analysis_box(cfg: RunConfig, data) -> BoundingBox2D:
    if cfg.task.is_classification:
        return classification_box(data, cfg.box.inflate)
    return pinn_box(data, cfg.box.inflate)


def train_config(cfg: RunConfig) -> TrainConfig:
    t = cfg.trainer
    kind = LossKind.PINN if cfg.task is Task.PINN else LossKind.BCE
    return TrainConfig(t.epochs, t.learning_rate, kind, t.checkpoint_every, cfg.seed, tuple(t.adam))


def train_data(cfg: RunConfig, data):
    """What the trainer consumes: the dataset itself or the PINN pairs."""
    return data if cfg.task.is_classification else pinn_pairs(data)


# ------------------------------------------------------------------ classification

@dataclass
class ClassificationResult:
    net: ReluNetwork
    dataset: LabeledDataset2D
    complex: CellComplex2D
    graph: object
    unweighted: PartitionReport
    weighted: PartitionReport
    logs: list
    summary: report.ExperimentSummary


def fiedler_reports(cx: CellComplex2D, net: ReluNetwork, ds: LabeledDataset2D, solver="jacobi"):
    """Dual graph plus unweighted and training-point-weighted partition reports.

    Both partitions are scored on the training points, the same points that
    define the vertex weights.
    """
    g = build_dual_graph(cx)
    hamming_vs_geometric(cx, g)
    lam_u, v_u = fiedler(g, solver=solver)
    spec = vertex_weights_from_data(cx, net, ds.x_train)
    lam_w, v_w = fiedler(g, spec, solver=solver)
    unweighted = score_partition(g, v_u, cx, net, ds.x_train, ds.y_train, lam_u)
    weighted = score_partition(g, v_w, cx, net, ds.x_train, ds.y_train, lam_w)
    return g, unweighted, weighted


def classification_experiment(cfg: RunConfig, run_dir=None, solver="jacobi") -> ClassificationResult:
    """Generate data, train, decompose and score both Fiedler partitions."""
    if not cfg.task.is_classification:
        raise ValueError("classification_experiment needs a classification task")
    ds = make_data(cfg)
    net = init_network(cfg.architecture, cfg.seed, cfg.trainer.init)
    net, logs, _ = train(net, ds, train_config(cfg), run_dir=run_dir)
    cx = decompose(net, classification_box(ds, cfg.box.inflate), cfg.box.tol, cfg.box.retries, cfg.seed)
    g, unweighted, weighted = fiedler_reports(cx, net, ds, solver)
    last = logs[-1]
    summary = report.ExperimentSummary.from_reports(DATASET_NAMES[cfg.task], net.widths, last.train_loss,
                                                    last.test_loss, unweighted, weighted, cfg.seed)
    return ClassificationResult(net, ds, cx, g, unweighted, weighted, logs, summary)


# ------------------------------------------------------------------ epoch sweep

@dataclass
class CheckpointAnalysis:
    epoch: int
    loss: float
    fvector: FVector
    curves: AveragedCurves
    partition: dict = field(default_factory=dict)

    def row(self):
        return {"epoch": self.epoch, "loss": self.loss, "f0": self.fvector.f0, "f1": self.fvector.f1,
                "f2": self.fvector.f2, "beta0_peak_step": critical_step(self.curves.beta0),
                "beta1_peak_step": critical_step(self.curves.beta1), **self.partition}


def analyse_checkpoint(epoch, net, loss, box, tol=1e-9, retries=3, n_trials=10, base_seed=0, dataset=None,
                       jitter_seed=0) -> CheckpointAnalysis:
    """Decompose one checkpoint and compute its f-vector, averaged curves and (optionally) partitions."""
    cx = decompose(net, box, tol, retries, jitter_seed)
    curves = averaged_curves(cx, n_trials, base_seed)
    part = {}
    if dataset is not None:
        try:
            g, u, w = fiedler_reports(cx, net, dataset)
            part = {"n_nodes": g.n_nodes, "n_edges": len(g.edges), "n_components": g.n_components(),
                    "unweighted_lambda": u.fiedler_value, "unweighted_misclass": u.misclassified_fraction,
                    "unweighted_l2": u.l2_error, "weighted_lambda": w.fiedler_value,
                    "weighted_misclass": w.misclassified_fraction, "weighted_l2": w.l2_error}
        except (EigenError, ValueError) as exc:
            log.warning("epoch %d: no partition (%s)", epoch, exc)
    return CheckpointAnalysis(int(epoch), float(loss), cx.f_vector(), curves, part)


def _job(args):
    epoch, net_dict, loss, box, tol, retries, n_trials, base_seed, dataset, jitter_seed = args
    return analyse_checkpoint(epoch, network_from_dict(net_dict), loss, box, tol, retries, n_trials,
                              base_seed, dataset, jitter_seed)


def sweep_analyses(checkpoints, box, tol=1e-9, retries=3, n_trials=10, base_seed=0, dataset=None,
                   workers=1, jitter_seed=0):
    """Analyse ``(epoch, net, loss)`` checkpoints, in parallel when ``workers > 1``.

    Results are ordered by epoch whatever the completion order.
    """
    jobs = [(e, network_to_dict(n), l, box, tol, retries, n_trials, base_seed, dataset, jitter_seed)
            for e, n, l in checkpoints]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    return sorted(results, key=lambda r: r.epoch)


def sweep_heat_maps(analyses, bins=200):
    if len(analyses) < 2:
        raise ValueError("a heat map needs at least two checkpoints")
    sweep = [(a.epoch, None, a.loss) for a in analyses]
    return heat_map(sweep, bins=bins, curves=[a.curves for a in analyses])


# ------------------------------------------------------------------ run directory

class RunDir:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = Path(cfg.out_dir)
        self.data = self.root / "data"
        self.train = self.root / "train"
        self.analysis = self.root / "analysis"
        self.sweep = self.root / "sweep"
        self.figures = self.root / "figures"

    def write_config(self):
        atomic_write_text(self.root / "config.json", dumps(self.cfg.echo()))
        return self.root / "config.json"

    def record(self, command, paths):
        """Register ``paths`` under ``command`` in manifest.json."""
        mpath = self.root / "manifest.json"
        manifest = json.loads(mpath.read_text()) if mpath.exists() else {"commands": {}}
        rel = sorted({str(Path(p).relative_to(self.root)) for p in paths})
        manifest["commands"][command] = rel
        atomic_write_text(mpath, dumps(manifest))
        return mpath

    def require(self, path, producer):
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"{path} not found; run `{producer}` first")
        return path

    def load_data(self):
        if self.cfg.task.is_classification:
            return read_dataset_csv(self.require(self.data / "dataset.csv", "gen-data"))
        return read_trajectory_csv(self.require(self.data / "trajectory.csv", "gen-data"))

    def checkpoints(self):
        ckpts = sorted(((int(m.group(1)), p) for p in self.train.glob("ckpt_*.json")
                        if (m := re.fullmatch(r"ckpt_(\d+)\.json", p.name))))
        if not ckpts:
            raise MissingArtifactError(f"no checkpoints in {self.train}; run `train` first")
        return ckpts

    def final_checkpoint(self):
        return load_checkpoint(self.checkpoints()[-1][1])


def cmd_gen_data(cfg: RunConfig):
    rd = RunDir(cfg)
    data = make_data(cfg)
    if cfg.task.is_classification:
        out = rd.data / "dataset.csv"
        write_dataset_csv(data, out)
    else:
        out = rd.data / "trajectory.csv"
        write_trajectory_csv(data, out)
    return [rd.write_config(), out]


def cmd_train(cfg: RunConfig):
    rd = RunDir(cfg)
    data = rd.load_data()
    net = init_network(cfg.architecture, cfg.seed, cfg.trainer.init)
    aux = None if cfg.task.is_classification else duffing_params(cfg)
    for stale in rd.train.glob("ckpt_*.json"):
        stale.unlink()
    _, _, ckpts = train(net, train_data(cfg, data), train_config(cfg), run_dir=rd.train, aux=aux)
    return [rd.write_config(), rd.train / "run.json", rd.train / "log.csv", *ckpts]


def _decompose_final(rd: RunDir):
    cfg = rd.cfg
    data = rd.load_data()
    net, meta = rd.final_checkpoint()
    box = analysis_box(cfg, data)
    return data, net, meta, decompose(net, box, cfg.box.tol, cfg.box.retries, cfg.seed)


def _write_fvector_json(path, fv: FVector, epoch):
    atomic_write_text(path, dumps({"epoch": epoch, "f0": fv.f0, "f1": fv.f1, "f2": fv.f2, "euler": fv.euler}))


def cmd_decompose(cfg: RunConfig):
    rd = RunDir(cfg)
    _, _, meta, cx = _decompose_final(rd)
    save_complex(cx, rd.analysis / "complex.json")
    _write_fvector_json(rd.analysis / "fvector.json", cx.f_vector(), meta.get("epoch"))
    return [rd.write_config(), rd.analysis / "complex.json", rd.analysis / "fvector.json"]


def cmd_fiedler(cfg: RunConfig):
    rd = RunDir(cfg)
    if not cfg.task.is_classification:
        raise ValueError("the fiedler command applies to classification tasks only")
    ds, net, meta, cx = _decompose_final(rd)
    g, unweighted, weighted = fiedler_reports(cx, net, ds)
    logs = read_log_csv(rd.require(rd.train / "log.csv", "train"))
    last = logs[-1]
    summary = report.ExperimentSummary.from_reports(DATASET_NAMES[cfg.task], net.widths, last.train_loss,
                                                    last.test_loss, unweighted, weighted, cfg.seed)
    a = rd.analysis
    report.write_graph_csv(a / "graph.csv", g)
    atomic_write_text(a / "partition_unweighted.json", report.partition_json(unweighted, g))
    atomic_write_text(a / "partition_weighted.json", report.partition_json(weighted, g))
    atomic_write_text(a / "summary.csv", report.summary_table([summary]))
    atomic_write_text(a / "summary.json", dumps(summary.to_dict()))
    return [rd.write_config(), a / "graph.csv", a / "partition_unweighted.json", a / "partition_weighted.json",
            a / "summary.csv", a / "summary.json"]


def cmd_homology(cfg: RunConfig):
    rd = RunDir(cfg)
    _, _, meta, cx = _decompose_final(rd)
    h = cfg.homology
    curves = averaged_curves(cx, h.n_trials, h.base_seed)
    out = rd.analysis / "curves.csv"
    report.write_curves_csv(out, [(meta.get("epoch", 0), curves)])
    return [rd.write_config(), out]


def cmd_sweep(cfg: RunConfig):
    rd = RunDir(cfg)
    data = rd.load_data()
    box = analysis_box(cfg, data)
    checkpoints = []
    for epoch, path in rd.checkpoints():
        net, meta = load_checkpoint(path)
        checkpoints.append((epoch, net, meta["loss"]))
    h = cfg.homology
    ds = data if cfg.task.is_classification else None
    analyses = sweep_analyses(checkpoints, box, cfg.box.tol, cfg.box.retries, h.n_trials, h.base_seed, ds,
                              cfg.workers, cfg.seed)
    s = rd.sweep
    written = [rd.write_config()]
    report.write_curves_csv(s / "curves.csv", [(a.epoch, a.curves) for a in analyses])
    report.write_fvector_csv(s / "fvector.csv", [a.epoch for a in analyses], [a.fvector for a in analyses],
                             [a.loss for a in analyses])
    written += [s / "curves.csv", s / "fvector.csv"]
    rows = [a.row() for a in analyses]
    fields = list(rows[0].keys())
    for r in rows:
        fields += [k for k in r if k not in fields]
    text = ",".join(fields) + "\n" + "".join(
        ",".join(repr(r[k]) if isinstance(r.get(k), float) else str(r.get(k, "")) for k in fields) + "\n"
        for r in rows)
    atomic_write_text(s / "epochs.csv", text)
    written.append(s / "epochs.csv")
    if len(analyses) >= 2:
        grids = sweep_heat_maps(analyses, h.bins)
        for grid in grids:
            report.write_heatmap_csv(s / f"heatmap_beta{grid.dim}.csv", grid)
            written.append(s / f"heatmap_beta{grid.dim}.csv")
        report.write_correlation_csv(s / "loss_spike_correlation.csv", grids)
        report.write_deltas_csv(s / "loss_critical_deltas.csv", grids)
        written += [s / "loss_spike_correlation.csv", s / "loss_critical_deltas.csv"]
    return written


# ------------------------------------------------------------------ plotting

def read_heatmap_csv(path, dim) -> HeatMapGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    y = np.array([float(v) for v in rows[0][3:]])
    body = rows[1:]
    epochs = [int(r[0]) for r in body]
    loss = np.array([float(r[1]) for r in body])
    critical = np.array([float(r[2]) for r in body])
    values = np.array([[float(v) for v in r[3:]] for r in body])
    return HeatMapGrid(dim, epochs, y, values, loss, 0, critical)


def read_curves_csv(path):
    """Averaged curves per epoch from a curves CSV, as {epoch: AveragedCurves}."""
    data = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            data.setdefault(int(r["epoch"]), {}).setdefault(int(r["dim"]), []).append(
                (int(r["t"]), float(r["percent"]), float(r["beta"])))
    out = {}
    for epoch, dims in data.items():
        b0 = np.array(sorted(dims[0]))
        b1 = np.array(sorted(dims[1]))
        out[epoch] = AveragedCurves(b0[:, 0].astype(np.int64), b0[:, 1], b0[:, 2], b1[:, 2], 0)
    return out


def read_fvector_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return ([int(r["epoch"]) for r in rows], [FVector(int(r["f0"]), int(r["f1"]), int(r["f2"])) for r in rows],
            [float(r["loss"]) for r in rows])


def cmd_plot(cfg: RunConfig):
    rd = RunDir(cfg)
    f = rd.figures
    written = []
    cpath = rd.analysis / "complex.json"
    if cpath.exists():
        cx = load_complex(cpath)
        atomic_write_text(f / "decomposition.svg", svg.render_decomposition_svg(cx))
        written.append(f / "decomposition.svg")
        if cfg.box.zoom is not None:
            atomic_write_text(f / "decomposition_zoom.svg", svg.render_decomposition_svg(cx, zoom=cfg.box.zoom))
            written.append(f / "decomposition_zoom.svg")
        for kind in ("unweighted", "weighted"):
            ppath = rd.analysis / f"partition_{kind}.json"
            if ppath.exists():
                rep = PartitionReport.from_dict(json.loads(ppath.read_text()))
                atomic_write_text(f / f"partition_{kind}.svg",
                                  svg.render_partition_svg(cx, rep, title=f"{kind} Fiedler partition"))
                written.append(f / f"partition_{kind}.svg")
    curves_path = rd.analysis / "curves.csv"
    if curves_path.exists():
        epoch, curves = max(read_curves_csv(curves_path).items())
        atomic_write_text(f / "curves.svg", svg.render_curves_svg(curves, title=f"averaged Betti curves, epoch {epoch}"))
        written.append(f / "curves.svg")
    for dim in (0, 1):
        hpath = rd.sweep / f"heatmap_beta{dim}.csv"
        if hpath.exists():
            atomic_write_text(f / f"heatmap_beta{dim}.svg", svg.render_heatmap_svg(read_heatmap_csv(hpath, dim)))
            written.append(f / f"heatmap_beta{dim}.svg")
    fpath = rd.sweep / "fvector.csv"
    if fpath.exists():
        atomic_write_text(f / "fvector.svg", svg.render_fvector_svg(*read_fvector_csv(fpath)))
        written.append(f / "fvector.svg")
    if not written:
        raise MissingArtifactError("nothing to plot; run decompose, homology or sweep first")
    return [rd.write_config(), *written]


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "decompose": cmd_decompose,
    "fiedler": cmd_fiedler,
    "homology": cmd_homology,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def run_command(name: str, cfg: RunConfig):
    paths = COMMANDS[name](cfg)
    rd = RunDir(cfg)
    manifest = rd.record(name, paths)
    return paths, manifest
