"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from polytope_scope import pipeline as P
from polytope_scope.config import RunConfig
from polytope_scope.datagen import DuffingParams, PinnPairs, duffing_trajectory, pinn_pairs
from polytope_scope.dualgraph import (WeightedLaplacianSpec, build_dual_graph, fiedler, laplacian,
                                      vertex_weights_from_data)
from polytope_scope.homology import betti_from_pairs, betti_oracle, persistence, random_filtration, single_trial
from polytope_scope.jacobi import jacobi_eigh
from polytope_scope.network import forward_batch, init_network, input_jacobian, patterns_batch
from polytope_scope.polydecomp import decompose, polygon_area, polygon_centroid
from polytope_scope.report import write_correlation_csv
from polytope_scope.serialize import load_checkpoint
from polytope_scope.trainer import LossKind, backprop, loss_and_grad, one_hot, pinn_loss, train
from polytope_scope.unionfind import count_components

from conftest import UNIT_BOX, finite_difference_grads, max_rel_error, random_net, safe_rows

SEEDS = range(5)
PINN_WIDTHS = [2, 16, 16, 16, 16, 1]


def verdict(capsys, n, ok, detail=""):
    with capsys.disabled():
        print(f"\nCRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {n}: {detail}"


def random_architecture(rng):
    """Hidden widths with at most 12 neurons in total, one to three layers."""
    n_layers = int(rng.integers(1, 4))
    total = int(rng.integers(n_layers, 13))
    cuts = np.sort(rng.choice(np.arange(1, total), size=n_layers - 1, replace=False)) if n_layers > 1 else []
    hidden = np.diff(np.concatenate([[0], cuts, [total]])).astype(int).tolist()
    return (2, *hidden, 1)


@pytest.fixture(scope="module")
def hundred_complexes():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    out = []
    for i in range(100):
        widths = random_architecture(rng)
        net = random_net(widths, 1000 + i)
        out.append((net, decompose(net, UNIT_BOX)))
    return out, time.perf_counter() - t0


def z2_boundary_matrices(cx):
    V, E, F = len(cx.vertices), len(cx.edges), len(cx.face_edges)
    d1 = np.zeros((V, E), dtype=np.int64)
    d1[cx.edges[:, 0], np.arange(E)] = 1
    d1[cx.edges[:, 1], np.arange(E)] = 1
    d2 = np.zeros((E, F), dtype=np.int64)
    for f, cyc in enumerate(cx.face_edges):
        for e in cyc:
            d2[e, f] ^= 1
    return d1, d2


class TestPropertySuite:
    def test_01_chain_condition(self, hundred_complexes, capsys):
        cxs, _ = hundred_complexes
        bad = 0
        for _, cx in cxs:
            d1, d2 = z2_boundary_matrices(cx)
            bad += int(np.any((d1 @ d2) % 2))
        hidden = max(cx.n_hidden for _, cx in cxs)
        verdict(capsys, 1, bad == 0, f"{len(cxs)} complexes (max {hidden} hidden), {bad} with nonzero dd")

    def test_02_euler(self, hundred_complexes, capsys):
        cxs, seconds = hundred_complexes
        chis = {cx.f_vector().euler for _, cx in cxs}
        verdict(capsys, 2, chis == {1} and seconds < 60,
                f"euler values {sorted(chis)}, decomposition of 100 nets took {seconds:.1f}s")

    def test_03_oracle_equivalence(self, hundred_complexes, capsys):
        cxs, _ = hundred_complexes
        t0 = time.perf_counter()
        mismatches = 0
        for k in range(50):
            cx = cxs[k % 25][1]
            filt = random_filtration(cx, k)
            b0, b1 = betti_from_pairs(persistence(cx, filt), len(filt))
            o0, o1 = betti_oracle(cx, filt)
            mismatches += int(not (np.array_equal(b0.values, o0.values) and np.array_equal(b1.values, o1.values)))
        seconds = time.perf_counter() - t0
        verdict(capsys, 3, mismatches == 0 and seconds < 120,
                f"50 (complex, seed) pairs, {mismatches} mismatches, {seconds:.1f}s")

    def test_04_peak_identities(self, hundred_complexes, capsys):
        cxs, _ = hundred_complexes
        bad = 0
        for i, (_, cx) in enumerate(cxs):
            fv = cx.f_vector()
            b0, b1 = single_trial(cx, i)
            bad += int(b0.values.max() != fv.f0 or b1.values.max() != fv.f2)
        verdict(capsys, 4, bad == 0, f"max b0 = f0 and max b1 = f2 failed on {bad} of {len(cxs)} complexes")

    def test_05_grid_oracle(self, capsys):
        t0 = time.perf_counter()
        n = 512
        h = UNIT_BOX.x_max - UNIT_BOX.x_min
        dx = h / n
        centres = UNIT_BOX.x_min + dx * (np.arange(n) + 0.5)
        X = np.array(np.meshgrid(centres, centres)).reshape(2, -1).T
        problems = []
        widths_list = [(2, 12, 1), (2, 6, 6, 1), (2, 4, 4, 4, 1), (2, 8, 4, 1), (2, 3, 5, 4, 1)]
        for i, widths in enumerate(widths_list):
            net = random_net(widths, 300 + i)
            cx = decompose(net, UNIT_BOX)
            keys = [tuple(p) for p in patterns_batch(cx.network, X).tolist()]
            if not set(keys) <= set(cx.face_by_pattern):
                problems.append(f"{widths}: grid pattern missing from complex")
                continue
            hits = np.bincount([cx.face_by_pattern[k] for k in keys], minlength=cx.f_vector().f2)
            for f in range(cx.f_vector().f2):
                poly = cx.face_polygon(f)
                cells = polygon_area(poly) / dx**2
                if cells <= 4:
                    continue
                perim = np.sum(np.linalg.norm(poly - np.roll(poly, -1, axis=0), axis=1))
                if hits[f] == 0 or abs(hits[f] - cells) > perim / dx + 4:
                    problems.append(f"{widths}: face {f} area {cells:.1f} cells, {hits[f]} grid hits")
        seconds = time.perf_counter() - t0
        verdict(capsys, 5, not problems and seconds < 60,
                f"{len(widths_list)} nets on a 512x512 grid, {seconds:.1f}s, problems: {problems[:3]}")

    def test_06_affine_regions(self, hundred_complexes, capsys):
        cxs, _ = hundred_complexes
        rng = np.random.default_rng(6)
        worst, n_faces = 0.0, 0
        for net, cx in cxs:
            for f in range(cx.f_vector().f2):
                poly = cx.face_polygon(f)
                c = polygon_centroid(poly)
                pts = 0.5 * c + 0.5 * rng.dirichlet(np.ones(len(poly)), size=4) @ poly
                out, _ = forward_batch(cx.network, pts)
                amap = input_jacobian(cx.network, cx.face_pattern(f))
                worst = max(worst, float(np.max(np.abs(amap(pts) - out))))
                n_faces += 1
        verdict(capsys, 6, worst < 1e-8, f"{n_faces} faces, max |affine - forward| = {worst:.2e}")

    def test_07_gradients(self, capsys):
        t0 = time.perf_counter()
        errs = {}
        net = random_net((2, 5, 4, 2), 7)
        X = np.random.default_rng(3).uniform(-1, 1, (25, 2))
        X = X[safe_rows(net, X)]
        labels = (X[:, 0] > 0).astype(int)
        for kind, Y in ((LossKind.BCE, one_hot(labels)), (LossKind.MSE, np.random.default_rng(4).normal(size=(len(X), 2)))):
            loss_fn = lambda n, Y=Y, kind=kind: loss_and_grad(n, (X, Y), kind)[0]
            errs[kind.value] = max_rel_error(backprop(net, (X, Y), kind), finite_difference_grads(net, loss_fn))
        pnet = random_net((2, 6, 5, 1), 8, scale=0.5)
        pairs = pinn_pairs(duffing_trajectory(n_steps=40))
        ok = safe_rows(pnet, pairs.inputs)
        sub = PinnPairs(pairs.inputs[ok], pairs.targets[ok], pairs.dt)
        p = DuffingParams(delta=0.1)
        errs["pinn"] = max_rel_error(backprop(pnet, sub, LossKind.PINN, p),
                                     finite_difference_grads(pnet, lambda n: pinn_loss(n, sub, p)[0]))
        seconds = time.perf_counter() - t0
        verdict(capsys, 7, max(errs.values()) < 1e-4 and seconds < 60,
                "max rel. errors " + ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", {seconds:.1f}s")

    def test_08_spectral(self, hundred_complexes, capsys):
        cxs, _ = hundred_complexes
        rng = np.random.default_rng(8)
        worst = {"kernel": 0, "residual": 0.0, "sum": 0.0, "wsum": 0.0}
        checked = 0
        for net, cx in cxs[:40]:
            g = build_dual_graph(cx)
            if g.n_nodes < 3:
                continue
            # drop a few edges so that disconnected graphs are exercised too
            keep = rng.random(len(g.edges)) > 0.3
            w, _ = jacobi_eigh(laplacian(g.__class__(g.patterns, g.edges[keep])))
            kernel = int(np.sum(w < 1e-10))
            worst["kernel"] += int(kernel != count_components(g.n_nodes, g.edges[keep]))
            L = laplacian(g)
            lam, v = fiedler(g)
            worst["residual"] = max(worst["residual"], float(np.max(np.abs(L @ v - lam * v))))
            worst["sum"] = max(worst["sum"], abs(float(v.sum())))
            spec = vertex_weights_from_data(cx, net, rng.uniform(-1, 1, (60, 2)))
            lam_w, v_w = fiedler(g, spec)
            W = spec.vertex_weights
            worst["residual"] = max(worst["residual"], float(np.max(np.abs(L @ v_w - lam_w * W * v_w))))
            worst["wsum"] = max(worst["wsum"], abs(float(W @ v_w)))
            checked += 1
        ok = (worst["kernel"] == 0 and worst["residual"] < 1e-8 and worst["sum"] < 1e-8 and worst["wsum"] < 1e-8)
        verdict(capsys, 8, ok and checked >= 20,
                f"{checked} dual graphs, kernel mismatches {worst['kernel']}, residual {worst['residual']:.1e}, "
                f"|sum v| {worst['sum']:.1e}, |v'W1| {worst['wsum']:.1e}")

    def test_09_duffing_energy(self, capsys):
        p = DuffingParams()
        traj = duffing_trajectory(p, n_steps=20001, dt=0.001)
        H = p.energy(traj.x, traj.v)
        drift = float(np.max(np.abs(H - H[0])))
        span = traj.times[-1]
        verdict(capsys, 9, H[0] == 0.5 and span == pytest.approx(20.0) and drift < 1e-6,
                f"H(0) = {H[0]}, max |dH| over [0, 20] = {drift:.2e}")


def classification_runs(task):
    rows = []
    for seed in SEEDS:
        cfg = RunConfig.model_validate({"task": task, "seed": seed, "workers": 1})
        t0 = time.perf_counter()
        res = P.classification_experiment(cfg)
        seconds = time.perf_counter() - t0
        out, _ = forward_batch(res.net, res.dataset.x_test)
        acc = float(np.mean(np.argmax(out, axis=1) == res.dataset.y_test))
        u, w = res.unweighted.misclassified_fraction, res.weighted.misclassified_fraction
        ok = acc == 1.0 and w == 0.0 and w <= u and u > 0.0 and seconds <= 600
        rows.append((seed, ok, f"seed {seed}: acc {acc:.3f} unweighted {100 * u:.2f}% / {res.unweighted.l2_error:.2f} "
                               f"weighted {100 * w:.2f}% / {res.weighted.l2_error:.2f} ({seconds:.0f}s)"))
    return rows


@pytest.mark.slow
class TestClassification:
    @pytest.mark.parametrize("n,task", [(10, "circles"), (11, "moons")])
    def test_weighted_fiedler(self, n, task, capsys):
        rows = classification_runs(task)
        passed = sum(ok for _, ok, _ in rows)
        verdict(capsys, n, passed >= 3, f"{task}: {passed}/5 seeds meet all conditions; " + "; ".join(d for *_, d in rows))


@pytest.fixture(scope="module")
def pinn_sweeps(tmp_path_factory):
    out = {}
    for seed in SEEDS:
        cfg = RunConfig.model_validate({"task": "pinn-duffing", "seed": seed, "architecture": PINN_WIDTHS,
                                        "trainer": {"epochs": 10000, "checkpoint_every": 500}, "workers": 1})
        t0 = time.perf_counter()
        traj = P.make_data(cfg)
        net = init_network(cfg.architecture, seed, cfg.trainer.init)
        run_dir = tmp_path_factory.mktemp(f"pinn{seed}")
        _, _, ckpts = train(net, P.train_data(cfg, traj), P.train_config(cfg), run_dir=run_dir,
                            aux=P.duffing_params(cfg))
        cps = []
        for path in ckpts:
            n, meta = load_checkpoint(path)
            cps.append((meta["epoch"], n, meta["loss"]))
        analyses = P.sweep_analyses(cps, P.pinn_box(traj, cfg.box.inflate), n_trials=cfg.homology.n_trials,
                                    base_seed=cfg.homology.base_seed)
        grids = P.sweep_heat_maps(analyses, cfg.homology.bins)
        out[seed] = (analyses, grids, time.perf_counter() - t0, run_dir)
    return out


def within_ten_percent(fv):
    a = np.array([fv.f0, fv.f2, fv.f1 / 2.0])
    return (a.max() - a.min()) / a.max() <= 0.10


@pytest.mark.slow
class TestPinnSweep:
    def test_12_cell_counts(self, pinn_sweeps, capsys):
        dropped, ratio_bad, details = 0, [], []
        for seed, (analyses, _, seconds, _) in pinn_sweeps.items():
            assert [a.epoch for a in analyses] == list(range(0, 10001, 500))
            f_start, f_end = analyses[0].fvector.f0, analyses[-1].fvector.f0
            dropped += int(f_end < f_start)
            large = [a for a in analyses if a.fvector.total >= 1000]
            bad = [(a.epoch, a.fvector.as_tuple()) for a in large if not within_ten_percent(a.fvector)]
            ratio_bad.extend((seed, *b) for b in bad)
            details.append(f"seed {seed}: f0 {f_start}->{f_end}, {len(large)} checkpoints >= 1000 cells, "
                           f"{len(bad)} off ratio, {seconds:.0f}s")
        slow = [s for s, (*_, t, _) in pinn_sweeps.items() if t > 1800]
        ok = dropped >= 3 and not ratio_bad and not slow
        verdict(capsys, 12, ok, f"f0 dropped in {dropped}/5 seeds; ratio violations {ratio_bad[:4]}"
                                f"{' ...' if len(ratio_bad) > 4 else ''}; " + "; ".join(details))

    def test_13_beta0_peak_moves_down(self, pinn_sweeps, capsys):
        rows = []
        for seed, (_, grids, _, _) in pinn_sweeps.items():
            c = grids[0].critical
            rows.append((seed, c[-1] < c[0], f"seed {seed}: {c[0]:.3f} -> {c[-1]:.3f}"))
        bad = [s for s, ok, _ in rows if not ok]
        verdict(capsys, 13, not bad, "normalized beta0 peak, epoch 0 -> final: " + "; ".join(d for *_, d in rows))

    def test_14_loss_spike_correlation(self, pinn_sweeps, capsys):
        details, ok = [], True
        for seed, (_, grids, _, run_dir) in pinn_sweeps.items():
            path = run_dir / "loss_spike_correlation.csv"
            rows = write_correlation_csv(path, grids)
            text = path.read_text().splitlines()
            r = float(rows[1][2])
            sign = rows[1][3]
            ok &= path.exists() and len(text) == 3 and np.isfinite(r) and sign in ("+", "-")
            details.append(f"seed {seed}: beta0 r = {r:+.3f} ({sign}), beta1 r = {float(rows[2][2]):+.3f}")
        verdict(capsys, 14, ok, "; ".join(details))
