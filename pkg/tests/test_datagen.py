import numpy as np
import pytest

from polytope_scope.datagen import (DuffingParams, duffing_trajectory, gen_two_circles, gen_two_moons, pinn_pairs,
                                    read_dataset_csv, read_trajectory_csv, write_dataset_csv, write_trajectory_csv)


class TestCircles:
    def test_noise_free_radii(self):
        ds = gen_two_circles(n=4, r_inner=1.0, r_outer=2.0, noise_sd=0.0, seed=3)
        r = np.linalg.norm(ds.points, axis=1)
        assert np.allclose(r[ds.labels == 0], 1.0) and np.allclose(r[ds.labels == 1], 2.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_balance_and_split(self, seed):
        ds = gen_two_circles(seed=seed)
        assert np.sum(ds.labels == 0) == np.sum(ds.labels == 1) == 100
        assert len(ds.train_idx) == 160 and len(ds.test_idx) == 40
        assert not set(ds.train_idx) & set(ds.test_idx)
        assert set(ds.train_idx) | set(ds.test_idx) == set(range(200))

    def test_deterministic(self):
        a, b = gen_two_circles(seed=9), gen_two_circles(seed=9)
        assert np.array_equal(a.points, b.points) and np.array_equal(a.train_idx, b.train_idx)

    @pytest.mark.parametrize("radii", [(1.0, 0.5), (0.0, 1.0), (1.0, 1.0)])
    def test_invalid_radii(self, radii):
        with pytest.raises(ValueError):
            gen_two_circles(r_inner=radii[0], r_outer=radii[1])

    def test_odd_n(self):
        with pytest.raises(ValueError):
            gen_two_circles(n=5)


class TestMoons:
    def test_noise_free_on_arcs(self):
        ds = gen_two_moons(n=100, noise_sd=0.0, seed=1)
        up, lo = ds.points[ds.labels == 0], ds.points[ds.labels == 1]
        assert np.allclose(np.linalg.norm(up, axis=1), 1.0) and np.all(up[:, 1] >= 0)
        assert np.allclose(np.linalg.norm(lo - [1.0, 0.5], axis=1), 1.0) and np.all(lo[:, 1] <= 0.5)

    def test_balance(self):
        ds = gen_two_moons(seed=2)
        assert np.bincount(ds.labels).tolist() == [100, 100]


class TestDuffing:
    def test_energy_conserved(self):
        p = DuffingParams()
        traj = duffing_trajectory(p, n_steps=20001, dt=0.001)
        H = p.energy(traj.x, traj.v)
        assert H[0] == 0.5
        assert np.max(np.abs(H - H[0])) < 1e-6

    def test_harmonic_oscillator_is_sine(self):
        traj = duffing_trajectory(DuffingParams(alpha=1.0, beta=0.0), n_steps=2001, dt=0.01)
        assert np.max(np.abs(traj.x - np.sin(traj.times))) < 1e-6

    def test_fourth_order_convergence(self):
        p = DuffingParams()
        ref = duffing_trajectory(p, n_steps=2001, dt=0.001).x[-1]
        e1 = abs(duffing_trajectory(p, n_steps=101, dt=0.02).x[-1] - ref)
        e2 = abs(duffing_trajectory(p, n_steps=201, dt=0.01).x[-1] - ref)
        assert 12 < e1 / e2 < 20

    def test_initial_state(self):
        traj = duffing_trajectory()
        assert traj.x[0] == 0.0 and traj.v[0] == 1.0 and len(traj.times) == 200

    def test_span_limit(self):
        with pytest.raises(ValueError):
            duffing_trajectory(n_steps=300, dt=0.1)

    def test_blow_up_detected(self):
        with pytest.raises(FloatingPointError):
            duffing_trajectory(DuffingParams(alpha=0.0, beta=-1.0), n_steps=201, dt=0.1, v0=50.0)


class TestPinnPairs:
    def test_default_pairs(self):
        pairs = pinn_pairs(duffing_trajectory())
        assert len(pairs) == 199
        assert pairs.inputs[0, 0] == 0.0 and pairs.inputs[-1, 0] == pytest.approx(19.8)
        assert pairs.inputs[-1, 0] + pairs.dt == pytest.approx(19.9)

    def test_length_two(self):
        assert len(pinn_pairs(duffing_trajectory(n_steps=2))) == 1

    def test_constant_trajectory(self):
        traj = duffing_trajectory(DuffingParams(alpha=-1.0, beta=1.0), n_steps=10, dt=0.1, x0=1.0, v0=0.0)
        assert np.allclose(pinn_pairs(traj).targets, 1.0)

    def test_targets_shift(self):
        traj = duffing_trajectory(n_steps=20)
        pairs = pinn_pairs(traj)
        assert np.array_equal(pairs.targets, traj.x[1:]) and np.array_equal(pairs.inputs[:, 1], traj.x[:-1])


class TestCsv:
    def test_dataset_round_trip(self, tmp_path):
        ds = gen_two_moons(seed=4)
        write_dataset_csv(ds, tmp_path / "d" / "ds.csv")
        back = read_dataset_csv(tmp_path / "d" / "ds.csv")
        assert np.array_equal(back.points, ds.points) and np.array_equal(back.labels, ds.labels)
        assert np.array_equal(back.train_idx, ds.train_idx)
        assert (tmp_path / "d" / "ds.csv").read_text().splitlines()[0] == "x1,x2,label,split"

    def test_trajectory_round_trip(self, tmp_path):
        traj = duffing_trajectory(n_steps=50)
        write_trajectory_csv(traj, tmp_path / "t.csv")
        back = read_trajectory_csv(tmp_path / "t.csv")
        assert np.array_equal(back.x, traj.x) and np.array_equal(back.v, traj.v) and back.dt == traj.dt
