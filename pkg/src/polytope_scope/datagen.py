"""Synthetic datasets: two circles, two moons and a Duffing oscillator trajectory."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class LabeledDataset2D:
    points: np.ndarray  # (N, 2)
    labels: np.ndarray  # (N,) in {0, 1}
    train_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.labels):
            raise ValueError("points and labels differ in length")
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise ValueError("train and test indices overlap")

    @property
    def x_train(self):
        return self.points[self.train_idx]

    @property
    def y_train(self):
        return self.labels[self.train_idx]

    @property
    def x_test(self):
        return self.points[self.test_idx]

    @property
    def y_test(self):
        return self.labels[self.test_idx]


@dataclass(frozen=True)
class DuffingParams:
    delta: float = 0.0
    alpha: float = -1.0
    beta: float = 1.0
    gamma: float = 0.0
    omega: float = 1.2

    def energy(self, x, v):
        """First integral of the undamped, unforced system."""
        return 0.5 * v**2 + 0.5 * self.alpha * x**2 + 0.25 * self.beta * x**4


@dataclass(frozen=True)
class DuffingTrajectory:
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    dt: float


@dataclass(frozen=True)
class PinnPairs:
    inputs: np.ndarray  # (N, 2) rows of [t, x(t)]
    targets: np.ndarray  # (N,) x(t + dt)
    dt: float

    def __len__(self):
        return len(self.targets)


def split_indices(n: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    n_train = int(round(TRAIN_FRACTION * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _check_even(n):
    if n <= 0 or n % 2:
        raise ValueError(f"n must be a positive even number, got {n}")


def gen_two_circles(n=200, r_inner=0.5, r_outer=1.0, noise_sd=0.05, seed=0) -> LabeledDataset2D:
    """Two concentric rings; label 0 is the inner ring."""
    _check_even(n)
    if not 0 < r_inner < r_outer:
        raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    rng = np.random.default_rng(seed)
    half = n // 2
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    radius = np.repeat([r_inner, r_outer], half) + noise_sd * rng.standard_normal(n)
    points = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    labels = np.repeat([0, 1], half)
    train, test = split_indices(n, rng)
    return LabeledDataset2D(points, labels, train, test)


def gen_two_moons(n=200, noise_sd=0.05, seed=0) -> LabeledDataset2D:
    """Interleaved half circles; label 0 is the upper arc centred at the origin."""
    _check_even(n)
    rng = np.random.default_rng(seed)
    half = n // 2
    theta = rng.uniform(0.0, np.pi, size=n)
    upper = np.column_stack([np.cos(theta[:half]), np.sin(theta[:half])])
    lower = np.column_stack([1.0 - np.cos(theta[half:]), 0.5 - np.sin(theta[half:])])
    points = np.vstack([upper, lower]) + noise_sd * rng.standard_normal((n, 2))
    labels = np.repeat([0, 1], half)
    train, test = split_indices(n, rng)
    return LabeledDataset2D(points, labels, train, test)


def _duffing_rhs(p: DuffingParams, t, x, v):
    return v, -p.delta * v - p.alpha * x - p.beta * x**3 + p.gamma * np.cos(p.omega * t)


def _rk4_step(p, t, x, v, dt):
    x, v = np.float64(x), np.float64(v)
    k1x, k1v = _duffing_rhs(p, t, x, v)
    k2x, k2v = _duffing_rhs(p, t + dt / 2, x + dt / 2 * k1x, v + dt / 2 * k1v)
    k3x, k3v = _duffing_rhs(p, t + dt / 2, x + dt / 2 * k2x, v + dt / 2 * k2v)
    k4x, k4v = _duffing_rhs(p, t + dt, x + dt * k3x, v + dt * k3v)
    return x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x), v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)


def duffing_trajectory(params=DuffingParams(), n_steps=200, dt=0.1, x0=0.0, v0=1.0) -> DuffingTrajectory:
    """Classic RK4 on the first-order Duffing system; ``n_steps`` samples spaced ``dt`` apart."""
    if n_steps < 1 or dt <= 0:
        raise ValueError("need n_steps >= 1 and dt > 0")
    if (n_steps - 1) * dt > 20.0 + 1e-9:
        raise ValueError(f"trajectory spans {(n_steps - 1) * dt}, beyond t = 20")
    times = dt * np.arange(n_steps)
    xs = np.empty(n_steps)
    vs = np.empty(n_steps)
    x, v = float(x0), float(v0)
    for i in range(n_steps):
        xs[i], vs[i] = x, v
        if i == n_steps - 1:
            break
        t = times[i]
        with np.errstate(over="ignore", invalid="ignore"):
            x, v = _rk4_step(params, t, x, v, dt)
        if not (np.isfinite(x) and np.isfinite(v)):
            raise FloatingPointError(f"Duffing state became non-finite at t = {t + dt}")
    return DuffingTrajectory(times, xs, vs, float(dt))


def pinn_pairs(traj: DuffingTrajectory) -> PinnPairs:
    if len(traj.times) < 2:
        raise ValueError("need at least two samples to form a pair")
    inputs = np.column_stack([traj.times[:-1], traj.x[:-1]])
    return PinnPairs(inputs, traj.x[1:].copy(), traj.dt)


def write_dataset_csv(ds: LabeledDataset2D, path):
    split = np.full(len(ds.labels), "test", dtype=object)
    split[ds.train_idx] = "train"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "label", "split"])
        for (a, b), y, s in zip(ds.points, ds.labels, split):
            w.writerow([repr(float(a)), repr(float(b)), int(y), s])


def read_dataset_csv(path) -> LabeledDataset2D:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    points = np.array([[float(r["x1"]), float(r["x2"])] for r in rows]).reshape(-1, 2)
    labels = np.array([int(r["label"]) for r in rows], dtype=int)
    is_train = np.array([r["split"] == "train" for r in rows], dtype=bool)
    return LabeledDataset2D(points, labels, np.flatnonzero(is_train), np.flatnonzero(~is_train))


def write_trajectory_csv(traj: DuffingTrajectory, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "v"])
        for row in zip(traj.times, traj.x, traj.v):
            w.writerow([repr(float(c)) for c in row])


def read_trajectory_csv(path) -> DuffingTrajectory:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    times = data[:, 0]
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return DuffingTrajectory(times, data[:, 1], data[:, 2], dt)
