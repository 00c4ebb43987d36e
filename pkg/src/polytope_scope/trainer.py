"""Full-batch Adam training with hand-written backpropagation.

Three objectives are supported: BCE-with-logits on one-hot targets, plain MSE,
and the physics-informed Duffing loss, whose residual involves the derivative
of the network output with respect to its time input.  That derivative is
propagated as a forward tangent through the same ReLU masks as the values, so
the gradient matches what automatic differentiation produces almost everywhere.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .datagen import DuffingParams, LabeledDataset2D, PinnPairs
from .errors import TrainingDivergedError
from .network import ReluNetwork
from .serialize import atomic_write_text, dumps, save_checkpoint

log = logging.getLogger(__name__)


class LossKind(str, Enum):
    BCE = "bce_with_logits"
    MSE = "mse"
    PINN = "pinn_duffing"


@dataclass
class TrainConfig:
    epochs: int = 4000
    learning_rate: float = 0.01
    loss_kind: LossKind = LossKind.BCE
    checkpoint_every: int = 500
    seed: int = 0
    adam: tuple = (0.9, 0.999, 1e-8)

    def __post_init__(self):
        self.loss_kind = LossKind(self.loss_kind)
        self.adam = tuple(self.adam)
        if self.epochs <= 0:
            raise ValueError("epochs must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 1 <= self.checkpoint_every <= self.epochs:
            raise ValueError("checkpoint_every must lie in [1, epochs]")

    def to_dict(self):
        d = asdict(self)
        d["loss_kind"] = self.loss_kind.value
        d["adam"] = list(self.adam)
        return d


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    test_loss: float
    train_acc: float = float("nan")
    test_acc: float = float("nan")
    data_loss: float = float("nan")
    physics_loss: float = float("nan")


@dataclass
class AdamState:
    m: list  # [[m_weight, m_bias], ...] per layer
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, net: ReluNetwork):
        zeros = lambda: [[np.zeros_like(w), np.zeros_like(b)] for w, b in net.params()]
        return cls(zeros(), zeros())


def adam_step(params, grads, state: AdamState, lr, betas=(0.9, 0.999, 1e-8)):
    """One Adam update; returns the new parameter list and advances ``state``."""
    b1, b2, eps = betas
    state.step += 1
    c1 = 1 - b1**state.step
    c2 = 1 - b2**state.step
    out = []
    for k, (layer_params, layer_grads) in enumerate(zip(params, grads)):
        new = []
        for j, (p, g) in enumerate(zip(layer_params, layer_grads)):
            m = state.m[k][j] = b1 * state.m[k][j] + (1 - b1) * g
            v = state.v[k][j] = b2 * state.v[k][j] + (1 - b2) * g * g
            new.append(p - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        out.append(tuple(new))
    return out


# ---------------------------------------------------------------- losses


def bce_with_logits(logits, targets) -> float:
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise ValueError(f"shape mismatch {z.shape} vs {y.shape}")
    return float(np.mean(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def mse(pred, target) -> float:
    d = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(d * d))


def _sigmoid(z):
    return 0.5 * (1 + np.tanh(0.5 * z))


def one_hot(labels, n_classes=2):
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


# ---------------------------------------------------------------- passes


def _forward(net: ReluNetwork, X, tangent_dir=None):
    """Keep per-layer inputs, masks and (optionally) input tangents for backprop."""
    acts = [X]
    masks = []
    tans = None
    if tangent_dir is not None:
        tans = [np.broadcast_to(np.asarray(tangent_dir, dtype=np.float64), X.shape)]
    a = X
    for layer in net.hidden:
        z = a @ layer.weight.T + layer.bias
        mask = (z > 0).astype(np.float64)
        a = z * mask
        masks.append(mask)
        acts.append(a)
        if tans is not None:
            tans.append((tans[-1] @ layer.weight.T) * mask)
    last = net.layers[-1]
    out = a @ last.weight.T + last.bias
    dout = tans[-1] @ last.weight.T if tans is not None else None
    return out, dout, acts, masks, tans


def _backward(net: ReluNetwork, acts, masks, g_out, tans=None, g_tan=None):
    grads = []
    delta = g_out
    dtan = g_tan
    layers = net.layers
    for i in range(len(layers) - 1, -1, -1):
        gw = delta.T @ acts[i]
        if dtan is not None:
            gw = gw + dtan.T @ tans[i]
        grads.append((gw, delta.sum(axis=0)))
        if i > 0:
            delta = (delta @ layers[i].weight) * masks[i - 1]
            if dtan is not None:
                dtan = (dtan @ layers[i].weight) * masks[i - 1]
    return grads[::-1]


def _pinn_terms(pred, dpred_dt, x_now, target, p: DuffingParams, dt):
    v_hat = (pred - x_now) / dt
    residual = dpred_dt - (-p.delta * v_hat - p.alpha * pred - p.beta * pred**3)
    return pred - target, residual


def pinn_loss(net: ReluNetwork, pairs: PinnPairs, params: DuffingParams = DuffingParams(), dt=None):
    """Return ``(total, data_part, physics_part)`` of the Duffing PINN objective."""
    dt = pairs.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    out, dout, *_ = _forward(net, pairs.inputs, tangent_dir=(1.0, 0.0))
    err, res = _pinn_terms(out[:, 0], dout[:, 0], pairs.inputs[:, 1], pairs.targets, params, dt)
    data = float(np.mean(err**2))
    phys = float(np.mean(res**2))
    return data + phys, data, phys


def loss_and_grad(net: ReluNetwork, batch, loss_kind, aux=None):
    """Loss value and exact parameter gradients.

    ``batch`` is ``(X, Y)`` for BCE/MSE (Y one-hot for BCE) and a ``PinnPairs``
    for the PINN loss, in which case ``aux`` is the ``DuffingParams``.
    """
    kind = LossKind(loss_kind)
    if kind is LossKind.PINN:
        p = aux if aux is not None else DuffingParams()
        pairs = batch
        n = len(pairs)
        out, dout, acts, masks, tans = _forward(net, pairs.inputs, tangent_dir=(1.0, 0.0))
        pred = out[:, 0]
        err, res = _pinn_terms(pred, dout[:, 0], pairs.inputs[:, 1], pairs.targets, p, pairs.dt)
        loss = float(np.mean(err**2) + np.mean(res**2))
        dres_dpred = p.delta / pairs.dt + p.alpha + 3 * p.beta * pred**2
        g_out = (2 * err / n + 2 * res / n * dres_dpred)[:, None]
        g_tan = (2 * res / n)[:, None]
        return loss, _backward(net, acts, masks, g_out, tans, g_tan)

    X, Y = batch
    Y = np.asarray(Y, dtype=np.float64).reshape(len(X), -1)
    out, _, acts, masks, _ = _forward(net, np.asarray(X, dtype=np.float64))
    if kind is LossKind.BCE:
        loss = bce_with_logits(out, Y)
        g_out = (_sigmoid(out) - Y) / out.size
    else:
        d = out - Y
        loss = float(np.mean(d * d))
        g_out = 2 * d / out.size
    return loss, _backward(net, acts, masks, g_out)


def backprop(net, batch, loss_kind, aux=None):
    return loss_and_grad(net, batch, loss_kind, aux)[1]


# ---------------------------------------------------------------- training loop


def _accuracy(net, X, labels):
    if len(X) == 0:
        return float("nan")
    out, *_ = _forward(net, X)
    return float(np.mean(np.argmax(out, axis=1) == labels))


def _evaluate(net, data, kind, aux, loss):
    if kind is LossKind.PINN:
        total, d, p = pinn_loss(net, data, aux)
        return EpochLog(0, total, total, data_loss=d, physics_loss=p)
    ds: LabeledDataset2D = data
    test_loss = float("nan")
    if len(ds.test_idx):
        out, *_ = _forward(net, ds.x_test)
        targets = one_hot(ds.y_test, out.shape[1]) if kind is LossKind.BCE else ds.y_test.reshape(len(out), -1)
        test_loss = bce_with_logits(out, targets) if kind is LossKind.BCE else mse(out, targets)
    return EpochLog(0, loss, test_loss,
                    train_acc=_accuracy(net, ds.x_train, ds.y_train),
                    test_acc=_accuracy(net, ds.x_test, ds.y_test))


def _batch_for(data, kind, n_out):
    if kind is LossKind.PINN:
        return data
    ds: LabeledDataset2D = data
    if kind is LossKind.BCE:
        return ds.x_train, one_hot(ds.y_train, n_out)
    return ds.x_train, ds.y_train.astype(np.float64)


LOG_FIELDS = ["epoch", "train_loss", "test_loss", "train_acc", "test_acc", "data_loss", "physics_loss"]


def write_log_csv(logs, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_FIELDS)
        for e in logs:
            w.writerow([e.epoch] + [repr(float(getattr(e, f))) for f in LOG_FIELDS[1:]])


def read_log_csv(path):
    with open(path, newline="") as fh:
        return [EpochLog(int(r["epoch"]), *(float(r[f]) for f in LOG_FIELDS[1:]))
                for r in csv.DictReader(fh)]


def train(net: ReluNetwork, data, config: TrainConfig, run_dir=None, aux=None):
    """Train ``net`` full-batch and return ``(net, logs, checkpoint_paths)``.

    ``logs[e]`` describes the network after ``e`` updates, so epoch 0 is the
    initialisation.  When ``run_dir`` is given, ``run.json``, ``log.csv`` and
    ``ckpt_{epoch}.json`` files are written there.
    """
    kind = config.loss_kind
    if kind is LossKind.PINN and aux is None:
        aux = DuffingParams()
    batch = _batch_for(data, kind, net.output_dim)
    state = AdamState.zeros_like(net)
    run_dir = Path(run_dir) if run_dir is not None else None
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(run_dir / "run.json", dumps({"train": config.to_dict(), "widths": list(net.widths)}))

    logs, ckpts = [], []
    params = net.params()
    for epoch in range(config.epochs + 1):
        loss, grads = loss_and_grad(net, batch, kind, aux)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss became {loss} at epoch {epoch}")
        entry = _evaluate(net, data, kind, aux, loss)
        entry.epoch = epoch
        logs.append(entry)
        if run_dir is not None and (epoch % config.checkpoint_every == 0 or epoch == config.epochs):
            path = run_dir / f"ckpt_{epoch}.json"
            save_checkpoint(net, path, epoch, config.seed, loss)
            ckpts.append(path)
        if epoch == config.epochs:
            break
        params = adam_step(params, grads, state, config.learning_rate, config.adam)
        net = net.with_params(params)
    if run_dir is not None:
        write_log_csv(logs, run_dir / "log.csv")
    log.info("trained %d epochs, final loss %.3g", config.epochs, logs[-1].train_loss)
    return net, logs, ckpts
