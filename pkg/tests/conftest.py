import numpy as np
import pytest

from polytope_scope.network import from_arrays, init_network
from polytope_scope.polydecomp import BoundingBox2D, decompose

UNIT_BOX = BoundingBox2D(-1.0, 1.0, -1.0, 1.0)


def random_net(widths, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for a, b in zip(widths, widths[1:]):
        ws.append(scale * rng.normal(size=(b, a)))
        bs.append(scale * rng.normal(size=b) * 0.5)
    return from_arrays(ws, bs)


def zero_hidden_net(widths=(2, 3, 1)):
    ws = [np.zeros((b, a)) for a, b in zip(widths, widths[1:])]
    bs = [np.full(b, 0.5) for b in widths[1:]]
    return from_arrays(ws, bs)


def one_neuron_net(w=(1.0, 0.3), b=0.1):
    return from_arrays([np.array([w]), np.array([[1.0]])], [np.array([b]), np.array([0.0])])


@pytest.fixture
def box():
    return UNIT_BOX


@pytest.fixture
def box_complex():
    return decompose(zero_hidden_net(), UNIT_BOX)


@pytest.fixture
def one_neuron_complex():
    return decompose(one_neuron_net(), UNIT_BOX)


@pytest.fixture(scope="session")
def small_complexes():
    out = []
    for seed in range(8):
        net = random_net((2, 5, 4, 1), seed)
        out.append((net, decompose(net, UNIT_BOX)))
    return out


@pytest.fixture(scope="session")
def kaiming_net():
    return init_network((2, 6, 6, 2), seed=3)


def safe_rows(net, X, margin=1e-3):
    """Rows of X whose preactivations all stay at least ``margin`` away from 0."""
    from polytope_scope.network import forward_batch

    _, pres = forward_batch(net, X)
    ok = np.ones(len(X), dtype=bool)
    for p in pres:
        ok &= np.all(np.abs(p) > margin, axis=1)
    return ok


def finite_difference_grads(net, loss_fn, h=1e-5):
    grads = []
    params = [(np.array(w), np.array(b)) for w, b in net.params()]
    for k in range(len(params)):
        layer = []
        for j in range(2):
            g = np.zeros_like(params[k][j])
            for idx in np.ndindex(g.shape):
                vals = []
                for s in (1, -1):
                    p = [(w.copy(), b.copy()) for w, b in params]
                    p[k][j][idx] += s * h
                    vals.append(loss_fn(net.with_params(p)))
                g[idx] = (vals[0] - vals[1]) / (2 * h)
            layer.append(g)
        grads.append(tuple(layer))
    return grads


def max_rel_error(analytic, numeric, floor=1e-6):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            worst = max(worst, float(np.max(np.abs(a - n) / np.maximum(np.abs(n), floor))))
    return worst
