"""Shared oracles for the test suite."""
import numpy as np

from mufinns.lofi import CoeffSurface, eval_log_quadratic


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def grad_close(g, fd, rel=1e-5, floor=1e-8):
    """Per-component relative agreement with an absolute floor for tiny entries."""
    g, fd = np.asarray(g), np.asarray(fd)
    scale = np.maximum(np.abs(g), np.abs(fd))
    return bool(np.all(np.abs(g - fd) <= np.maximum(rel * scale, floor)))


def hand_forward(layers, x, act=np.tanh):
    """Dense forward pass written with explicit loops over neurons."""
    h = list(map(float, x))
    for k, (W, b) in enumerate(layers):
        out = []
        for j in range(W.shape[1]):
            s = b[j]
            for i in range(W.shape[0]):
                s += h[i] * W[i, j]
            out.append(act(s) if k < len(layers) - 1 else s)
        h = out
    return np.array(h)


def base_surfaces():
    return [CoeffSurface("quad2d", [(0, 0), (1, 0), (2, 0), (0, 1)], np.array(c)) for c in
            ([0.5, 0.4, -0.05, 0.3], [2.0, 0.1, 0.0, -0.2], [0.02, 0.005, 0.0, 0.01])]


def synthetic_records(offsets=(0.0, 0.2, -0.1), noise=0.0, seed=0):
    """Three cases at distinct (T, P) with known additive coefficient offsets."""
    base = base_surfaces()
    conds = [("I", 300.0, 0.1), ("II", 365.0, 0.1), ("III", 365.0, 0.5)]
    rng = np.random.default_rng(seed)
    t = np.geomspace(0.005, 0.05, 20)
    recs = []
    for (cid, T, P), d in zip(conds, offsets):
        for u in (0.3, 0.6, 0.9, 1.2, 1.5):
            for phi in (0.6, 0.7):
                c = np.array([float(s(u, phi)) for s in base]) + d
                y = eval_log_quadratic(c, t) * np.exp(noise * rng.standard_normal(t.size))
                recs.append((cid, u, phi, T, P, t, y))
    return base, recs
