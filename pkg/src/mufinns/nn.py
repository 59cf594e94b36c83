"""Dense feed-forward networks on flat parameter vectors.

Parameters live in a single float64 vector so that optimizers can treat
every learned component uniformly.  Layer ``l`` contributes a weight
matrix of shape ``(fan_in, fan_out)`` stored row-major, followed by its
bias vector.  Hidden layers apply the configured activation; the output
layer is always affine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

ACTIVATIONS = ("tanh", "identity")


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_layers: Tuple[int, ...] = field(default_factory=tuple)
    output_dim: int = 1
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if any(h < 1 for h in self.hidden_layers):
            raise ValueError(f"hidden layer widths must be positive, got {self.hidden_layers}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_dim, *self.hidden_layers, self.output_dim]

    @property
    def shapes(self) -> List[Tuple[int, int]]:
        sizes = self.layer_sizes
        return list(zip(sizes[:-1], sizes[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.shapes)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_layers": list(self.hidden_layers),
            "output_dim": self.output_dim,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(int(d["input_dim"]), tuple(d["hidden_layers"]), int(d["output_dim"]), d["activation"])


def unflatten(spec: NetworkSpec, params: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Split a flat vector into ``[(W, b), ...]`` views, one pair per layer."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    layers = []
    pos = 0
    for fan_in, fan_out in spec.shapes:
        W = params[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = params[pos:pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    return layers


def flatten(layers: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    return np.concatenate([np.concatenate([np.ravel(W), np.ravel(b)]) for W, b in layers])


def weight_mask(spec: NetworkSpec) -> np.ndarray:
    """Boolean mask over the flat vector that is True for weights, False for biases."""
    mask = np.zeros(spec.n_params, dtype=bool)
    pos = 0
    for fan_in, fan_out in spec.shapes:
        mask[pos:pos + fan_in * fan_out] = True
        pos += fan_in * fan_out + fan_out
    return mask


def init_params(spec: NetworkSpec, seed: int) -> np.ndarray:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in spec.shapes:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def _as_batch(spec: NetworkSpec, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, spec.input_dim) if spec.input_dim == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ValueError(
            f"input batch must have shape (n, {spec.input_dim}), got {np.shape(inputs)}"
        )
    return x


def forward(spec: NetworkSpec, params: np.ndarray, inputs, return_cache: bool = False):
    """Evaluate the network on a batch of shape ``(n, input_dim)``.

    With ``return_cache=True`` also returns the per-layer activations
    needed by :func:`backward`.
    """
    x = _as_batch(spec, inputs)
    layers = unflatten(spec, params)
    acts = [x]
    h = x
    last = len(layers) - 1
    for k, (W, b) in enumerate(layers):
        h = h @ W + b
        if k < last and spec.activation == "tanh":
            h = np.tanh(h)
        acts.append(h)
    if return_cache:
        return h, acts
    return h


def backward(spec: NetworkSpec, params: np.ndarray, cache: List[np.ndarray], grad_out: np.ndarray):
    """Reverse-mode pass.

    Given ``dL/d(outputs)`` for the batch that produced ``cache``, returns
    ``(dL/dparams, dL/dinputs)``.
    """
    layers = unflatten(spec, params)
    delta = np.asarray(grad_out, dtype=np.float64).reshape(cache[-1].shape)
    grads: List[Tuple[np.ndarray, np.ndarray]] = [None] * len(layers)  # type: ignore[list-item]
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        a_in = cache[k]
        grads[k] = (a_in.T @ delta, delta.sum(axis=0))
        delta = delta @ W.T
        if k > 0 and spec.activation == "tanh":
            delta = delta * (1.0 - a_in ** 2)
    return flatten(grads), delta


def gradient(
    spec: NetworkSpec,
    params: np.ndarray,
    inputs,
    loss_closure: Callable[[np.ndarray], Tuple[float, np.ndarray]],
) -> np.ndarray:
    """Gradient of ``loss_closure(forward(inputs))`` with respect to ``params``.

    ``loss_closure`` maps the output batch to ``(loss, dloss/doutputs)``.
    """
    out, cache = forward(spec, params, inputs, return_cache=True)
    _, g_out = loss_closure(out)
    g_params, _ = backward(spec, params, cache, g_out)
    return g_params


def mse_closure(targets) -> Callable[[np.ndarray], Tuple[float, np.ndarray]]:
    """Mean squared error against ``targets`` as a loss closure."""
    y = np.asarray(targets, dtype=np.float64)

    def closure(out):
        r = out - y.reshape(out.shape)
        return float(np.mean(r ** 2)), 2.0 * r / r.size

    return closure
