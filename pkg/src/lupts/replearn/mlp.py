"""Small fully-connected network with analytic backpropagation.

Hidden layers use leaky-ReLU (slope 0.01); the output layer is linear.
Weights are initialized uniform in +-sqrt(6 / (fan_in + fan_out)), biases at
zero. Forward and backward passes are plain float64 numpy, deterministic
given the realized weights.
"""

from __future__ import annotations

import numpy as np

from ..seeding import stream_rng

LEAKY_SLOPE = 0.01


def leaky_relu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def leaky_relu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE)


class Mlp:
    """Feed-forward network defined by its layer widths.

    widths = [input, hidden..., output]; at least one layer is required.
    """

    def __init__(self, widths: list[int], seed: int = 0):
        if len(widths) < 2:
            raise ValueError("widths must contain input and output dimensions")
        if any(w < 1 for w in widths):
            raise ValueError("all layer widths must be >= 1")
        self.widths = list(widths)
        rng = stream_rng(seed, "mlp-init")
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x: np.ndarray):
        """Forward pass returning the output and the per-layer cache
        (layer inputs and pre-activations) needed by backward()."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(
                f"expected inputs of width {self.input_dim}, got shape {x.shape}"
            )
        inputs, preacts = [], []
        h = x
        last = self.n_layers - 1
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            pre = h @ w + b
            preacts.append(pre)
            h = pre if layer == last else leaky_relu(pre)
        return h, (inputs, preacts)

    def backward(self, cache, grad_output: np.ndarray):
        """Gradients of a scalar loss w.r.t. all weights and biases, given the
        loss gradient w.r.t. the network output."""
        inputs, preacts = cache
        grad_w = [np.empty(0)] * self.n_layers
        grad_b = [np.empty(0)] * self.n_layers
        g = np.asarray(grad_output, dtype=np.float64)
        last = self.n_layers - 1
        for layer in range(last, -1, -1):
            if layer != last:
                g = g * leaky_relu_grad(preacts[layer])
            grad_w[layer] = inputs[layer].T @ g
            grad_b[layer] = g.sum(axis=0)
            if layer > 0:
                g = g @ self.weights[layer].T
        return grad_w, grad_b

    def parameters(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)

    def set_parameters(self, params: list[np.ndarray]) -> None:
        n = self.n_layers
        if len(params) != 2 * n:
            raise ValueError(f"expected {2 * n} arrays, got {len(params)}")
        for i in range(n):
            self.weights[i][...] = params[i]
            self.biases[i][...] = params[n + i]

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]
