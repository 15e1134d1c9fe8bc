"""Continuous surrogate for signature fields: a small from-scratch MLP
regressing signature values from (start point, anchor point, geodesic
distance), trained with Adam on a clamped relative-error loss.

The network input is (x, omega, d_geo) of width 2D + 1; two 128-wide ReLU
hidden layers feed a linear output. Training sees the raw output; inference
clamps it at zero so downstream feature maps stay non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from manifoldrf.errors import DatasetEmptyError, DivergenceError

HIDDEN_WIDTH = 128


@dataclass
class SurrogateDataset:
    """Flattened training triples: rows of [x, omega, geodesic] -> target."""

    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return len(self.targets)


def build_dataset(signatures, points, geodesics, keep_threshold=0.1,
                  retain_prob=0.025, seed=0):
    """Supervision triples from signature vectors.

    Every (start, anchor) pair whose signature value reaches
    ``keep_threshold`` is kept; sub-threshold pairs (including exact zeros)
    are retained independently with probability ``retain_prob`` so the
    network also sees the decayed far field.
    """
    points = np.asarray(points, dtype=np.float64)
    geodesics = np.asarray(geodesics, dtype=np.float64)
    dense = signatures.to_dense()
    n_start, n_nodes = dense.shape
    if geodesics.shape != (n_start, n_nodes):
        raise ValueError("geodesics must be (num_starts, num_nodes)")
    if not (0.0 <= retain_prob <= 1.0):
        raise ValueError("retain_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    keep = dense >= keep_threshold
    keep |= rng.random(dense.shape) < retain_prob
    rows, cols = np.nonzero(keep)
    if len(rows) == 0:
        raise DatasetEmptyError("no training triples survived filtering")
    x = points[signatures.start_nodes[rows]]
    omega = points[cols]
    geo = geodesics[rows, cols][:, None]
    if not np.all(np.isfinite(geo)):
        raise ValueError("geodesic distance missing (infinite) for a kept pair")
    return SurrogateDataset(
        inputs=np.hstack([x, omega, geo]),
        targets=dense[rows, cols],
    )


@dataclass
class SurrogateParams:
    """MLP weights plus the input standardization frozen at training time."""

    weights: list
    biases: list
    input_mean: np.ndarray
    input_scale: np.ndarray

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    def copy(self):
        return SurrogateParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            input_mean=self.input_mean.copy(),
            input_scale=self.input_scale.copy(),
        )

    def save(self, path):
        arrays = {"input_mean": self.input_mean, "input_scale": self.input_scale,
                  "layer_sizes": np.array([w.shape[0] for w in self.weights]
                                          + [self.weights[-1].shape[1]])}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path):
        data = np.load(path)
        n_layers = len(data["layer_sizes"]) - 1
        return cls(
            weights=[data[f"w{i}"] for i in range(n_layers)],
            biases=[data[f"b{i}"] for i in range(n_layers)],
            input_mean=data["input_mean"],
            input_scale=data["input_scale"],
        )


def init_params(in_dim, seed=0):
    """Uniform +-sqrt(6 / (fan_in + fan_out)) initialization, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = [in_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, 1]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return SurrogateParams(
        weights=weights,
        biases=biases,
        input_mean=np.zeros(in_dim),
        input_scale=np.ones(in_dim),
    )


def _forward_passes(params, X):
    Z = (X - params.input_mean) / params.input_scale
    h1_pre = Z @ params.weights[0] + params.biases[0]
    h1 = np.maximum(h1_pre, 0.0)
    h2_pre = h1 @ params.weights[1] + params.biases[1]
    h2 = np.maximum(h2_pre, 0.0)
    out = (h2 @ params.weights[2] + params.biases[2])[:, 0]
    return Z, h1_pre, h1, h2_pre, h2, out


def mlp_forward(params, X, mode="inference"):
    """Evaluate the network; inference mode clamps the output at zero."""
    if mode not in ("inference", "train"):
        raise ValueError("mode must be 'inference' or 'train'")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = _forward_passes(params, X)[-1]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite network output")
    return np.maximum(out, 0.0) if mode == "inference" else out


def clamped_relative_loss(pred, target, eps=0.1):
    """|pred - target| / max(target, eps), elementwise."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    return np.abs(pred - target) / np.maximum(target, eps)


def loss_and_grads(params, X, y, eps=0.1):
    """Mean clamped relative loss on raw outputs and its exact gradients."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    Z, h1_pre, h1, h2_pre, h2, out = _forward_passes(params, X)
    denom = np.maximum(y, eps)
    loss = float(np.mean(np.abs(out - y) / denom))
    d_out = np.sign(out - y) / denom / len(y)

    g_w2 = h2.T @ d_out[:, None]
    g_b2 = np.array([d_out.sum()])
    d_h2 = d_out[:, None] @ params.weights[2].T
    d_h2 *= h2_pre > 0
    g_w1 = h1.T @ d_h2
    g_b1 = d_h2.sum(axis=0)
    d_h1 = d_h2 @ params.weights[1].T
    d_h1 *= h1_pre > 0
    g_w0 = Z.T @ d_h1
    g_b0 = d_h1.sum(axis=0)
    grads = {"w0": g_w0, "b0": g_b0, "w1": g_w1, "b1": g_b1,
             "w2": g_w2, "b2": g_b2}
    return loss, grads


def finite_difference_grads(params, X, y, eps=0.1, step=1e-5):
    """Central-difference gradients of the same loss, for verification."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    tensors = {"w0": params.weights[0], "b0": params.biases[0],
               "w1": params.weights[1], "b1": params.biases[1],
               "w2": params.weights[2], "b2": params.biases[2]}

    def loss_of():
        denom = np.maximum(y, eps)
        out = _forward_passes(params, X)[-1]
        return float(np.mean(np.abs(out - y) / denom))

    grads = {}
    for name, tensor in tensors.items():
        g = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss_of()
            flat[i] = orig - step
            lo = loss_of()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        grads[name] = g
    return grads


@dataclass(frozen=True)
class TrainConfig:
    """Adam optimization settings for the surrogate."""

    learning_rate: float = 1e-3
    batch_size: int = 32768
    epochs: int = 1000
    eps_clamp: float = 0.1
    val_split: float = 0.2
    seed: int = 0
    max_steps: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate, batch_size, epochs must be positive")
        if self.eps_clamp <= 0:
            raise ValueError("eps_clamp must be positive")
        if not 0.0 <= self.val_split < 1.0:
            raise ValueError("val_split must lie in [0, 1)")


def train(dataset, config):
    """Adam (beta1=0.9, beta2=0.999, eps=1e-8) over per-epoch shuffled batches.

    Inputs are standardized per feature on the training split. Returns the
    trained parameters and a history of (epoch, train_loss, val_loss);
    validation loss is computed with inference-mode clamping so it matches
    deployment behavior. ``max_steps`` caps total optimizer steps, for
    fixed-budget runs.
    """
    if len(dataset) == 0:
        raise DatasetEmptyError("empty dataset")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(dataset))
    n_val = int(round(config.val_split * len(dataset)))
    if len(dataset) - n_val < 1:
        raise ValueError("validation split leaves no training samples")
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    X_train = dataset.inputs[train_idx]
    y_train = dataset.targets[train_idx]
    X_val = dataset.inputs[val_idx]
    y_val = dataset.targets[val_idx]

    params = init_params(dataset.inputs.shape[1], seed=config.seed)
    params.input_mean = X_train.mean(axis=0)
    params.input_scale = np.maximum(X_train.std(axis=0), 1e-12)

    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    m_state = {k: np.zeros_like(v) for k, v in _tensor_view(params).items()}
    v_state = {k: np.zeros_like(v) for k, v in _tensor_view(params).items()}
    step = 0
    history = []
    for epoch in range(config.epochs):
        perm = rng.permutation(len(y_train))
        batch_losses = []
        for lo in range(0, len(perm), config.batch_size):
            sel = perm[lo:lo + config.batch_size]
            loss, grads = loss_and_grads(params, X_train[sel], y_train[sel],
                                         eps=config.eps_clamp)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            batch_losses.append(loss)
            step += 1
            tensors = _tensor_view(params)
            for key, g in grads.items():
                m_state[key] = beta1 * m_state[key] + (1 - beta1) * g
                v_state[key] = beta2 * v_state[key] + (1 - beta2) * g * g
                m_hat = m_state[key] / (1 - beta1**step)
                v_hat = v_state[key] / (1 - beta2**step)
                tensors[key] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + adam_eps)
            if config.max_steps is not None and step >= config.max_steps:
                break
        val_loss = None
        if n_val > 0:
            pred = mlp_forward(params, X_val, mode="inference")
            val_loss = float(np.mean(clamped_relative_loss(pred, y_val,
                                                           config.eps_clamp)))
        history.append((epoch, float(np.mean(batch_losses)), val_loss))
        if config.max_steps is not None and step >= config.max_steps:
            break
    return params, history


def _tensor_view(params):
    return {"w0": params.weights[0], "b0": params.biases[0],
            "w1": params.weights[1], "b1": params.biases[1],
            "w2": params.weights[2], "b2": params.biases[2]}


def predict_g_values(params, x_points, anchor_points, geodesics, chunk=200_000):
    """Clamped g-values for every (x, anchor) pair.

    ``geodesics`` is the (num_x, num_anchors) distance matrix; the result
    has the same shape and is non-negative.
    """
    x_points = np.asarray(x_points, dtype=np.float64)
    anchor_points = np.asarray(anchor_points, dtype=np.float64)
    geodesics = np.asarray(geodesics, dtype=np.float64)
    n_x, n_a = len(x_points), len(anchor_points)
    if geodesics.shape != (n_x, n_a):
        raise ValueError("geodesics must be (num_x, num_anchors)")
    if not np.all(np.isfinite(geodesics)):
        raise ValueError("geodesic distance missing for a pair")
    out = np.empty((n_x, n_a))
    rows_per_chunk = max(1, chunk // max(n_a, 1))
    for lo in range(0, n_x, rows_per_chunk):
        hi = min(n_x, lo + rows_per_chunk)
        block = hi - lo
        inputs = np.hstack([
            np.repeat(x_points[lo:hi], n_a, axis=0),
            np.tile(anchor_points, (block, 1)),
            geodesics[lo:hi].reshape(-1, 1),
        ])
        out[lo:hi] = mlp_forward(params, inputs, mode="inference").reshape(block, n_a)
    return out


def predict_feature_matrix(params, x_points, anchor_points, geodesics):
    """Feature matrix Phi with Phi[i, l] = g(x_i, anchor_l, d_il) / sqrt(n_rf).

    Phi @ Phi.T approximates the target kernel; entries are non-negative by
    the inference clamp.
    """
    g_vals = predict_g_values(params, x_points, anchor_points, geodesics)
    return g_vals / np.sqrt(g_vals.shape[1])
