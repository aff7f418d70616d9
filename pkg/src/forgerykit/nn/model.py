"""Desk-scale convolutional binary classifier with hand-written backpropagation.

A small strided-conv stem feeds the classification head: global average
pooling, a 512-unit ReLU layer, dropout at rate 0.5, and a single sigmoid
output. Parameters live in one flat float64 vector with a documented layout
so checkpoints and the Adam optimizer can treat the model as a plain vector.

Everything runs in float64 numpy: forward and backward are exact enough for
central finite differences to verify every gradient coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import LengthMismatchError, ShapeMismatchError

# Probabilities are clamped to [ε, 1-ε] inside the loss so ln(0) never occurs;
# golden loss values depend on this exact constant.
BCE_EPSILON = 1e-7

# Raw sigmoid outputs are kept strictly inside (0, 1). The guard only acts
# beyond |logit| ~ 34 where the loss clamp has long since zeroed gradients.
_PROB_FLOOR = 1e-15


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel: int = 3
    stride: int = 2


DEFAULT_STEM = (ConvSpec(16, 3, 2), ConvSpec(32, 3, 2), ConvSpec(64, 3, 2))


@dataclass(frozen=True)
class LayerParam:
    name: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


@dataclass(frozen=True)
class ModelConfig:
    """Architecture description. Defaults give the full desk-scale classifier;

    tests shrink the stem and hidden width to keep finite-difference checks
    tractable.
    """

    input_channels: int = 6
    input_size: int = 64
    stem: tuple[ConvSpec, ...] = DEFAULT_STEM
    hidden_units: int = 512
    dropout_rate: float = 0.5

    def __post_init__(self):
        if self.input_channels not in (3, 6):
            raise ValueError(f"input_channels must be 3 or 6, got {self.input_channels}")
        if self.input_size < 1:
            raise ValueError("input_size must be positive")
        if not self.stem:
            raise ValueError("stem must contain at least one conv block")
        for spec in self.stem:
            if spec.out_channels < 1 or spec.kernel < 1 or spec.stride < 1:
                raise ValueError(f"invalid conv spec {spec}")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    def feature_sizes(self) -> list[int]:
        """Spatial size after each conv block (same padding kernel//2)."""
        sizes = []
        size = self.input_size
        for spec in self.stem:
            pad = spec.kernel // 2
            size = (size + 2 * pad - spec.kernel) // spec.stride + 1
            sizes.append(size)
        return sizes

    def layout(self) -> tuple[LayerParam, ...]:
        """Flat parameter layout: conv blocks in order, then hidden, then output."""
        entries = []
        offset = 0

        def add(name: str, shape: tuple[int, ...]):
            nonlocal offset
            entries.append(LayerParam(name, shape, offset))
            offset += int(np.prod(shape))

        in_ch = self.input_channels
        for i, spec in enumerate(self.stem, start=1):
            add(f"conv{i}.weight", (spec.out_channels, in_ch, spec.kernel, spec.kernel))
            add(f"conv{i}.bias", (spec.out_channels,))
            in_ch = spec.out_channels
        add("hidden.weight", (self.hidden_units, in_ch))
        add("hidden.bias", (self.hidden_units,))
        add("output.weight", (1, self.hidden_units))
        add("output.bias", (1,))
        return tuple(entries)

    def param_count(self) -> int:
        last = self.layout()[-1]
        return last.offset + last.size


@dataclass
class TrainedModel:
    """A configuration plus its flat parameter vector."""

    config: ModelConfig
    parameters: np.ndarray
    epochs_run: int = 0
    best_val_loss: float = math.inf

    def __post_init__(self):
        expected = self.config.param_count()
        if self.parameters.shape != (expected,):
            raise ValueError(
                f"parameter vector has shape {self.parameters.shape}, expected ({expected},)"
            )


def init_parameters(config: ModelConfig, seed: int | np.random.Generator) -> np.ndarray:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases, fixed draw order."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = np.zeros(config.param_count(), dtype=np.float64)
    for entry in config.layout():
        if entry.name.endswith(".bias"):
            continue
        fan_in = int(np.prod(entry.shape[1:]))
        limit = math.sqrt(6.0 / fan_in)
        params[entry.offset : entry.offset + entry.size] = rng.uniform(
            -limit, limit, entry.size
        )
    return params


def param_views(config: ModelConfig, params: np.ndarray) -> dict[str, np.ndarray]:
    """Reshaped views into the flat vector, keyed by layout name."""
    views = {}
    for entry in config.layout():
        views[entry.name] = params[entry.offset : entry.offset + entry.size].reshape(
            entry.shape
        )
    return views


# -- layer primitives ---------------------------------------------------------


def _im2col(padded: np.ndarray, kernel: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    n, c, _, _ = padded.shape
    cols = np.empty((n, c, kernel, kernel, out_h, out_w), dtype=padded.dtype)
    for i in range(kernel):
        for j in range(kernel):
            cols[:, :, i, j] = padded[
                :, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride
            ]
    return cols.reshape(n, c * kernel * kernel, out_h * out_w)


def _col2im(
    dcols: np.ndarray,
    padded_shape: tuple[int, ...],
    kernel: int,
    stride: int,
    out_h: int,
    out_w: int,
) -> np.ndarray:
    n, c = padded_shape[0], padded_shape[1]
    dpadded = np.zeros(padded_shape, dtype=dcols.dtype)
    d6 = dcols.reshape(n, c, kernel, kernel, out_h, out_w)
    for i in range(kernel):
        for j in range(kernel):
            dpadded[
                :, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride
            ] += d6[:, :, i, j]
    return dpadded


def _conv_forward(x, weight, bias, stride):
    n, _, h, w = x.shape
    out_ch, in_ch, kernel, _ = weight.shape
    pad = kernel // 2
    out_h = (h + 2 * pad - kernel) // stride + 1
    out_w = (w + 2 * pad - kernel) // stride + 1
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = _im2col(padded, kernel, stride, out_h, out_w)
    w_mat = weight.reshape(out_ch, in_ch * kernel * kernel)
    out = np.matmul(w_mat, cols) + bias[:, None]
    cache = (cols, w_mat, padded.shape, kernel, stride, out_h, out_w, pad)
    return out.reshape(n, out_ch, out_h, out_w), cache


def _conv_backward(dout, cache):
    cols, w_mat, padded_shape, kernel, stride, out_h, out_w, pad = cache
    n, out_ch = dout.shape[0], dout.shape[1]
    dmat = dout.reshape(n, out_ch, out_h * out_w)
    dweight = np.einsum("nfl,ncl->fc", dmat, cols).reshape(
        out_ch, -1, kernel, kernel
    )
    dbias = dmat.sum(axis=(0, 2))
    dcols = np.matmul(w_mat.T, dmat)
    dpadded = _col2im(dcols, padded_shape, kernel, stride, out_h, out_w)
    if pad:
        dx = dpadded[:, :, pad:-pad, pad:-pad]
    else:
        dx = dpadded
    return dx, dweight, dbias


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1.0 + ez)
    return np.clip(out, _PROB_FLOOR, 1.0 - _PROB_FLOOR)


def _dropout_mask(shape, rate: float, rng_seed: int) -> np.ndarray:
    keep = 1.0 - rate
    rng = np.random.default_rng(rng_seed)
    return (rng.random(shape) < keep).astype(np.float64) / keep


# -- full network -------------------------------------------------------------


def _check_batch(config: ModelConfig, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    expected = (config.input_channels, config.input_size, config.input_size)
    if batch.ndim != 4 or batch.shape[1:] != expected:
        raise ShapeMismatchError(
            f"batch shape {batch.shape} does not match (N, {expected[0]}, "
            f"{expected[1]}, {expected[2]})"
        )
    return batch


def _forward_pass(config, params, batch, train_mode, rng_seed):
    views = param_views(config, params)
    caches = []
    activation = batch
    for i in range(1, len(config.stem) + 1):
        z, conv_cache = _conv_forward(
            activation, views[f"conv{i}.weight"], views[f"conv{i}.bias"],
            config.stem[i - 1].stride,
        )
        mask = z > 0
        activation = z * mask
        caches.append((conv_cache, mask))
    n, out_ch, fh, fw = activation.shape
    pooled = activation.mean(axis=(2, 3))
    hidden_lin = pooled @ views["hidden.weight"].T + views["hidden.bias"]
    hidden_mask = hidden_lin > 0
    hidden = hidden_lin * hidden_mask
    if train_mode and config.dropout_rate > 0.0:
        drop = _dropout_mask(hidden.shape, config.dropout_rate, rng_seed)
        dropped = hidden * drop
    else:
        drop = None
        dropped = hidden
    logits = (dropped @ views["output.weight"].T + views["output.bias"])[:, 0]
    cache = {
        "views": views,
        "conv": caches,
        "pooled": pooled,
        "feature_hw": (fh, fw),
        "feature_ch": out_ch,
        "hidden_mask": hidden_mask,
        "drop": drop,
        "dropped": dropped,
        "batch_size": n,
    }
    return logits, cache


def forward_logits(
    model: TrainedModel,
    batch: np.ndarray,
    train_mode: bool = False,
    rng_seed: int | None = None,
) -> np.ndarray:
    """Pre-sigmoid outputs, one per sample."""
    batch = _check_batch(model.config, batch)
    if train_mode and rng_seed is None:
        raise ValueError("train-mode forward requires rng_seed for the dropout mask")
    logits, _ = _forward_pass(model.config, model.parameters, batch, train_mode, rng_seed)
    return logits


def forward(
    model: TrainedModel,
    batch: np.ndarray,
    train_mode: bool = False,
    rng_seed: int | None = None,
) -> np.ndarray:
    """Predicted probabilities in (0, 1), one per sample.

    Eval mode applies no dropout and no rescaling (inverted dropout scales at
    train time only), so eval outputs are deterministic functions of the batch.
    """
    return _sigmoid(forward_logits(model, batch, train_mode, rng_seed))


def bce_loss(probs, labels) -> float:
    """Mean binary cross-entropy with probabilities clamped to [ε, 1-ε]."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.shape != labels.shape:
        raise LengthMismatchError(
            f"probs and labels differ in length: {probs.shape} vs {labels.shape}"
        )
    clamped = np.clip(probs, BCE_EPSILON, 1.0 - BCE_EPSILON)
    return float(
        -np.mean(labels * np.log(clamped) + (1.0 - labels) * np.log(1.0 - clamped))
    )


def loss_and_gradient(
    model: TrainedModel, batch: np.ndarray, labels, rng_seed: int
) -> tuple[float, np.ndarray]:
    """BCE loss and its exact gradient for one train-mode batch.

    The dropout mask is fixed by rng_seed, so the same seed reproduces both
    the loss and every gradient coordinate bit for bit.
    """
    config = model.config
    batch = _check_batch(config, batch)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (batch.shape[0],):
        raise ShapeMismatchError(
            f"labels shape {labels.shape} does not match batch of {batch.shape[0]}"
        )
    if rng_seed is None:
        raise ValueError("loss_and_gradient requires rng_seed (train-mode dropout)")
    logits, cache = _forward_pass(config, model.parameters, batch, True, rng_seed)
    probs = _sigmoid(logits)
    clamped = np.clip(probs, BCE_EPSILON, 1.0 - BCE_EPSILON)
    loss = float(
        -np.mean(labels * np.log(clamped) + (1.0 - labels) * np.log(1.0 - clamped))
    )

    n = cache["batch_size"]
    views = cache["views"]
    grads = np.zeros_like(model.parameters)
    gviews = param_views(config, grads)

    # d(loss)/d(logit): (p - y)/n inside the clamp window, 0 where the loss
    # clamp is active (the composition is exactly flat there).
    active = (probs > BCE_EPSILON) & (probs < 1.0 - BCE_EPSILON)
    dlogits = np.where(active, probs - labels, 0.0) / n

    dropped = cache["dropped"]
    gviews["output.weight"][:] = dlogits[None, :] @ dropped
    gviews["output.bias"][:] = dlogits.sum()
    dhidden = dlogits[:, None] * views["output.weight"][0][None, :]
    if cache["drop"] is not None:
        dhidden = dhidden * cache["drop"]
    dhidden_lin = dhidden * cache["hidden_mask"]
    gviews["hidden.weight"][:] = dhidden_lin.T @ cache["pooled"]
    gviews["hidden.bias"][:] = dhidden_lin.sum(axis=0)
    dpooled = dhidden_lin @ views["hidden.weight"]

    fh, fw = cache["feature_hw"]
    dact = np.broadcast_to(
        dpooled[:, :, None, None] / (fh * fw),
        (n, cache["feature_ch"], fh, fw),
    )
    for i in range(len(config.stem), 0, -1):
        conv_cache, mask = cache["conv"][i - 1]
        dz = dact * mask
        dact, dweight, dbias = _conv_backward(dz, conv_cache)
        gviews[f"conv{i}.weight"][:] = dweight
        gviews[f"conv{i}.bias"][:] = dbias
    return loss, grads


def backward(model: TrainedModel, batch: np.ndarray, labels, rng_seed: int) -> np.ndarray:
    """Gradient of bce_loss(forward(batch)) w.r.t. every parameter."""
    _, grads = loss_and_gradient(model, batch, labels, rng_seed)
    return grads
