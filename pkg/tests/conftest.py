"""Shared fixtures and oracle helpers for the forgerykit test suite."""

from __future__ import annotations

import struct
import zlib

import numpy as np
import pytest

from forgerykit import codec, nn


def make_png(width: int, height: int, rgb: tuple[int, int, int]) -> bytes:
    """Build a solid-color PNG by hand (no codec library involved)."""

    def chunk(kind: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + kind
            + payload
            + struct.pack(">I", zlib.crc32(kind + payload))
        )

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    row = b"\x00" + bytes(rgb) * width
    idat = zlib.compress(row * height)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", idat)
        + chunk(b"IEND", b"")
    )


def random_image(rng: np.random.Generator, height: int, width: int) -> codec.ImageTensor:
    return codec.ImageTensor(
        rng.integers(0, 256, (height, width, 3)).astype(np.uint8)
    )


def smooth_image(rng: np.random.Generator, size: int) -> codec.ImageTensor:
    """Natural-statistics stand-in: low-frequency field from upsampled noise."""
    small = rng.integers(0, 256, (6, 6, 3)).astype(np.uint8)
    return codec.resize_bilinear(codec.ImageTensor(small), (size, size))


TINY_STEM = (nn.ConvSpec(4, 3, 2), nn.ConvSpec(5, 3, 2))


def tiny_config(input_channels: int = 3, hidden: int = 7, dropout: float = 0.5) -> nn.ModelConfig:
    return nn.ModelConfig(
        input_channels=input_channels,
        input_size=8,
        stem=TINY_STEM,
        hidden_units=hidden,
        dropout_rate=dropout,
    )


def tiny_model(seed: int, **kwargs) -> nn.TrainedModel:
    cfg = tiny_config(**kwargs)
    return nn.TrainedModel(cfg, nn.init_parameters(cfg, seed))


def draw_smooth_case(seed: int, batch: int = 3, margin: float = 1e-3):
    """Random tiny model and batch whose pre-activations keep clear of ReLU kinks.

    Central finite differences assume local smoothness at the probe scale;
    a pre-activation within the margin of zero would let the probe straddle
    the kink, so such draws are rejected and redrawn deterministically.
    """
    attempt = seed
    while True:
        rng = np.random.default_rng(attempt)
        model = tiny_model(attempt)
        x = rng.random((batch, 3, 8, 8))
        y = rng.integers(0, 2, batch).astype(np.float64)
        dropout_seed = int(rng.integers(0, 2**63))
        if _min_preactivation(model, x) > margin:
            return model, x, y, dropout_seed
        attempt += 100_003


def _min_preactivation(model, x) -> float:
    from forgerykit.nn.model import _conv_forward, param_views

    views = param_views(model.config, model.parameters)
    a = x
    worst = np.inf
    for i, spec in enumerate(model.config.stem, start=1):
        z, _ = _conv_forward(a, views[f"conv{i}.weight"], views[f"conv{i}.bias"], spec.stride)
        worst = min(worst, float(np.abs(z).min()))
        a = z * (z > 0)
    pooled = a.mean(axis=(2, 3))
    hidden_lin = pooled @ views["hidden.weight"].T + views["hidden.bias"]
    worst = min(worst, float(np.abs(hidden_lin).min()))
    return worst


def finite_difference_grad(model, x, y, dropout_seed, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of the training loss, coordinate by coordinate."""
    base = model.parameters
    grad = np.empty_like(base)
    for i in range(base.size):
        plus = base.copy()
        plus[i] += h
        minus = base.copy()
        minus[i] -= h
        loss_plus = nn.bce_loss(
            nn.forward(nn.TrainedModel(model.config, plus), x, True, dropout_seed), y
        )
        loss_minus = nn.bce_loss(
            nn.forward(nn.TrainedModel(model.config, minus), x, True, dropout_seed), y
        )
        grad[i] = (loss_plus - loss_minus) / (2.0 * h)
    return grad


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def mann_whitney_auc(scores) -> float:
    """Pairwise AUC oracle: correctly ordered positive/negative pairs, ties half."""
    pos = np.array([s.score for s in scores if s.label == 1])
    neg = np.array([s.score for s in scores if s.label == 0])
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def random_score_set(rng: np.random.Generator, max_size: int = 200):
    """Random scored samples with both classes present and frequent ties."""
    from forgerykit.scores import ScoredSample

    n = int(rng.integers(2, max_size + 1))
    labels = rng.integers(0, 2, n)
    labels[0] = 1
    if n > 1:
        labels[1] = 0
    if rng.random() < 0.5:
        levels = int(rng.integers(2, 12))
        raw = rng.integers(0, levels, n) / (levels - 1)
    else:
        raw = rng.random(n)
    return [
        ScoredSample(f"s{idx:04d}", int(lab), float(score))
        for idx, (lab, score) in enumerate(zip(labels, raw))
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
