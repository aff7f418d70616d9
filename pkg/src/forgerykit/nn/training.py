"""Training loop with early stopping, plus batch scoring of manifest splits."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import codec
from ..dataset import Manifest, SampleRecord, Split
from ..errors import EmptySplitError, MissingFileError
from ..scores import ScoredSample
from ..utils import read_bytes
from .model import (
    ModelConfig,
    TrainedModel,
    bce_loss,
    forward,
    init_parameters,
    loss_and_gradient,
)
from .optim import AdamState, TrainingConfig, adam_step

EpochCallback = Callable[[int, float, float], None]


def load_split_inputs(
    manifest: Manifest,
    root: Path | str,
    preprocess: codec.PreprocessConfig,
    split: Split,
    jobs: int | None = None,
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Preprocess every image of a split into an (N, C, H, W) batch tensor.

    Records are processed in canonical manifest order; parallel workers only
    speed up the work, they never change the result.
    """
    records = manifest.by_split(split)
    if not records:
        raise EmptySplitError(f"manifest has no {split.value} records")
    return _load_records(records, root, preprocess, jobs)


def _load_records(
    records: Sequence[SampleRecord],
    root: Path | str,
    preprocess: codec.PreprocessConfig,
    jobs: int | None,
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    root = Path(root)

    def load_one(record: SampleRecord) -> np.ndarray:
        path = root / record.id
        if not path.is_file():
            raise MissingFileError(f"manifest record {record.id!r} not found under {root}")
        stacked = codec.preprocess_image(read_bytes(path), preprocess)
        return stacked.transpose(2, 0, 1)

    if jobs is not None and jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            inputs = list(pool.map(load_one, records))
    else:
        inputs = [load_one(r) for r in records]
    x = np.stack(inputs)
    y = np.array([int(r.label) for r in records], dtype=np.float64)
    ids = [r.id for r in records]
    return x, y, ids


def _eval_probs(model: TrainedModel, x: np.ndarray, batch_size: int) -> np.ndarray:
    chunks = [
        forward(model, x[i : i + batch_size]) for i in range(0, len(x), batch_size)
    ]
    return np.concatenate(chunks)


def train(
    manifest: Manifest,
    root: Path | str,
    preprocess: codec.PreprocessConfig,
    model_config: ModelConfig,
    training_config: TrainingConfig,
    val_split: Split | None = None,
    on_epoch: EpochCallback | None = None,
    jobs: int | None = None,
) -> TrainedModel:
    """Train with seeded shuffling and early stopping on validation loss.

    The snapshot with the lowest validation loss is returned. When the
    manifest has no val records (replication-style two-way splits), the test
    split doubles as validation, mirroring the protocol being reproduced.
    """
    if val_split is None:
        val_split = Split.VAL if manifest.by_split(Split.VAL) else Split.TEST
    x_train, y_train, _ = load_split_inputs(manifest, root, preprocess, Split.TRAIN, jobs)
    x_val, y_val, _ = load_split_inputs(manifest, root, preprocess, val_split, jobs)

    cfg = training_config
    rng = np.random.default_rng(cfg.seed)
    params = init_parameters(model_config, rng)
    state = AdamState.zeros(params.size)
    model = TrainedModel(model_config, params)

    best_loss = math.inf
    best_params = params.copy()
    stale_epochs = 0
    epochs_run = 0
    step = 0
    n = len(x_train)
    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            dropout_seed = int(rng.integers(0, 2**63))
            loss, grads = loss_and_gradient(
                model, x_train[idx], y_train[idx], dropout_seed
            )
            step += 1
            model.parameters, state = adam_step(model.parameters, grads, state, step, cfg)
            batch_losses.append(loss)
        train_loss = float(np.mean(batch_losses))
        val_loss = bce_loss(_eval_probs(model, x_val, cfg.batch_size), y_val)
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss)
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = model.parameters.copy()
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= cfg.patience:
                break
    return TrainedModel(model_config, best_params, epochs_run, best_loss)


def predict_scores(
    model: TrainedModel,
    manifest: Manifest,
    root: Path | str,
    preprocess: codec.PreprocessConfig,
    split: Split = Split.TEST,
    batch_size: int = 32,
    jobs: int | None = None,
) -> list[ScoredSample]:
    """Eval-mode probabilities for every record of a split, in canonical id order."""
    x, y, ids = load_split_inputs(manifest, root, preprocess, split, jobs)
    probs = _eval_probs(model, x, batch_size)
    return [
        ScoredSample(sample_id, int(label), float(p))
        for sample_id, label, p in zip(ids, y, probs)
    ]
