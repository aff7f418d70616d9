"""Run configuration: TOML file values merged with command-line overrides.

Precedence, highest first: explicit flags, the config file, the
FORGERYKIT_SEED environment variable (seed only), built-in defaults.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .codec import InputMode, PreprocessConfig
from .errors import ParseError
from .metrics import Averaging
from .nn import ModelConfig, TrainingConfig
from .utils import read_bytes

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

INPUT_MODES = {
    "rgb": InputMode.RGB_ONLY,
    "fdiff": InputMode.FDIFF_ONLY,
    "hybrid": InputMode.HYBRID,
}

AVERAGING_MODES = {a.value: a for a in Averaging}

_PREPROCESS_KEYS = {"input_mode", "input_size", "jpeg_quality", "chroma_subsampling"}
_TRAINING_KEYS = {
    "learning_rate",
    "max_epochs",
    "patience",
    "batch_size",
    "seed",
}
_MODEL_KEYS = {"hidden_units", "dropout_rate"}
_EVALUATE_KEYS = {"averaging"}


@dataclass
class RunConfig:
    """Validated settings for one pipeline run."""

    preprocess: PreprocessConfig
    model: ModelConfig
    training: TrainingConfig
    averaging: Averaging


def load_config_file(path: Path | str) -> dict:
    """Parse and structurally validate a TOML config file."""
    try:
        doc = tomllib.loads(read_bytes(path).decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"invalid config file {path}: {exc}") from exc
    sections = {
        "preprocess": _PREPROCESS_KEYS,
        "training": _TRAINING_KEYS,
        "model": _MODEL_KEYS,
        "evaluate": _EVALUATE_KEYS,
    }
    for section, keys in doc.items():
        if section not in sections:
            raise ParseError(f"config file {path}: unknown section [{section}]")
        unknown = set(keys) - sections[section]
        if unknown:
            raise ParseError(
                f"config file {path}: unknown keys in [{section}]: {sorted(unknown)}"
            )
    return doc


def env_seed() -> int | None:
    raw = os.environ.get("FORGERYKIT_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"FORGERYKIT_SEED must be an integer, got {raw!r}") from exc


def resolve(flag_value, config_doc: dict, section: str, key: str, default):
    """One setting: flag beats config file beats default."""
    if flag_value is not None:
        return flag_value
    if config_doc and section in config_doc and key in config_doc[section]:
        return config_doc[section][key]
    return default


def build_run_config(args, config_doc: dict) -> RunConfig:
    """Assemble the validated RunConfig for train/score commands."""
    mode_name = resolve(getattr(args, "input_mode", None), config_doc, "preprocess", "input_mode", "hybrid")
    if mode_name not in INPUT_MODES:
        raise ValueError(f"input mode must be one of {sorted(INPUT_MODES)}, got {mode_name!r}")
    mode = INPUT_MODES[mode_name]
    input_size = int(resolve(getattr(args, "input_size", None), config_doc, "preprocess", "input_size", 64))
    preprocess = PreprocessConfig(
        target_size=(input_size, input_size),
        jpeg_quality=int(
            resolve(getattr(args, "jpeg_quality", None), config_doc, "preprocess", "jpeg_quality", 90)
        ),
        input_mode=mode,
        chroma_subsampling=resolve(
            getattr(args, "chroma_subsampling", None),
            config_doc,
            "preprocess",
            "chroma_subsampling",
            "4:2:0",
        ),
    )
    model = ModelConfig(
        input_channels=preprocess.input_channels,
        input_size=input_size,
        hidden_units=int(
            resolve(getattr(args, "hidden_units", None), config_doc, "model", "hidden_units", 512)
        ),
        dropout_rate=float(
            resolve(getattr(args, "dropout_rate", None), config_doc, "model", "dropout_rate", 0.5)
        ),
    )
    seed = resolve(getattr(args, "seed", None), config_doc, "training", "seed", None)
    if seed is None:
        seed = env_seed()
    if seed is None:
        seed = 0
    training = TrainingConfig(
        learning_rate=float(
            resolve(getattr(args, "learning_rate", None), config_doc, "training", "learning_rate", 1e-5)
        ),
        max_epochs=int(
            resolve(getattr(args, "max_epochs", None), config_doc, "training", "max_epochs", 100)
        ),
        patience=int(
            resolve(getattr(args, "patience", None), config_doc, "training", "patience", 10)
        ),
        batch_size=int(
            resolve(getattr(args, "batch_size", None), config_doc, "training", "batch_size", 32)
        ),
        seed=int(seed),
    )
    averaging_name = resolve(
        getattr(args, "averaging", None), config_doc, "evaluate", "averaging", "weighted"
    )
    if averaging_name not in AVERAGING_MODES:
        raise ValueError(
            f"averaging must be one of {sorted(AVERAGING_MODES)}, got {averaging_name!r}"
        )
    return RunConfig(preprocess, model, training, AVERAGING_MODES[averaging_name])


def config_echo(preprocess: PreprocessConfig, averaging: Averaging) -> dict:
    """The settings block reports carry so results are traceable to their config."""
    return {
        "input_mode": preprocess.input_mode.value,
        "target_size": list(preprocess.target_size),
        "jpeg_quality": preprocess.jpeg_quality,
        "chroma_subsampling": preprocess.chroma_subsampling,
        "averaging": averaging.value,
    }
