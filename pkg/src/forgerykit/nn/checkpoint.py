"""Binary model checkpoints with a bit-exact byte layout.

Layout (documented in README.md under "File formats"):

    bytes 0..7    magic b"FGKMODEL"
    bytes 8..11   format version, uint32 little-endian (currently 1)
    bytes 12..15  header length H, uint32 little-endian
    bytes 16..    header, H bytes of UTF-8 JSON (stable key order, reals at
                  17 significant digits): config, parameter layout map,
                  epochs_run, best_val_loss
    then          parameter vector, float64 little-endian, in layout order
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..utils import atomic_write_bytes, dump_json, read_bytes
from .model import ConvSpec, ModelConfig, TrainedModel

MAGIC = b"FGKMODEL"
FORMAT_VERSION = 1


def model_to_bytes(model: TrainedModel) -> bytes:
    config = model.config
    header = {
        "format_version": FORMAT_VERSION,
        "config": {
            "input_channels": config.input_channels,
            "input_size": config.input_size,
            "stem": [[s.out_channels, s.kernel, s.stride] for s in config.stem],
            "hidden_units": config.hidden_units,
            "dropout_rate": config.dropout_rate,
        },
        "layout": [
            {"name": e.name, "shape": list(e.shape), "offset": e.offset}
            for e in config.layout()
        ],
        "param_count": config.param_count(),
        "epochs_run": model.epochs_run,
        "best_val_loss": _encode_loss(model.best_val_loss),
    }
    header_bytes = dump_json(header, indent=0).encode("utf-8")
    return (
        MAGIC
        + struct.pack("<II", FORMAT_VERSION, len(header_bytes))
        + header_bytes
        + model.parameters.astype("<f8").tobytes()
    )


def model_from_bytes(data: bytes) -> TrainedModel:
    if len(data) < 16 or data[:8] != MAGIC:
        raise ParseError("not a forgerykit model checkpoint (bad magic)")
    version, header_len = struct.unpack("<II", data[8:16])
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported checkpoint format version {version}")
    header_end = 16 + header_len
    if len(data) < header_end:
        raise ParseError("truncated checkpoint header")
    try:
        header = json.loads(data[16:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid checkpoint header: {exc}") from exc
    try:
        cfg_obj = header["config"]
        config = ModelConfig(
            input_channels=int(cfg_obj["input_channels"]),
            input_size=int(cfg_obj["input_size"]),
            stem=tuple(ConvSpec(*[int(v) for v in s]) for s in cfg_obj["stem"]),
            hidden_units=int(cfg_obj["hidden_units"]),
            dropout_rate=float(cfg_obj["dropout_rate"]),
        )
        param_count = int(header["param_count"])
        epochs_run = int(header["epochs_run"])
        best_val_loss = _decode_loss(header["best_val_loss"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid checkpoint header: {exc}") from exc
    if param_count != config.param_count():
        raise ParseError(
            f"header param_count {param_count} does not match config "
            f"({config.param_count()})"
        )
    declared = [
        {"name": e.name, "shape": list(e.shape), "offset": e.offset}
        for e in config.layout()
    ]
    if header.get("layout") != declared:
        raise ParseError("checkpoint layout map does not match its config")
    expected = header_end + 8 * param_count
    if len(data) != expected:
        raise ParseError(
            f"checkpoint is {len(data)} bytes, expected {expected} for "
            f"{param_count} parameters"
        )
    params = np.frombuffer(data[header_end:], dtype="<f8").astype(np.float64)
    return TrainedModel(config, params, epochs_run, best_val_loss)


def save_model(model: TrainedModel, path: Path | str) -> None:
    atomic_write_bytes(path, model_to_bytes(model))


def load_model(path: Path | str) -> TrainedModel:
    return model_from_bytes(read_bytes(path))


def _encode_loss(value: float):
    # best_val_loss is +inf on untrained models; JSON cannot carry inf.
    return None if math.isinf(value) else value


def _decode_loss(value) -> float:
    return math.inf if value is None else float(value)
