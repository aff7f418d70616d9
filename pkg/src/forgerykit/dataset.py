"""Dataset ingestion, deterministic stratified splitting, and synthetic data generation.

Directory layout follows the common authentic/tampered two-folder convention.
Manifests are serialized as JSON Lines in lexicographic id order so that the
same tree always produces byte-identical files.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import codec
from .errors import (
    DegenerateClassError,
    EmptyClassError,
    IoFailureError,
    MissingDirectoryError,
    ParseError,
)
from .utils import atomic_write_text, dump_json, read_text

_IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png"}


class Label(enum.IntEnum):
    AUTHENTIC = 0
    TAMPERED = 1


class Split(enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"
    UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class SampleRecord:
    """One labeled image; the id is its path relative to the dataset root."""

    id: str
    label: Label
    split: Split = Split.UNASSIGNED


@dataclass(frozen=True)
class DatasetLayout:
    authentic_dir: str = "authentic"
    tampered_dir: str = "tampered"


@dataclass
class Manifest:
    """An ordered collection of sample records, always sorted by id."""

    records: list[SampleRecord] = field(default_factory=list)
    seed: int | None = None
    split_ratio: float | None = None

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if ids != sorted(ids):
            raise ValueError("manifest records must be sorted by id")
        if len(set(ids)) != len(ids):
            raise ValueError("manifest ids must be unique")

    def by_split(self, split: Split) -> list[SampleRecord]:
        return [r for r in self.records if r.split is split]

    def by_label(self, label: Label) -> list[SampleRecord]:
        return [r for r in self.records if r.label is label]

    def class_counts(self) -> dict[Label, int]:
        counts = {Label.AUTHENTIC: 0, Label.TAMPERED: 0}
        for r in self.records:
            counts[r.label] += 1
        return counts

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"id": r.id, "label": int(r.label), "split": r.split.value},
                ensure_ascii=False,
                separators=(",", ":"),
            )
            for r in self.records
        ]
        return "\n".join(lines) + "\n" if lines else ""

    @classmethod
    def from_jsonl(cls, text: str) -> "Manifest":
        records = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    SampleRecord(obj["id"], Label(obj["label"]), Split(obj["split"]))
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"manifest line {lineno}: {exc}") from exc
        try:
            return cls(records)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc

    def save(self, path: Path | str) -> None:
        atomic_write_text(path, self.to_jsonl())

    @classmethod
    def load(cls, path: Path | str) -> "Manifest":
        return cls.from_jsonl(read_text(path))


def scan_dataset(root: Path | str, layout: DatasetLayout = DatasetLayout()) -> Manifest:
    """Build a manifest from an authentic/tampered directory pair.

    Discovery is non-recursive and keyed on extension (.jpg/.jpeg/.png,
    case-insensitive); ids are forward-slash paths relative to root.
    """
    root = Path(root)
    pairs = (
        (layout.authentic_dir, Label.AUTHENTIC),
        (layout.tampered_dir, Label.TAMPERED),
    )
    for dirname, _ in pairs:
        if not (root / dirname).is_dir():
            raise MissingDirectoryError(f"missing class directory: {root / dirname}")
    records = []
    for dirname, label in pairs:
        class_dir = root / dirname
        files = [
            p
            for p in class_dir.iterdir()
            if p.is_file() and p.suffix.lower() in _IMAGE_EXTENSIONS
        ]
        if not files:
            raise EmptyClassError(f"no images in class directory: {class_dir}")
        records.extend(SampleRecord(f"{dirname}/{p.name}", label) for p in files)
    records.sort(key=lambda r: r.id)
    return Manifest(records)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def stratified_split(manifest: Manifest, ratio: float, seed: int) -> Manifest:
    """Assign Train/Test per class with a seeded shuffle, preserving class balance.

    Within each class the first round(ratio * class_count) shuffled records go
    to Train and the rest to Test. Record order stays canonical.
    """
    return stratified_split_three(manifest, ratio, 0.0, seed)


def stratified_split_three(
    manifest: Manifest, train_ratio: float, val_ratio: float, seed: int
) -> Manifest:
    """Three-way stratified split; val_ratio 0 degenerates to a two-way split.

    Per-class train and val counts are rounded half-up; the remainder is the
    test set. The same seed always yields the same assignment.
    """
    if not 0.0 < train_ratio < 1.0:
        raise ValueError(f"train ratio must lie in (0, 1), got {train_ratio}")
    if val_ratio < 0.0 or train_ratio + val_ratio >= 1.0:
        raise ValueError(
            f"ratios must satisfy 0 <= val and train + val < 1, got {train_ratio}, {val_ratio}"
        )
    rng = np.random.default_rng(seed)
    assignment: dict[str, Split] = {}
    for label in (Label.AUTHENTIC, Label.TAMPERED):
        members = manifest.by_label(label)
        n = len(members)
        if n < 2:
            raise DegenerateClassError(f"class {label.name} has {n} records; need >= 2")
        order = rng.permutation(n)
        n_train = _round_half_up(train_ratio * n)
        n_val = _round_half_up(val_ratio * n) if val_ratio > 0.0 else 0
        n_test = n - n_train - n_val
        if n_train <= 0 or n_test <= 0 or (val_ratio > 0.0 and n_val <= 0):
            raise DegenerateClassError(
                f"class {label.name}: split {n_train}/{n_val}/{n_test} of {n} leaves an empty subset"
            )
        for rank, idx in enumerate(order):
            if rank < n_train:
                split = Split.TRAIN
            elif rank < n_train + n_val:
                split = Split.VAL
            else:
                split = Split.TEST
            assignment[members[idx].id] = split
    records = [replace(r, split=assignment[r.id]) for r in manifest.records]
    return Manifest(records, seed=seed, split_ratio=train_ratio)


def generate_synthetic_dataset(
    n_authentic: int,
    n_tampered: int,
    size: int,
    seed: int,
    out_dir: Path | str,
    base_quality: int = 90,
    patch_quality: int = 35,
    patch_noise: float = 28.0,
) -> Manifest:
    """Write a splice-style synthetic dataset and return its manifest.

    Authentic images are smooth random gradients JPEG-compressed once at
    base_quality and saved as PNG, so recompression at a similar quality is
    nearly idempotent. Tampered images paste a noise-textured rectangle that
    was compressed at patch_quality, usually landing off the host 8x8 block
    grid; the patch region therefore responds much more strongly to
    recompression, which is exactly what the compression residual exposes.

    A synth_meta.json sidecar in out_dir records the patch rectangle per
    tampered file as [x, y, width, height]. Everything is deterministic in
    the seed, down to the file bytes.
    """
    if n_authentic < 1 or n_tampered < 1:
        raise ValueError("need at least one image per class")
    if size < 16:
        raise ValueError(f"size must be >= 16, got {size}")
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    auth_dir = out_dir / "authentic"
    tamp_dir = out_dir / "tampered"
    try:
        auth_dir.mkdir(parents=True, exist_ok=True)
        tamp_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailureError(f"cannot create {out_dir}: {exc}") from exc

    records = []
    for i in range(n_authentic):
        img = codec.jpeg_roundtrip(_smooth_gradient(rng, size), base_quality)
        name = f"auth_{i:04d}.png"
        _write_png(auth_dir / name, img)
        records.append(SampleRecord(f"authentic/{name}", Label.AUTHENTIC))

    patches: dict[str, list[int]] = {}
    for i in range(n_tampered):
        base = codec.jpeg_roundtrip(_smooth_gradient(rng, size), base_quality)
        source = _smooth_gradient(rng, size).pixels.astype(np.float64)
        source += rng.normal(0.0, patch_noise, source.shape)
        source_img = codec.jpeg_roundtrip(
            codec.ImageTensor(np.clip(source, 0.0, 255.0).astype(np.uint8)),
            patch_quality,
        )
        pw = int(rng.integers(size // 3, size // 2 + 1))
        ph = int(rng.integers(size // 3, size // 2 + 1))
        dx = int(rng.integers(0, size - pw + 1))
        dy = int(rng.integers(0, size - ph + 1))
        sx = int(rng.integers(0, size - pw + 1))
        sy = int(rng.integers(0, size - ph + 1))
        composite = base.pixels.copy()
        composite[dy : dy + ph, dx : dx + pw] = source_img.pixels[sy : sy + ph, sx : sx + pw]
        name = f"tamp_{i:04d}.png"
        _write_png(tamp_dir / name, codec.ImageTensor(composite))
        records.append(SampleRecord(f"tampered/{name}", Label.TAMPERED))
        patches[f"tampered/{name}"] = [dx, dy, pw, ph]

    meta = {
        "seed": seed,
        "size": size,
        "base_quality": base_quality,
        "patch_quality": patch_quality,
        "patches": patches,
    }
    atomic_write_text(out_dir / "synth_meta.json", dump_json(meta))
    records.sort(key=lambda r: r.id)
    return Manifest(records, seed=seed)


def _smooth_gradient(rng: np.random.Generator, size: int) -> codec.ImageTensor:
    # Low-frequency random field: tiny noise image upsampled bilinearly.
    small = rng.integers(0, 256, (4, 4, 3)).astype(np.uint8)
    return codec.resize_bilinear(codec.ImageTensor(small), (size, size))


def _write_png(path: Path, img: codec.ImageTensor) -> None:
    try:
        path.write_bytes(codec.encode_png(img))
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc
