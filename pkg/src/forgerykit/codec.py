"""Image decoding, resizing, JPEG recompression, and compression-difference tensors.

The compression-difference representation is built by recompressing an image
at a fixed JPEG quality and subtracting the result from the original:
regions whose compression history differs from the rest of the image respond
differently to requantization, so the residual highlights them. The hybrid
input stacks normalized RGB with the remapped residual into a 6-channel
tensor for the classifier.

All operations are pure functions; they never mutate their inputs and are
safe to call concurrently.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import (
    EncodeFailureError,
    MalformedImageError,
    ShapeMismatchError,
    UnsupportedFormatError,
)

_JPEG_MAGIC = b"\xff\xd8"
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# Pillow subsampling codes for baseline JPEG encoding.
_SUBSAMPLING_CODES = {"4:2:0": 2, "4:4:4": 0}


class TensorForm(enum.Enum):
    BYTES = "bytes"
    NORMALIZED = "normalized"


class InputMode(enum.Enum):
    RGB_ONLY = "rgb"
    FDIFF_ONLY = "fdiff"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class ImageTensor:
    """H x W x C raster: uint8 samples in Bytes form, unit-interval reals in Normalized form."""

    pixels: np.ndarray
    form: TensorForm = TensorForm.BYTES

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] not in (1, 3):
            raise ValueError(f"pixels must be (H, W, 1|3), got shape {self.pixels.shape}")
        if self.form is TensorForm.BYTES:
            if self.pixels.dtype != np.uint8:
                raise ValueError(f"Bytes form requires uint8 samples, got {self.pixels.dtype}")
        else:
            if self.pixels.dtype != np.float64:
                raise ValueError(f"Normalized form requires float64 samples, got {self.pixels.dtype}")
            if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
                raise ValueError("Normalized samples must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class DiffTensor:
    """Signed compression residual: raw byte difference divided by 255, in [-1, 1].

    ``gain`` is a display amplification for PNG export only; it is never
    applied to classifier inputs.
    """

    values: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.dtype != np.float64:
            raise ValueError("diff values must be a float64 (H, W, C) array")
        if self.values.size and (self.values.min() < -1.0 or self.values.max() > 1.0):
            raise ValueError("diff values must lie in [-1, 1]")
        if self.gain < 1.0:
            raise ValueError(f"gain must be >= 1, got {self.gain}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class PreprocessConfig:
    """Settings for the decode -> resize -> recompress -> diff -> stack pipeline."""

    target_size: tuple[int, int] = (224, 224)
    jpeg_quality: int = 90
    input_mode: InputMode = InputMode.HYBRID
    chroma_subsampling: str = "4:2:0"
    resize_filter: str = "bilinear"

    def __post_init__(self):
        w, h = self.target_size
        if w < 8 or h < 8:
            raise ValueError(f"target size must be at least 8x8 (one JPEG block), got {w}x{h}")
        if not 1 <= self.jpeg_quality <= 100:
            raise ValueError(f"jpeg quality must be in [1, 100], got {self.jpeg_quality}")
        if self.chroma_subsampling not in _SUBSAMPLING_CODES:
            raise ValueError(f"chroma subsampling must be one of {sorted(_SUBSAMPLING_CODES)}")
        if self.resize_filter != "bilinear":
            raise ValueError("only the bilinear resize filter is supported")

    @property
    def input_channels(self) -> int:
        return 6 if self.input_mode is InputMode.HYBRID else 3


def decode_image(data: bytes) -> ImageTensor:
    """Decode a JPEG or PNG stream into an RGB Bytes-form tensor.

    Grayscale and palette images are expanded to three channels; alpha is
    dropped.

    Raises:
        UnsupportedFormatError: the stream is neither JPEG nor PNG.
        MalformedImageError: the stream is recognized but cannot be decoded.
    """
    if not (data.startswith(_JPEG_MAGIC) or data.startswith(_PNG_MAGIC)):
        raise UnsupportedFormatError("stream is neither JPEG nor PNG")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
    except Exception as exc:
        raise MalformedImageError(f"undecodable image stream: {exc}") from exc
    return ImageTensor(np.asarray(rgb, dtype=np.uint8))


def encode_jpeg(img: ImageTensor, quality: int, chroma_subsampling: str = "4:2:0") -> bytes:
    """Encode a 3-channel Bytes-form tensor as baseline JPEG."""
    _require_bytes_rgb(img, "encode_jpeg")
    if not 1 <= quality <= 100:
        raise ValueError(f"jpeg quality must be in [1, 100], got {quality}")
    try:
        code = _SUBSAMPLING_CODES[chroma_subsampling]
    except KeyError:
        raise ValueError(f"chroma subsampling must be one of {sorted(_SUBSAMPLING_CODES)}") from None
    buf = io.BytesIO()
    try:
        Image.fromarray(img.pixels, "RGB").save(buf, "JPEG", quality=quality, subsampling=code)
    except Exception as exc:
        raise EncodeFailureError(f"JPEG encoding failed: {exc}") from exc
    return buf.getvalue()


def encode_png(img: ImageTensor) -> bytes:
    """Encode a Bytes-form tensor as PNG (lossless, deterministic bytes)."""
    if img.form is not TensorForm.BYTES:
        raise ValueError("encode_png requires a Bytes-form tensor")
    mode = "RGB" if img.channels == 3 else "L"
    pixels = img.pixels if img.channels == 3 else img.pixels[:, :, 0]
    buf = io.BytesIO()
    try:
        Image.fromarray(pixels, mode).save(buf, "PNG")
    except Exception as exc:
        raise EncodeFailureError(f"PNG encoding failed: {exc}") from exc
    return buf.getvalue()


def resize_bilinear(img: ImageTensor, target: tuple[int, int]) -> ImageTensor:
    """Resize with bilinear interpolation using half-pixel-center coordinates.

    Output samples are rounded half-up and clamped to [0, 255]. Resizing to
    the source size is a bit-exact identity.
    """
    if img.form is not TensorForm.BYTES:
        raise ValueError("resize_bilinear requires a Bytes-form tensor")
    tw, th = target
    if tw < 1 or th < 1:
        raise ValueError(f"target dimensions must be >= 1, got {tw}x{th}")
    h, w = img.height, img.width
    if (tw, th) == (w, h):
        return ImageTensor(img.pixels.copy(), TensorForm.BYTES)

    src = img.pixels.astype(np.float64)
    sx = np.clip((np.arange(tw) + 0.5) * (w / tw) - 0.5, 0.0, w - 1.0)
    sy = np.clip((np.arange(th) + 0.5) * (h / th) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[None, :, None]
    fy = (sy - y0)[:, None, None]

    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1.0 - fy) + bottom * fy
    out = np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)
    return ImageTensor(out, TensorForm.BYTES)


def jpeg_roundtrip(
    img: ImageTensor, quality: int, chroma_subsampling: str = "4:2:0"
) -> ImageTensor:
    """Encode as baseline JPEG at the given quality and decode again.

    This produces the recompressed copy whose difference from the original
    forms the compression residual. Output shape equals input shape.
    """
    _require_bytes_rgb(img, "jpeg_roundtrip")
    out = decode_image(encode_jpeg(img, quality, chroma_subsampling))
    if out.pixels.shape != img.pixels.shape:
        raise EncodeFailureError(
            f"roundtrip changed shape {img.pixels.shape} -> {out.pixels.shape}"
        )
    return out


def compute_fdiff(f: ImageTensor, f_comp: ImageTensor) -> DiffTensor:
    """Elementwise (f - f_comp) / 255 as signed reals; no clamping needed."""
    if f.form is not TensorForm.BYTES or f_comp.form is not TensorForm.BYTES:
        raise ValueError("compute_fdiff requires Bytes-form tensors")
    if f.pixels.shape != f_comp.pixels.shape:
        raise ShapeMismatchError(
            f"image shapes differ: {f.pixels.shape} vs {f_comp.pixels.shape}"
        )
    values = (f.pixels.astype(np.float64) - f_comp.pixels.astype(np.float64)) / 255.0
    return DiffTensor(values)


def build_input(rgb: ImageTensor, fdiff: DiffTensor, mode: InputMode) -> np.ndarray:
    """Assemble the normalized classifier input, (H, W, C) float64 in [0, 1].

    RGB_ONLY: samples / 255 (3 channels). FDIFF_ONLY: (diff + 1) / 2
    (3 channels). HYBRID: normalized RGB in channels 0-2 stacked with the
    remapped diff in channels 3-5.
    """
    _require_bytes_rgb(rgb, "build_input")
    if (rgb.height, rgb.width) != (fdiff.height, fdiff.width):
        raise ShapeMismatchError(
            f"spatial dims differ: rgb {rgb.height}x{rgb.width} vs "
            f"fdiff {fdiff.height}x{fdiff.width}"
        )
    if mode is InputMode.RGB_ONLY:
        return rgb.pixels.astype(np.float64) / 255.0
    remapped = (fdiff.values + 1.0) / 2.0
    if mode is InputMode.FDIFF_ONLY:
        return remapped
    return np.concatenate([rgb.pixels.astype(np.float64) / 255.0, remapped], axis=2)


def diff_to_png(diff: DiffTensor) -> bytes:
    """Export a residual as an 8-bit PNG: round((v * gain + 1) / 2 * 255), clamped.

    Debug visualization only; the gain never reaches classifier inputs.
    """
    scaled = (diff.values * diff.gain + 1.0) / 2.0 * 255.0
    pixels = np.clip(np.floor(scaled + 0.5), 0.0, 255.0).astype(np.uint8)
    return encode_png(ImageTensor(pixels, TensorForm.BYTES))


def preprocess_image(data: bytes, config: PreprocessConfig) -> np.ndarray:
    """Run the full input pipeline on one encoded image.

    Order: decode, resize to target, recompress at the configured quality,
    diff, stack per the input mode. Resizing precedes recompression so the
    residual is computed at final resolution and block artifacts are not
    smeared by interpolation.
    """
    rgb = resize_bilinear(decode_image(data), config.target_size)
    recompressed = jpeg_roundtrip(rgb, config.jpeg_quality, config.chroma_subsampling)
    fdiff = compute_fdiff(rgb, recompressed)
    return build_input(rgb, fdiff, config.input_mode)


def _require_bytes_rgb(img: ImageTensor, op: str) -> None:
    if img.form is not TensorForm.BYTES:
        raise ValueError(f"{op} requires a Bytes-form tensor")
    if img.channels != 3:
        raise ValueError(f"{op} requires a 3-channel tensor, got {img.channels}")
