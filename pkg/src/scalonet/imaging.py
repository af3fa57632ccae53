"""Scalogram-to-image conversion: grayscale planes, channel stacks, crops.

Coefficients map to pixels directly (no plotting-library axes or colormap
artifacts), so every pixel is a pure function of the transform output.
Pixels are kept as float32 in [0, 1]; 8-bit quantization happens only at
PNG export.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CropTooWideError, DimensionMismatchError, NotDivisibleError
from .transform import Scalogram, read_cwts, write_cwts

GRAY_MODES = ("minmax", "absmax")


@dataclass(frozen=True)
class Provenance:
    """Which axis and wavelet a plane came from."""

    axis: str = ""
    wavelet: str = ""


@dataclass(frozen=True)
class ImagePlane:
    """One grayscale plane with unit-interval float32 pixels."""

    pixels: np.ndarray
    provenance: Provenance = Provenance()

    def __post_init__(self):
        p = np.ascontiguousarray(self.pixels, dtype=np.float32)
        object.__setattr__(self, "pixels", p)
        if p.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {p.shape}")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ValueError("pixels must lie in [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True)
class ImageTensor:
    """Stack of equally-sized planes, optionally labeled."""

    channels: list[ImagePlane]
    label: int | None = None

    def __post_init__(self):
        if not self.channels:
            raise ValueError("tensor needs at least one channel")
        shapes = {c.shape for c in self.channels}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"channel shapes differ: {sorted(shapes)}")

    @property
    def shape(self) -> tuple[int, int, int]:
        h, w = self.channels[0].shape
        return (len(self.channels), h, w)

    def pixels(self) -> np.ndarray:
        """Channels stacked into a (C, H, W) float32 array."""
        return np.stack([c.pixels for c in self.channels])


@dataclass(frozen=True)
class CropSpec:
    """Horizontal crop window; stride 0 means one centered crop."""

    width: int
    stride: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"crop width must be >= 1, got {self.width}")
        if self.stride < 0:
            raise ValueError(f"crop stride must be >= 0, got {self.stride}")


def default_gray_mode(wavelet_selector: str) -> str:
    """absmax for signed (DOG-family) coefficients, minmax for modulus."""
    name = wavelet_selector.partition(":")[0]
    return "absmax" if name in ("dog", "mexh") else "minmax"


def to_grayscale(sc: Scalogram, mode: str | None = None, axis: str = "") -> ImagePlane:
    """Normalize a scalogram into unit-interval pixels.

    ``minmax`` maps [min, max] onto [0, 1]; ``absmax`` maps [-M, M] onto
    [0, 1] with M = max |coeff|, anchoring zero coefficients at 0.5.  When
    the map degenerates (constant input for minmax, all-zero for absmax)
    the plane is all 0.5 by convention.
    """
    if mode is None:
        mode = default_gray_mode(sc.wavelet)
    if mode not in GRAY_MODES:
        raise ValueError(f"unknown grayscale mode {mode!r}")
    c = sc.coefficients
    if mode == "minmax":
        lo, hi = c.min(), c.max()
        pix = np.full_like(c, 0.5) if hi == lo else (c - lo) / (hi - lo)
    else:
        m = np.abs(c).max()
        pix = np.full_like(c, 0.5) if m == 0.0 else c / (2.0 * m) + 0.5
    return ImagePlane(
        pixels=np.clip(pix, 0.0, 1.0),
        provenance=Provenance(axis=axis, wavelet=sc.wavelet),
    )


def stack_channels(planes: list[ImagePlane], label: int | None = None) -> ImageTensor:
    """Combine planes into a multi-channel tensor, input order preserved."""
    return ImageTensor(channels=list(planes), label=label)


def sliding_crops(img: ImageTensor, spec: CropSpec) -> list[ImageTensor]:
    """Horizontal crops at offsets 0, stride, 2*stride, ...

    Stride 0 yields a single centered crop.  Labels and provenance are
    inherited; crops are exact column slices of the original.
    """
    _, _, width = img.shape
    if spec.width > width:
        raise CropTooWideError(f"crop width {spec.width} exceeds image width {width}")
    if spec.stride == 0:
        offsets = [(width - spec.width) // 2]
    else:
        offsets = list(range(0, width - spec.width + 1, spec.stride))
    out = []
    for off in offsets:
        planes = [
            ImagePlane(c.pixels[:, off : off + spec.width], c.provenance)
            for c in img.channels
        ]
        out.append(ImageTensor(channels=planes, label=img.label))
    return out


def split_bands(img: ImageTensor, n_bands: int) -> list[ImageTensor]:
    """Cut the tensor into horizontal scale bands, top to bottom."""
    _, height, _ = img.shape
    if n_bands < 1:
        raise ValueError(f"n_bands must be >= 1, got {n_bands}")
    if height % n_bands != 0:
        raise NotDivisibleError(f"height {height} not divisible into {n_bands} bands")
    h = height // n_bands
    out = []
    for i in range(n_bands):
        planes = [
            ImagePlane(c.pixels[i * h : (i + 1) * h, :], c.provenance)
            for c in img.channels
        ]
        out.append(ImageTensor(channels=planes, label=img.label))
    return out


def _resize_plane(p: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    # bilinear with half-pixel centers: output (i, j) samples input
    # ((i + 0.5) * H / new_h - 0.5, (j + 0.5) * W / new_w - 0.5)
    h, w = p.shape
    src = p.astype(np.float64)
    ys = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    xs = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(int)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
    bot = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
    return np.clip(top * (1 - wy) + bot * wy, 0.0, 1.0)


def resize(img: ImageTensor, new_h: int, new_w: int) -> ImageTensor:
    """Bilinear per-channel resize; identity dimensions return equal pixels."""
    if new_h < 1 or new_w < 1:
        raise ValueError("resize targets must be positive")
    planes = [
        ImagePlane(_resize_plane(c.pixels, new_h, new_w), c.provenance)
        for c in img.channels
    ]
    return ImageTensor(channels=planes, label=img.label)


def _safe(tag: str) -> str:
    return re.sub(r"[^A-Za-z0-9.-]+", "-", tag) if tag else "none"


def quantize(plane: ImagePlane) -> np.ndarray:
    """8-bit pixel values, round-half-up."""
    return np.floor(plane.pixels * 255.0 + 0.5).astype(np.uint8)


def export_png(img: ImageTensor, dir: str | Path, stem: str) -> list[Path]:
    """Write one 8-bit grayscale PNG per channel.

    Files are named ``<stem>_<axis>_<wavelet>.png`` (selector ':' becomes
    '-' for filename safety).  Returns the written paths.
    """
    dir = Path(dir)
    dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, plane in enumerate(img.channels):
        prov = plane.provenance
        axis = _safe(prov.axis) if prov.axis else f"c{i}"
        name = f"{stem}_{axis}_{_safe(prov.wavelet)}.png"
        path = dir / name
        Image.fromarray(quantize(plane), mode="L").save(path)
        paths.append(path)
    return paths


def import_png(path: str | Path) -> ImagePlane:
    """Read an 8-bit grayscale PNG back into a unit-interval plane."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float32) / 255.0
    stem = Path(path).stem
    parts = stem.rsplit("_", 2)
    prov = Provenance(axis=parts[1], wavelet=parts[2]) if len(parts) == 3 else Provenance()
    return ImagePlane(pixels=arr, provenance=prov)


def render_curve(values: np.ndarray, height: int = 128, width: int | None = None) -> np.ndarray:
    """Rasterize a 1-D curve into an 8-bit grayscale image (dark on white).

    A deterministic stand-in for a plotting library: one column per sample
    (resampled by nearest index when ``width`` is given), consecutive
    samples joined by vertical strokes.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("render_curve needs a 1-D array of at least 2 values")
    if width is None:
        width = v.size
    cols = v[np.minimum((np.arange(width) * v.size) // width, v.size - 1)]
    lo, hi = cols.min(), cols.max()
    unit = np.full(width, 0.5) if hi == lo else (cols - lo) / (hi - lo)
    rows = np.round((1.0 - unit) * (height - 1)).astype(int)
    img = np.full((height, width), 255, dtype=np.uint8)
    img[rows, np.arange(width)] = 0
    for j in range(1, width):
        a, b = sorted((rows[j - 1], rows[j]))
        img[a : b + 1, j] = 0
    return img


def save_png_array(pixels: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit grayscale array as PNG."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(path)


def export_raw(img: ImageTensor, path: str | Path) -> None:
    """Write the pixel stack in the CWTS raw layout (float32, exact)."""
    write_cwts(path, img.pixels())


def import_raw(
    path: str | Path,
    provenance: list[Provenance] | None = None,
    label: int | None = None,
) -> ImageTensor:
    """Read a CWTS file of unit-interval pixels back into a tensor.

    The raw layout carries no provenance or label; pass them explicitly to
    restore what a manifest recorded.
    """
    stack = read_cwts(path)
    if provenance is None:
        provenance = [Provenance() for _ in range(stack.shape[0])]
    if len(provenance) != stack.shape[0]:
        raise DimensionMismatchError(
            f"{path}: {stack.shape[0]} channels but {len(provenance)} provenance entries"
        )
    planes = [ImagePlane(stack[i], provenance[i]) for i in range(stack.shape[0])]
    return ImageTensor(channels=planes, label=label)
