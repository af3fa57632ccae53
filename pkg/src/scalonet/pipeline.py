"""Glue from labeled signal windows to batch-ready image tensors.

One PipelineConfig fixes the channel layout (axes x wavelets, axis-major),
the scale grid, grayscale normalization, and optional band-splitting /
resizing, so every stage of the CLI and the sweep harness derives images
the same way.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .imaging import (
    CropSpec,
    ImagePlane,
    ImageTensor,
    Provenance,
    default_gray_mode,
    resize,
    sliding_crops,
    split_bands,
    stack_channels,
    to_grayscale,
)
from .nn.training import LabeledTensors
from .signal_io import Dataset, MultiAxisSample, ensure_magnitude
from .transform import ScaleGrid, Scalogram, cwt, default_scale_grid
from .wavelets import parse_wavelet

AXIS_CHOICES = {
    "x": ["x"],
    "y": ["y"],
    "z": ["z"],
    "mag": ["mag"],
    "xyz": ["x", "y", "z"],
    "xyzm": ["x", "y", "z", "mag"],
}


@dataclass(frozen=True)
class PipelineConfig:
    axes: tuple[str, ...] = ("x", "y", "z")
    wavelets: tuple[str, ...] = ("mexh",)
    a0: float = 2.0
    n_scales: int = 64
    gray_mode: str | None = None  # None = per-wavelet default
    crop: CropSpec | None = None  # stride 0 => one centered crop
    resize_to: tuple[int, int] | None = None
    n_bands: int = 1
    strategy: str = "fft"
    boundary: str = "zero"


def parse_axes(value: str) -> tuple[str, ...]:
    """Axis-set selector: one of x, y, z, mag, xyz, xyzm."""
    key = value.strip().lower()
    if key not in AXIS_CHOICES:
        raise ValueError(f"unknown axes selector {value!r}; choose from {sorted(AXIS_CHOICES)}")
    return tuple(AXIS_CHOICES[key])


def scale_grid_for(window_len: int, cfg: PipelineConfig) -> ScaleGrid:
    return default_scale_grid(window_len, a0=cfg.a0, n_scales=cfg.n_scales)


def sample_scalograms(
    sample: MultiAxisSample, cfg: PipelineConfig
) -> list[tuple[Provenance, Scalogram]]:
    """CWT of every configured (axis, wavelet) channel, axis-major order."""
    if "mag" in cfg.axes:
        sample = ensure_magnitude(sample)
    grid = scale_grid_for(sample.window_len, cfg)
    out = []
    for axis in cfg.axes:
        if axis not in sample.axes:
            raise ValueError(f"sample {sample.id!r} has no axis {axis!r}")
        for selector in cfg.wavelets:
            wav = parse_wavelet(selector)
            sc = cwt(sample.axes[axis], wav, grid, strategy=cfg.strategy, boundary=cfg.boundary)
            out.append((Provenance(axis=axis, wavelet=wav.selector), sc))
    return out


def sample_to_tensor(sample: MultiAxisSample, cfg: PipelineConfig) -> ImageTensor:
    """Full per-sample image pipeline: CWT, grayscale, stack, crop, bands, resize."""
    planes = [
        to_grayscale(sc, cfg.gray_mode, axis=prov.axis)
        for prov, sc in sample_scalograms(sample, cfg)
    ]
    tensor = stack_channels(planes, label=sample.label)
    if cfg.crop is not None:
        tensor = sliding_crops(tensor, replace(cfg.crop, stride=0))[0]
    if cfg.n_bands > 1:
        bands = split_bands(tensor, cfg.n_bands)
        tensor = stack_channels(
            [plane for band in bands for plane in band.channels], label=tensor.label
        )
    if cfg.resize_to is not None:
        tensor = resize(tensor, cfg.resize_to[0], cfg.resize_to[1])
    return tensor


def dataset_to_tensors(ds: Dataset, cfg: PipelineConfig, jobs: int = 1) -> list[ImageTensor]:
    """Per-sample tensors in dataset order; `jobs` only parallelizes the map."""
    if jobs <= 1:
        return [sample_to_tensor(s, cfg) for s in ds.samples]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: sample_to_tensor(s, cfg), ds.samples))


def gray_plane_from_raw(
    coeffs: np.ndarray, wavelet: str, axis: str = "", mode: str | None = None
) -> ImagePlane:
    """Grayscale a raw coefficient plane read back from a CWTS file."""
    if mode is None:
        mode = default_gray_mode(wavelet)
    c = np.asarray(coeffs, dtype=np.float64)
    if mode == "minmax":
        lo, hi = c.min(), c.max()
        pix = np.full_like(c, 0.5) if hi == lo else (c - lo) / (hi - lo)
    else:
        m = np.abs(c).max()
        pix = np.full_like(c, 0.5) if m == 0.0 else c / (2.0 * m) + 0.5
    return ImagePlane(np.clip(pix, 0.0, 1.0), Provenance(axis=axis, wavelet=wavelet))


def augment_with_crops(tensors: list[ImageTensor], spec: CropSpec) -> list[ImageTensor]:
    """Expand a tensor list by sliding crops (training-time augmentation)."""
    out = []
    for t in tensors:
        out.extend(sliding_crops(t, spec))
    return out


def tensors_to_arrays(tensors: list[ImageTensor]) -> LabeledTensors:
    """Stack tensors (which must share shape and carry labels) for training."""
    if not tensors:
        raise ValueError("no tensors to stack")
    labels = [t.label for t in tensors]
    if any(lbl is None for lbl in labels):
        raise ValueError("all tensors must be labeled")
    x = np.stack([t.pixels() for t in tensors]).astype(np.float64)
    return LabeledTensors(x=x, y=np.array(labels, dtype=np.int64))
