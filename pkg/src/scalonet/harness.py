"""Evaluation and scripted parameter sweeps over the full pipeline.

A sweep trains one model per value of a single dimension (axes, wavelet
family, conv widths, batch size, ...) on the same train/test split, then
tabulates per-epoch metrics.  Every point derives its own seed from the
master seed and the value, so points are independent but the whole report
reproduces byte for byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import EmptySweepError, SweepPointError
from .imaging import CropSpec
from .metrics import Metrics
from .nn import (
    History,
    LabeledTensors,
    Network,
    TrainConfig,
    build_network,
    evaluate_network,
    stack_architecture,
    train,
)
from .pipeline import (
    PipelineConfig,
    augment_with_crops,
    dataset_to_tensors,
    parse_axes,
    tensors_to_arrays,
)
from .signal_io import Dataset, SplitSpec, split_train_test

SWEEP_DIMENSIONS = (
    "axes",
    "conv_layers",
    "neurons",
    "dense_layers",
    "cut_images",
    "wavelet",
    "wavelet_combo",
    "batch_size",
    "image_size",
    "dog_order",
    "dog_combo",
)


def evaluate(net: Network, data: LabeledTensors) -> tuple[Metrics, np.ndarray]:
    """Metrics plus the K x K confusion matrix (rows true, columns predicted)."""
    return evaluate_network(net, data)


@dataclass(frozen=True)
class SweepBase:
    """The configuration a sweep perturbs one dimension of."""

    pipeline: PipelineConfig = PipelineConfig()
    conv_channels: tuple[int, ...] = (16, 32)
    dense_units: tuple[int, ...] = (1000,)
    kernel: int = 5
    pool: int = 2
    train: TrainConfig = TrainConfig()
    split: SplitSpec = SplitSpec(train_fraction=0.8, seed=0)
    master_seed: int = 0


@dataclass(frozen=True)
class SweepSpec:
    dimension: str
    values: tuple[str, ...]
    base: SweepBase = SweepBase()

    def __post_init__(self):
        if self.dimension not in SWEEP_DIMENSIONS:
            raise ValueError(
                f"unknown sweep dimension {self.dimension!r}; choose from {SWEEP_DIMENSIONS}"
            )
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))


@dataclass
class SweepPoint:
    value: str
    history: History
    final: Metrics


@dataclass
class SweepReport:
    dimension: str
    points: list[SweepPoint] = field(default_factory=list)

    def best(self) -> SweepPoint:
        return max(self.points, key=lambda p: p.final.accuracy)

    def csv_lines(self) -> list[str]:
        lines = ["sweep_value,epoch,train_loss,test_loss,accuracy,precision,recall"]
        for p in self.points:
            for epoch, tl, vl, acc, prec, rec in p.history.rows():
                lines.append(
                    f"{p.value},{epoch},{tl!r},{vl!r},{acc!r},{prec!r},{rec!r}"
                )
        return lines

    def summary_lines(self) -> list[str]:
        best = self.best()
        lines = [
            f"sweep over {self.dimension} ({len(self.points)} points)",
            "precision/recall are macro (unweighted class) averages",
            "",
            f"{'value':>16s} {'test_loss':>10s} {'accuracy':>9s} {'precision':>10s} {'recall':>8s}",
        ]
        for p in self.points:
            mark = "  <- best" if p is best else ""
            lines.append(
                f"{p.value:>16s} {p.final.loss:>10.4f} {p.final.accuracy:>9.4f} "
                f"{p.final.macro_precision:>10.4f} {p.final.macro_recall:>8.4f}{mark}"
            )
        return lines

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "sweep.csv"
        txt_path = out_dir / "summary.txt"
        csv_path.write_text("\n".join(self.csv_lines()) + "\n", encoding="utf-8")
        txt_path.write_text("\n".join(self.summary_lines()) + "\n", encoding="utf-8")
        return csv_path, txt_path


def derive_seed(master_seed: int, value: str) -> int:
    """Stable (cross-run, cross-platform) per-point seed."""
    digest = hashlib.sha256(f"{master_seed}:{value}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _extend(channels: tuple[int, ...], n: int) -> tuple[int, ...]:
    if n <= len(channels):
        return channels[:n]
    return channels + (channels[-1],) * (n - len(channels))


def apply_dimension(base: SweepBase, dimension: str, value: str) -> SweepBase:
    """One perturbed copy of the base configuration."""
    p = base.pipeline
    if dimension == "axes":
        return replace(base, pipeline=replace(p, axes=parse_axes(value)))
    if dimension == "conv_layers":
        return replace(base, conv_channels=_extend(base.conv_channels, int(value)))
    if dimension == "neurons":
        return replace(base, conv_channels=tuple(int(v) for v in value.split("/")))
    if dimension == "dense_layers":
        n = int(value)
        unit = base.dense_units[0] if base.dense_units else 1000
        return replace(base, dense_units=(unit,) * n)
    if dimension == "cut_images":
        return replace(base, pipeline=replace(p, n_bands=int(value)))
    if dimension == "wavelet":
        return replace(base, pipeline=replace(p, wavelets=(value,)))
    if dimension == "wavelet_combo":
        return replace(base, pipeline=replace(p, wavelets=tuple(value.split("+"))))
    if dimension == "batch_size":
        return replace(base, train=replace(base.train, batch_size=int(value)))
    if dimension == "image_size":
        h, _, w = value.partition("x")
        return replace(base, pipeline=replace(p, resize_to=(int(h), int(w))))
    if dimension == "dog_order":
        return replace(base, pipeline=replace(p, wavelets=(f"dog:{int(value)}",)))
    if dimension == "dog_combo":
        orders = value.split("+")
        return replace(
            base, pipeline=replace(p, wavelets=tuple(f"dog:{int(v)}" for v in orders))
        )
    raise ValueError(f"unknown sweep dimension {dimension!r}")


def run_sweep_point(ds: Dataset, base: SweepBase, dimension: str, value: str) -> SweepPoint:
    cfg = apply_dimension(base, dimension, value)
    seed = derive_seed(cfg.master_seed, value)
    train_ds, test_ds = split_train_test(ds, cfg.split)
    train_tensors = dataset_to_tensors(train_ds, cfg.pipeline)
    test_tensors = dataset_to_tensors(test_ds, cfg.pipeline)
    crop = cfg.pipeline.crop
    if crop is not None and crop.stride > 0:
        train_tensors = augment_with_crops(train_tensors, crop)
        test_tensors = augment_with_crops(test_tensors, CropSpec(crop.width, 0))
    train_arrays = tensors_to_arrays(train_tensors)
    test_arrays = tensors_to_arrays(test_tensors)
    arch = stack_architecture(
        input_shape=train_arrays.x.shape[1:],
        n_classes=ds.n_classes,
        conv_channels=list(cfg.conv_channels),
        dense_units=list(cfg.dense_units),
        kernel=cfg.kernel,
        pool=cfg.pool,
    )
    net = build_network(arch, seed=seed)
    history = train(net, train_arrays, test_arrays, replace(cfg.train, seed=seed))
    final, _ = evaluate_network(net, test_arrays)
    return SweepPoint(value=value, history=history, final=final)


def run_sweep(spec: SweepSpec, ds: Dataset) -> SweepReport:
    """Train and evaluate one model per sweep value, in spec order."""
    if not spec.values:
        raise EmptySweepError("sweep has no values")
    report = SweepReport(dimension=spec.dimension)
    for value in spec.values:
        try:
            report.points.append(run_sweep_point(ds, spec.base, spec.dimension, value))
        except Exception as exc:
            raise SweepPointError(f"sweep {spec.dimension}={value}: {exc}") from exc
    return report
