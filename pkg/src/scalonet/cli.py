"""Command-line front end for the signal-to-scalogram-to-classifier pipeline.

Subcommands::

    ingest-check   validate a signals CSV + sidecar and print a summary
    transform      CWT every sample into a raw CWTS tensor (+ optional PNGs)
    render         turn transformed tensors into grayscale PNGs
    train          train a network on transformed tensors, save checkpoint
    eval           evaluate a checkpoint, emit metrics + confusion matrix
    sweep          train one model per value of one config dimension
    demo-fourier   regenerate the Fourier-vs-scalogram discrimination demo

Every option can come from (in increasing precedence) a ``key=value``
config file (``--config``), an environment variable ``SCALONET_<KEY>``,
or the command-line flag itself.  All commands accept the full flag set
and ignore what they do not use; unknown config keys are rejected.

Exit codes: 0 success, 1 input/config error, 2 numerical failure.
All randomness flows from ``--seed``; reruns with identical inputs and
seeds produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import harness, nn
from .errors import ConfigError, DivergedError, ScalonetError
from .imaging import (
    CropSpec,
    ImageTensor,
    export_png,
    quantize,
    render_curve,
    resize,
    save_png_array,
    sliding_crops,
    split_bands,
    stack_channels,
    to_grayscale,
)
from .pipeline import (
    PipelineConfig,
    augment_with_crops,
    gray_plane_from_raw,
    parse_axes,
    sample_scalograms,
    tensors_to_arrays,
)
from .signal_io import SplitSpec, load_dataset, read_schema, sidecar_path, split_indices
from .synth import demo_fourier_signals
from .transform import cwt, default_scale_grid, dft_magnitude, read_cwts, write_cwts
from .wavelets import parse_wavelet

ENV_PREFIX = "SCALONET_"

# key, type, default, help -- config-file keys and flags are the same set
OPTION_SPEC: list[tuple[str, str, object, str]] = [
    ("dataset", "str", "", "signals CSV file"),
    ("meta", "str", "", "sidecar metadata file (default: <dataset>.meta)"),
    ("input", "str", "", "directory produced by the transform step"),
    ("out", "str", "out", "output directory"),
    ("checkpoint", "str", "", "SHNN checkpoint file (for eval)"),
    ("wavelet", "list", ["mexh"], "wavelet selector(s): dog:<m>, mexh, morlet[:w0], paul[:m]"),
    ("axes", "str", "xyz", "axis set: x, y, z, mag, xyz, or xyzm"),
    ("a0", "float", 2.0, "smallest analysis scale in samples"),
    ("n_scales", "int", 64, "number of analysis scales (image height)"),
    ("gray_mode", "str", "auto", "grayscale normalization: auto, minmax, or absmax"),
    ("crop_width", "int", 0, "crop images to this width (0 = no crop)"),
    ("augment_stride", "int", 0, "training-time sliding-crop stride (0 = off)"),
    ("resize", "str", "", "resize images to HxW (empty = keep)"),
    ("bands", "int", 1, "split each image into this many scale bands"),
    ("strategy", "str", "fft", "transform strategy: fft or direct"),
    ("boundary", "str", "zero", "transform boundary rule: zero or periodic"),
    ("preset", "str", "paper-initial", "architecture preset: paper-initial or paper-best"),
    ("arch", "str", "", "explicit architecture string (overrides preset)"),
    ("conv_channels", "str", "16/32", "conv widths for sweeps, e.g. 32/128/128"),
    ("dense_units", "str", "1000", "extra dense widths for sweeps, e.g. 1000"),
    ("batch_size", "int", 35, "mini-batch size"),
    ("epochs", "int", 10, "training epochs"),
    ("lr", "float", 1e-3, "learning rate"),
    ("optimizer", "str", "adam", "optimizer: adam or sgd"),
    ("train_fraction", "float", 0.8, "fraction of samples used for training"),
    ("seed", "int", 0, "master seed for every random choice"),
    ("jobs", "int", 1, "parallel workers where supported (never changes outputs)"),
    ("png", "bool", False, "also write grayscale PNGs during transform"),
    ("strict", "bool", True, "reject samples missing any of the x/y/z axes"),
    ("dimension", "str", "", "sweep dimension (see sweep --help)"),
    ("values", "str", "", "comma-separated sweep values"),
]

COMMANDS = ("ingest-check", "transform", "render", "train", "eval", "sweep", "demo-fourier")


def _parse_value(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "list":
            return [v for v in raw.split(",") if v]
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def read_run_config(path: str | Path) -> dict:
    """Parse a key=value run-config file; unknown keys are an error."""
    known = {key: kind for key, kind, _, _ in OPTION_SPEC}
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _parse_value(key, known[key], raw.strip())
    return out


def _env_overrides() -> dict:
    known = {key: kind for key, kind, _, _ in OPTION_SPEC}
    out = {}
    for key, kind in known.items():
        raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            out[key] = _parse_value(key, kind, raw)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalonet",
        description="wavelet scalogram imaging and CNN classification for signal windows",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"{name} step")
        p.add_argument("--config", default=None, help="key=value run-config file")
        for key, kind, default, help_text in OPTION_SPEC:
            flag = "--" + key.replace("_", "-")
            if kind == "bool":
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction,
                               default=None, help=help_text)
            elif kind == "list":
                p.add_argument(flag, dest=key, action="append", default=None,
                               help=help_text + " (repeatable)")
            elif kind == "int":
                p.add_argument(flag, dest=key, type=int, default=None, help=help_text)
            elif kind == "float":
                p.add_argument(flag, dest=key, type=float, default=None, help=help_text)
            else:
                p.add_argument(flag, dest=key, default=None, help=help_text)
    return parser


class Options:
    """Merged option values: defaults < config file < env < flags."""

    def __init__(self, args: argparse.Namespace):
        merged = {key: default for key, _, default, _ in OPTION_SPEC}
        if args.config:
            merged.update(read_run_config(args.config))
        merged.update(_env_overrides())
        for key, kind, _, _ in OPTION_SPEC:
            given = getattr(args, key, None)
            if given is not None:
                merged[key] = given
        for key, value in merged.items():
            setattr(self, key, value)

    def require(self, key: str) -> object:
        value = getattr(self, key)
        if value in ("", None, []):
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        return value


def _safe_stem(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.-]+", "-", text)


def _pipeline_config(opt: Options) -> PipelineConfig:
    resize_to = None
    if opt.resize:
        h, sep, w = opt.resize.partition("x")
        if not sep:
            raise ConfigError(f"--resize expects HxW, got {opt.resize!r}")
        resize_to = (int(h), int(w))
    crop = CropSpec(opt.crop_width, 0) if opt.crop_width > 0 else None
    return PipelineConfig(
        axes=parse_axes(opt.axes),
        wavelets=tuple(opt.wavelet),
        a0=opt.a0,
        n_scales=opt.n_scales,
        gray_mode=None if opt.gray_mode == "auto" else opt.gray_mode,
        crop=crop,
        resize_to=resize_to,
        n_bands=opt.bands,
        strategy=opt.strategy,
        boundary=opt.boundary,
    )


def _load_dataset(opt: Options):
    path = Path(str(opt.require("dataset")))
    if not path.exists():
        raise ConfigError(f"dataset file not found: {path}")
    meta = Path(opt.meta) if opt.meta else sidecar_path(path)
    if not meta.exists():
        raise ConfigError(f"metadata sidecar not found: {meta}")
    return load_dataset(path, read_schema(meta), strict=opt.strict)


def cmd_ingest_check(opt: Options) -> int:
    ds = _load_dataset(opt)
    counts = np.bincount([s.label for s in ds.samples], minlength=ds.n_classes)
    print(f"dataset ok: {len(ds)} samples, window length {ds.samples[0].window_len}, "
          f"{ds.samples[0].sample_rate_hz:g} Hz")
    print(f"classes ({ds.n_classes}): " +
          ", ".join(f"{name}={counts[i]}" for i, name in enumerate(ds.class_names)))
    axes_seen = sorted({a for s in ds.samples for a in s.axes})
    print(f"axes present: {', '.join(axes_seen)}")
    return 0


def _write_manifest(out_dir: Path, rows: list[str], meta_lines: list[str]) -> None:
    (out_dir / "manifest.csv").write_text(
        "id,label,file,channels\n" + "\n".join(rows) + "\n", encoding="utf-8"
    )
    (out_dir / "meta.txt").write_text("\n".join(meta_lines) + "\n", encoding="utf-8")


def read_manifest(in_dir: str | Path) -> tuple[list[dict], dict]:
    """Entries ({id,label,file,channels}) and the meta key=value table."""
    in_dir = Path(in_dir)
    manifest = in_dir / "manifest.csv"
    if not manifest.exists():
        raise ConfigError(f"no manifest.csv under {in_dir}")
    entries = []
    for line in manifest.read_text(encoding="utf-8").splitlines()[1:]:
        if not line.strip():
            continue
        sid, label, fname, channels = line.split(",", 3)
        pairs = [c.split("=", 1) for c in channels.split(";") if c]
        entries.append({
            "id": sid,
            "label": int(label),
            "file": in_dir / fname,
            "channels": [(axis, wav) for axis, wav in pairs],
        })
    meta = {}
    meta_file = in_dir / "meta.txt"
    if meta_file.exists():
        for line in meta_file.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
    return entries, meta


def cmd_transform(opt: Options) -> int:
    ds = _load_dataset(opt)
    cfg = _pipeline_config(opt)
    out_dir = Path(str(opt.require("out")))
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(indexed):
        i, sample = indexed
        scalos = sample_scalograms(sample, cfg)
        stack = np.stack([sc.coefficients for _, sc in scalos])
        fname = f"{i:05d}_{_safe_stem(sample.id)}.cwts"
        write_cwts(out_dir / fname, stack)
        channels = ";".join(f"{prov.axis}={prov.wavelet}" for prov, _ in scalos)
        if opt.png:
            planes = [to_grayscale(sc, cfg.gray_mode, axis=prov.axis) for prov, sc in scalos]
            export_png(stack_channels(planes, sample.label), out_dir / "png", _safe_stem(sample.id))
        return f"{sample.id},{sample.label},{fname},{channels}"

    items = list(enumerate(ds.samples))
    if opt.jobs > 1:
        with ThreadPoolExecutor(max_workers=opt.jobs) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(item) for item in items]

    meta_lines = [
        "class_names=" + ";".join(ds.class_names),
        f"sample_rate_hz={ds.samples[0].sample_rate_hz!r}",
        f"window_len={ds.samples[0].window_len}",
        "wavelets=" + ",".join(cfg.wavelets),
        "axes=" + ",".join(cfg.axes),
        f"n_scales={cfg.n_scales}",
        f"a0={cfg.a0!r}",
        f"strategy={cfg.strategy}",
        f"boundary={cfg.boundary}",
    ]
    _write_manifest(out_dir, rows, meta_lines)
    print(f"wrote {len(rows)} CWTS files to {out_dir}")
    return 0


def _tensor_from_entry(entry: dict, opt: Options) -> ImageTensor:
    stack = read_cwts(entry["file"])
    if len(entry["channels"]) != stack.shape[0]:
        raise ConfigError(f"{entry['file']}: manifest channel count mismatch")
    mode = None if opt.gray_mode == "auto" else opt.gray_mode
    planes = [
        gray_plane_from_raw(stack[c], wavelet=wav, axis=axis, mode=mode)
        for c, (axis, wav) in enumerate(entry["channels"])
    ]
    return stack_channels(planes, label=entry["label"])


def _shape_tensor(tensor: ImageTensor, opt: Options, center_crop: bool) -> ImageTensor:
    if opt.crop_width > 0 and center_crop:
        tensor = sliding_crops(tensor, CropSpec(opt.crop_width, 0))[0]
    if opt.bands > 1:
        bands = split_bands(tensor, opt.bands)
        tensor = stack_channels(
            [plane for band in bands for plane in band.channels], label=tensor.label
        )
    if opt.resize:
        h, _, w = opt.resize.partition("x")
        tensor = resize(tensor, int(h), int(w))
    return tensor


def _load_tensors(opt: Options) -> tuple[list[ImageTensor], list[str]]:
    entries, meta = read_manifest(str(opt.require("input")))
    class_names = [c for c in meta.get("class_names", "").split(";") if c]
    if not class_names:
        n = max(e["label"] for e in entries) + 1
        class_names = [f"class{i}" for i in range(n)]
    return [_tensor_from_entry(e, opt) for e in entries], class_names


def cmd_render(opt: Options) -> int:
    entries, _ = read_manifest(str(opt.require("input")))
    out_dir = Path(str(opt.require("out")))
    count = 0
    for entry in entries:
        tensor = _shape_tensor(_tensor_from_entry(entry, opt), opt, center_crop=True)
        count += len(export_png(tensor, out_dir, _safe_stem(entry["id"])))
    print(f"wrote {count} PNGs to {out_dir}")
    return 0


def _train_config(opt: Options) -> nn.TrainConfig:
    return nn.TrainConfig(
        batch_size=opt.batch_size,
        epochs=opt.epochs,
        learning_rate=opt.lr,
        optimizer=opt.optimizer,
        seed=opt.seed,
    )


def _history_csv(history: nn.History) -> str:
    lines = ["epoch,train_loss,test_loss,accuracy,precision,recall"]
    for epoch, tl, vl, acc, prec, rec in history.rows():
        lines.append(f"{epoch},{tl!r},{vl!r},{acc!r},{prec!r},{rec!r}")
    return "\n".join(lines) + "\n"


def cmd_train(opt: Options) -> int:
    tensors, class_names = _load_tensors(opt)
    spec = SplitSpec(train_fraction=opt.train_fraction, seed=opt.seed)
    train_idx, test_idx = split_indices(len(tensors), spec)
    train_tensors = [_shape_tensor(tensors[i], opt, center_crop=True) for i in train_idx]
    test_tensors = [_shape_tensor(tensors[i], opt, center_crop=True) for i in test_idx]
    if opt.augment_stride > 0:
        if opt.crop_width <= 0:
            raise ConfigError("--augment-stride needs --crop-width")
        raw_train = [_shape_tensor(tensors[i], opt, center_crop=False) for i in train_idx]
        train_tensors = augment_with_crops(raw_train, CropSpec(opt.crop_width, opt.augment_stride))
    train_arrays = tensors_to_arrays(train_tensors)
    test_arrays = tensors_to_arrays(test_tensors)

    arch = opt.arch or nn.preset_architecture(
        opt.preset, train_arrays.x.shape[1:], len(class_names)
    )
    net = nn.build_network(arch, seed=opt.seed)
    history = nn.train(net, train_arrays, test_arrays, _train_config(opt))

    out_dir = Path(str(opt.require("out")))
    out_dir.mkdir(parents=True, exist_ok=True)
    nn.save_checkpoint(net, out_dir / "model.shnn")
    (out_dir / "history.csv").write_text(_history_csv(history), encoding="utf-8")
    if len(history):
        print(f"trained {opt.epochs} epochs: test accuracy {history.accuracy[-1]:.4f}, "
              f"test loss {history.test_loss[-1]:.4f}")
    else:
        print("trained 0 epochs: checkpoint equals initialization")
    print(f"checkpoint: {out_dir / 'model.shnn'}")
    return 0


def cmd_eval(opt: Options) -> int:
    ckpt = Path(str(opt.require("checkpoint")))
    if not ckpt.exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    net = nn.load_checkpoint(ckpt)
    tensors, class_names = _load_tensors(opt)
    shaped = [_shape_tensor(t, opt, center_crop=True) for t in tensors]
    data = tensors_to_arrays(shaped)
    metrics, conf = harness.evaluate(net, data)
    out_dir = Path(str(opt.require("out")))
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ",".join(class_names)
    conf_csv = header + "\n" + "\n".join(",".join(str(v) for v in row) for row in conf)
    (out_dir / "confusion.csv").write_text(conf_csv + "\n", encoding="utf-8")
    report = (
        f"samples={len(data)}\n"
        f"loss={metrics.loss!r}\n"
        f"accuracy={metrics.accuracy!r}\n"
        f"macro_precision={metrics.macro_precision!r}\n"
        f"macro_recall={metrics.macro_recall!r}\n"
    )
    (out_dir / "metrics.txt").write_text(report, encoding="utf-8")
    print(report, end="")
    return 0


def cmd_sweep(opt: Options) -> int:
    ds = _load_dataset(opt)
    dimension = str(opt.require("dimension"))
    values = [v for v in str(opt.require("values")).split(",") if v]
    base = harness.SweepBase(
        pipeline=_pipeline_config(opt),
        conv_channels=tuple(int(v) for v in opt.conv_channels.split("/")),
        dense_units=tuple(int(v) for v in opt.dense_units.split("/") if v),
        train=_train_config(opt),
        split=SplitSpec(train_fraction=opt.train_fraction, seed=opt.seed),
        master_seed=opt.seed,
    )
    report = harness.run_sweep(harness.SweepSpec(dimension, tuple(values), base), ds)
    out_dir = Path(str(opt.require("out")))
    report.write(out_dir)
    print("\n".join(report.summary_lines()))
    return 0


def cmd_demo_fourier(opt: Options) -> int:
    out_dir = Path(str(opt.require("out")))
    out_dir.mkdir(parents=True, exist_ok=True)
    wavelet = parse_wavelet(opt.wavelet[0])
    signals = demo_fourier_signals()
    spectra, scalograms = {}, {}
    for name, sig in signals:
        grid = default_scale_grid(len(sig), a0=opt.a0, n_scales=opt.n_scales)
        save_png_array(render_curve(sig.samples), out_dir / f"{name}_waveform.png")
        spectra[name] = dft_magnitude(sig)
        save_png_array(render_curve(spectra[name]), out_dir / f"{name}_spectrum.png")
        sc = cwt(sig, wavelet, grid, strategy="fft")
        scalograms[name] = sc
        save_png_array(quantize(to_grayscale(sc)), out_dir / f"{name}_scalogram.png")

    def cos_sim(a, b):
        return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))

    names = [n for n, _ in signals]
    lines = [f"wavelet: {wavelet.selector}"]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            sim = cos_sim(spectra[names[i]], spectra[names[j]])
            lines.append(f"spectrum cosine similarity {names[i]} vs {names[j]}: {sim:.6f}")
    d_ab = float(
        np.linalg.norm(scalograms[names[0]].coefficients - scalograms[names[1]].coefficients)
    )
    sig_a = signals[0][1]
    grid = default_scale_grid(len(sig_a), a0=opt.a0, n_scales=opt.n_scales)
    re_fft = cwt(sig_a, wavelet, grid, strategy="fft").coefficients
    re_direct = cwt(sig_a, wavelet, grid, strategy="direct").coefficients
    d_self = float(np.linalg.norm(re_fft - re_direct))
    lines.append(f"scalogram L2 distance {names[0]} vs {names[1]}: {d_ab:.6f}")
    lines.append(f"scalogram self-distance (fft vs direct recomputation): {d_self:.3e}")
    ratio = d_ab / d_self if d_self > 0 else float("inf")
    lines.append(f"distance ratio: {ratio:.3e}")
    text = "\n".join(lines) + "\n"
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


HANDLERS = {
    "ingest-check": cmd_ingest_check,
    "transform": cmd_transform,
    "render": cmd_render,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "demo-fourier": cmd_demo_fourier,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if not args.command:
        parser.print_help()
        return 1
    try:
        opt = Options(args)
        return HANDLERS[args.command](opt)
    except DivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScalonetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
