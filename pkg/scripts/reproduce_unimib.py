#!/usr/bin/env python3
"""Full-scale reproduction recipe for the UniMiB SHAR AF17 experiment.

NOT part of the test suite: it needs the real dataset, which this package
does not bundle or download.  Expected runtime is hours on a laptop CPU.

Point --mat-dir at the directory containing ``acc_data.mat`` and
``acc_labels.mat`` from the UniMiB SHAR distribution (rows are windows; the
data matrix concatenates the x, y, z axes of each 151-sample window, and
column 0 of the label matrix is the 1-based activity class).  Alternatively
pass --csv if you have already produced a signals CSV + ``.meta`` sidecar in
this package's format.

The recipe mirrors the best fixed-size-crop configuration: three axes,
Mexican-Hat scalograms at 64 scales, the ``paper-best`` architecture
(conv 32/128/128 + dense 1000), batch size 35.  A healthy run should land
at or above 90% test accuracy; larger budgets (more epochs, crop
augmentation, wider nets) push it further.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from scalonet.cli import main as cli_main
from scalonet.signal_io import Dataset, MultiAxisSample, Signal, save_dataset

SAMPLE_RATE_HZ = 50.0
WINDOW_LEN = 151


def convert_mat(mat_dir: Path, csv_path: Path) -> None:
    from scipy.io import loadmat

    data = loadmat(mat_dir / "acc_data.mat")["acc_data"]
    labels = loadmat(mat_dir / "acc_labels.mat")["acc_labels"]
    if data.shape[1] != 3 * WINDOW_LEN:
        raise SystemExit(
            f"expected {3 * WINDOW_LEN} columns (x|y|z concatenated), got {data.shape[1]}"
        )
    class_ids = sorted(set(int(v) for v in labels[:, 0]))
    remap = {c: i for i, c in enumerate(class_ids)}
    samples = []
    for i in range(data.shape[0]):
        row = data[i].astype(np.float64)
        axes = {
            "x": Signal(row[:WINDOW_LEN], SAMPLE_RATE_HZ),
            "y": Signal(row[WINDOW_LEN : 2 * WINDOW_LEN], SAMPLE_RATE_HZ),
            "z": Signal(row[2 * WINDOW_LEN :], SAMPLE_RATE_HZ),
        }
        samples.append(
            MultiAxisSample(id=f"w{i:06d}", label=remap[int(labels[i, 0])], axes=axes)
        )
    ds = Dataset(samples=samples, class_names=[f"class{c}" for c in class_ids])
    save_dataset(ds, csv_path)
    print(f"converted {len(samples)} windows, {len(class_ids)} classes -> {csv_path}")


def run(args: argparse.Namespace) -> int:
    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.csv) if args.csv else work / "unimib.csv"
    if not args.csv:
        convert_mat(Path(args.mat_dir), csv_path)

    transform_dir = work / "transformed"
    code = cli_main([
        "transform", "--dataset", str(csv_path), "--out", str(transform_dir),
        "--axes", "xyz", "--wavelet", "mexh", "--n-scales", "64",
        "--jobs", str(args.jobs),
    ])
    if code != 0:
        return code

    run_dir = work / "run"
    code = cli_main([
        "train", "--input", str(transform_dir), "--out", str(run_dir),
        "--preset", "paper-best", "--batch-size", "35",
        "--epochs", str(args.epochs), "--seed", str(args.seed),
    ])
    if code != 0:
        return code

    return cli_main([
        "eval", "--input", str(transform_dir), "--checkpoint", str(run_dir / "model.shnn"),
        "--out", str(work / "eval"),
    ])


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--mat-dir", help="directory with acc_data.mat / acc_labels.mat")
    source.add_argument("--csv", help="pre-converted signals CSV (with .meta sidecar)")
    parser.add_argument("--workdir", default="unimib-run", help="where to put artifacts")
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    return parser.parse_args(argv)


if __name__ == "__main__":
    sys.exit(run(parse_args()))
