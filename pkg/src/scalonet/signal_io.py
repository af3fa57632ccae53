"""Loading, validation, and splitting of labeled multi-axis signal windows.

File format: a UTF-8 CSV with header ``id,label,axis,s0,s1,...,s{L-1}`` where
``axis`` is one of ``x,y,z,mag`` and every row carries the same number of
samples, plus a plain-text ``key=value`` sidecar holding ``sample_rate_hz``,
``class_names`` (semicolon-separated) and ``window_len``.  Decimal separator
is '.' only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDatasetError,
    InconsistentLengthError,
    InvalidFractionError,
    InvalidFramingError,
    LabelRangeError,
    MalformedRowError,
    MissingAxisError,
    UnknownAxisError,
    ZeroEnergyError,
)

AXIS_TAGS = ("x", "y", "z", "mag")


@dataclass(frozen=True)
class Signal:
    """One fixed-length real-valued window of a single axis."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class MultiAxisSample:
    """One labeled window with its per-axis signals."""

    id: str
    label: int
    axes: dict[str, Signal]

    def __post_init__(self):
        if not self.axes:
            raise ValueError(f"sample {self.id!r} has no axes")
        lengths = {len(s) for s in self.axes.values()}
        rates = {s.sample_rate_hz for s in self.axes.values()}
        if len(lengths) != 1:
            raise InconsistentLengthError(
                f"sample {self.id!r}: axes disagree on window length {sorted(lengths)}"
            )
        if len(rates) != 1:
            raise ValueError(f"sample {self.id!r}: axes disagree on sample rate")
        for tag in self.axes:
            if tag not in AXIS_TAGS:
                raise UnknownAxisError(f"sample {self.id!r}: unknown axis tag {tag!r}")
        if "mag" in self.axes and np.any(self.axes["mag"].samples < 0):
            raise ValueError(f"sample {self.id!r}: magnitude axis has negative values")

    @property
    def window_len(self) -> int:
        return len(next(iter(self.axes.values())))

    @property
    def sample_rate_hz(self) -> float:
        return next(iter(self.axes.values())).sample_rate_hz


@dataclass(frozen=True)
class Dataset:
    """A list of labeled samples plus the class-name table they index."""

    samples: list[MultiAxisSample]
    class_names: list[str]

    def __post_init__(self):
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids are not unique")
        k = len(self.class_names)
        for s in self.samples:
            if not 0 <= s.label < k:
                raise LabelRangeError(
                    f"sample {s.id!r}: label {s.label} outside 0..{k - 1}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic shuffled train/test partition parameters."""

    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidFractionError(
                f"train_fraction must lie in (0,1), got {self.train_fraction}"
            )


@dataclass
class DatasetSchema:
    """Sidecar metadata: window geometry and class table for a signals file."""

    sample_rate_hz: float = 50.0
    window_len: int = 151
    class_names: list[str] = field(default_factory=list)


def read_schema(path: str | Path) -> DatasetSchema:
    """Parse a plain-text ``key=value`` sidecar file."""
    schema = DatasetSchema()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MalformedRowError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "sample_rate_hz":
            schema.sample_rate_hz = float(value)
        elif key == "window_len":
            schema.window_len = int(value)
        elif key == "class_names":
            schema.class_names = [c for c in value.split(";") if c]
        else:
            raise MalformedRowError(f"{path}:{lineno}: unknown schema key {key!r}")
    return schema


def write_schema(schema: DatasetSchema, path: str | Path) -> None:
    lines = [
        f"sample_rate_hz={schema.sample_rate_hz!r}",
        f"window_len={schema.window_len}",
        "class_names=" + ";".join(schema.class_names),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sidecar_path(csv_path: str | Path) -> Path:
    return Path(str(csv_path) + ".meta")


def load_dataset(
    path: str | Path,
    schema: DatasetSchema | None = None,
    strict: bool = True,
) -> Dataset:
    """Load a signals CSV into a Dataset.

    Rows sharing an ``id`` become the axes of one sample.  With ``strict``
    set, samples missing any of the x/y/z axes are rejected; otherwise they
    are kept with whatever axes they have.  When ``schema`` is None the
    sidecar file ``<path>.meta`` is read.

    Raises
    ------
    MalformedRowError, InconsistentLengthError, UnknownAxisError,
    LabelRangeError, EmptyDatasetError, MissingAxisError
    """
    path = Path(path)
    if schema is None:
        schema = read_schema(sidecar_path(path))

    lines = path.read_text(encoding="utf-8").splitlines()
    rows = [ln for ln in lines if ln.strip()]
    if rows and rows[0].startswith("id,label,axis"):
        rows = rows[1:]
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")

    window_len: int | None = None
    by_id: dict[str, dict[str, np.ndarray]] = {}
    labels: dict[str, int] = {}
    order: list[str] = []
    for lineno, row in enumerate(rows, 1):
        parts = row.split(",")
        if len(parts) < 4:
            raise MalformedRowError(f"{path}:{lineno}: expected at least 4 fields")
        sid, label_s, axis = parts[0], parts[1], parts[2]
        if axis not in AXIS_TAGS:
            raise UnknownAxisError(f"{path}:{lineno}: unknown axis tag {axis!r}")
        try:
            label = int(label_s)
            values = np.array([float(v) for v in parts[3:]], dtype=np.float64)
        except ValueError as exc:
            raise MalformedRowError(f"{path}:{lineno}: {exc}") from None
        if window_len is None:
            window_len = len(values)
        elif len(values) != window_len:
            raise InconsistentLengthError(
                f"{path}:{lineno}: row has {len(values)} samples, expected {window_len}"
            )
        if not 0 <= label < len(schema.class_names):
            raise LabelRangeError(
                f"{path}:{lineno}: label {label} outside 0..{len(schema.class_names) - 1}"
            )
        if sid not in by_id:
            by_id[sid] = {}
            labels[sid] = label
            order.append(sid)
        elif labels[sid] != label:
            raise MalformedRowError(f"{path}:{lineno}: id {sid!r} carries two labels")
        if axis in by_id[sid]:
            raise MalformedRowError(f"{path}:{lineno}: duplicate axis {axis!r} for id {sid!r}")
        by_id[sid][axis] = values

    samples = []
    for sid in order:
        axes = by_id[sid]
        missing = [a for a in ("x", "y", "z") if a not in axes]
        if missing and strict:
            raise MissingAxisError(f"{path}: sample {sid!r} is missing axes {missing}")
        samples.append(
            MultiAxisSample(
                id=sid,
                label=labels[sid],
                axes={a: Signal(v, schema.sample_rate_hz) for a, v in axes.items()},
            )
        )
    return Dataset(samples=samples, class_names=list(schema.class_names))


def save_dataset(ds: Dataset, path: str | Path, write_sidecar: bool = True) -> None:
    """Write a Dataset back to the CSV window format (lossless via repr)."""
    path = Path(path)
    if not ds.samples:
        raise EmptyDatasetError("refusing to write a dataset with no samples")
    window_len = ds.samples[0].window_len
    header = "id,label,axis," + ",".join(f"s{i}" for i in range(window_len))
    lines = [header]
    for s in ds.samples:
        for axis in AXIS_TAGS:
            if axis in s.axes:
                values = ",".join(repr(float(v)) for v in s.axes[axis].samples)
                lines.append(f"{s.id},{s.label},{axis},{values}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if write_sidecar:
        schema = DatasetSchema(
            sample_rate_hz=ds.samples[0].sample_rate_hz,
            window_len=window_len,
            class_names=list(ds.class_names),
        )
        write_schema(schema, sidecar_path(path))


def magnitude(sample: MultiAxisSample) -> Signal:
    """Pointwise sqrt(x^2+y^2+z^2) of the three spatial axes."""
    missing = [a for a in ("x", "y", "z") if a not in sample.axes]
    if missing:
        raise MissingAxisError(f"sample {sample.id!r}: missing axes {missing}")
    x = sample.axes["x"].samples
    y = sample.axes["y"].samples
    z = sample.axes["z"].samples
    return Signal(np.sqrt(x * x + y * y + z * z), sample.sample_rate_hz)


def ensure_magnitude(sample: MultiAxisSample) -> MultiAxisSample:
    """Return a sample that has a ``mag`` axis, computing it if absent."""
    if "mag" in sample.axes:
        return sample
    return replace(sample, axes={**sample.axes, "mag": magnitude(sample)})


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled index partition.

    Shuffling is a Fisher-Yates permutation drawn from a NumPy PCG64
    generator seeded with ``spec.seed``; train takes the first
    ``floor(train_fraction * n)`` indices of the permuted order.
    """
    if n < 1:
        raise EmptyDatasetError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    n_train = int(np.floor(spec.train_fraction * n))
    return perm[:n_train], perm[n_train:]


def split_train_test(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled partition into train/test datasets."""
    train_idx, test_idx = split_indices(len(ds.samples), spec)
    return (
        Dataset(samples=[ds.samples[i] for i in train_idx], class_names=list(ds.class_names)),
        Dataset(samples=[ds.samples[i] for i in test_idx], class_names=list(ds.class_names)),
    )


def energy(s: Signal) -> float:
    """Total signal energy, the sum of squared sample values."""
    return float(np.sum(s.samples * s.samples))


def energy_entropy(s: Signal, n_frames: int) -> float:
    """Entropy of the per-frame energy distribution.

    The window is divided into ``n_frames`` equal frames (trailing remainder
    folded into the last frame); with ``p_n = E_n / E`` the result is
    ``-sum(p_n * ln p_n)`` using the convention ``0 * ln 0 = 0``.
    """
    n = len(s)
    if not 1 <= n_frames <= n:
        raise InvalidFramingError(f"n_frames must lie in 1..{n}, got {n_frames}")
    base = n // n_frames
    edges = [i * base for i in range(n_frames)] + [n]
    frame_energy = np.array(
        [np.sum(s.samples[a:b] ** 2) for a, b in zip(edges[:-1], edges[1:])]
    )
    total = frame_energy.sum()
    if total == 0.0:
        raise ZeroEnergyError("signal has zero total energy")
    p = frame_energy / total
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))
