import numpy as np
import pytest

from scalonet.signal_io import Dataset, MultiAxisSample, Signal, save_dataset


def make_sample(sid: str, label: int, axes_values: dict, rate: float = 50.0) -> MultiAxisSample:
    return MultiAxisSample(
        id=sid,
        label=label,
        axes={a: Signal(np.asarray(v, dtype=float), rate) for a, v in axes_values.items()},
    )


@pytest.fixture
def tiny_dataset() -> Dataset:
    rng = np.random.default_rng(7)
    samples = []
    for i in range(12):
        label = i % 2
        t = np.arange(32) / 50.0
        base = np.sin(2 * np.pi * (2.0 if label == 0 else 8.0) * t)
        samples.append(
            make_sample(
                f"s{i:03d}",
                label,
                {
                    "x": base + 0.05 * rng.normal(size=32),
                    "y": base + 0.05 * rng.normal(size=32),
                    "z": 0.1 * rng.normal(size=32),
                },
            )
        )
    return Dataset(samples=samples, class_names=["slow", "fast"])


@pytest.fixture
def dataset_csv(tmp_path, tiny_dataset):
    path = tmp_path / "signals.csv"
    save_dataset(tiny_dataset, path)
    return path


def jitter_biases(net, seed: int = 0, sigma: float = 0.05) -> None:
    """Move biases off exact zero so no ReLU pre-activation sits on its kink
    (finite differences are undefined exactly at the kink)."""
    rng = np.random.default_rng(seed)
    for name, value, _ in net.params():
        if name.endswith(".b"):
            value += rng.normal(0.0, sigma, size=value.shape)
