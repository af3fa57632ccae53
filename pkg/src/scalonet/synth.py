"""Synthetic signals: the Fourier-vs-wavelet demo trio and benchmark sets.

The demo trio is a pair of piecewise sine signals that are near time
reversals of each other (so their magnitude spectra almost coincide) plus
their plain sum.  Fourier magnitudes cannot tell the first two apart while
their scalograms differ strongly, which is the whole motivation for the
wavelet front end.
"""

from __future__ import annotations

import numpy as np

from .signal_io import Dataset, MultiAxisSample, Signal

DEMO_NAMES = ("lo-then-hi", "hi-then-lo", "sum")


def demo_fourier_signals(n_samples: int = 400) -> list[tuple[str, Signal]]:
    """The three demo signals on x in [0, 20): sin(2x)/sin(10x) pieces.

    Sample rate is samples-per-x-unit, so angular frequencies 2 and 10
    correspond to 1/pi and 5/pi cycles per unit.
    """
    x = np.linspace(0.0, 20.0, n_samples, endpoint=False)
    rate = n_samples / 20.0
    lo, hi = np.sin(2.0 * x), np.sin(10.0 * x)
    first = np.where(x < 10.0, lo, hi)
    second = np.where(x < 10.0, hi, lo)
    both = lo + hi
    return [
        (DEMO_NAMES[0], Signal(first, rate)),
        (DEMO_NAMES[1], Signal(second, rate)),
        (DEMO_NAMES[2], Signal(both, rate)),
    ]


SYNTH_CLASSES = ("sine-lo", "sine-hi", "chirp", "noise")


def _synth_window(
    rng: np.random.Generator,
    kind: str,
    n: int,
    rate: float,
    noise_sigma: float,
) -> np.ndarray:
    t = np.arange(n) / rate
    amp = rng.uniform(0.8, 1.2)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    if kind == "sine-lo":
        base = amp * np.sin(2.0 * np.pi * 2.0 * t + phase)
    elif kind == "sine-hi":
        base = amp * np.sin(2.0 * np.pi * 8.0 * t + phase)
    elif kind == "chirp":
        # linear chirp sweeping 1 -> 10 Hz across the window
        f0, f1 = 1.0, 10.0
        span = t[-1] if n > 1 else 1.0
        base = amp * np.sin(2.0 * np.pi * (f0 * t + (f1 - f0) * t * t / (2.0 * span)) + phase)
    elif kind == "noise":
        base = rng.normal(0.0, amp, size=n)
    else:
        raise ValueError(f"no synthetic class {kind!r}")
    return base + rng.normal(0.0, noise_sigma, size=n)


def make_synthetic_dataset(
    n_per_class: int,
    classes: tuple[str, ...] = SYNTH_CLASSES,
    window_len: int = 64,
    sample_rate_hz: float = 50.0,
    noise_sigma: float = 0.3,
    seed: int = 0,
    axes: tuple[str, ...] = ("x",),
) -> Dataset:
    """Labeled single- or multi-axis windows drawn from the synthetic classes."""
    rng = np.random.default_rng(seed)
    samples = []
    for label, kind in enumerate(classes):
        for i in range(n_per_class):
            axis_map = {
                axis: Signal(
                    _synth_window(rng, kind, window_len, sample_rate_hz, noise_sigma),
                    sample_rate_hz,
                )
                for axis in axes
            }
            samples.append(
                MultiAxisSample(id=f"{kind}-{i:04d}", label=label, axes=axis_map)
            )
    return Dataset(samples=samples, class_names=list(classes))
