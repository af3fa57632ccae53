"""Time-frequency and time-scale transforms.

The continuous wavelet transform here is the discretized correlation

    W[a, b] = sum_t S[t] * psi((t - b) / a) / sqrt(a)

over integer translations b, with scales measured in samples.  Two strategies
compute the same quantity: ``direct`` evaluates the dot product per (a, b),
``fft`` runs the equivalent circular convolution on a zero-padded buffer.
Both sample the daughter wavelet at the same integer offsets, so they agree
to floating-point roundoff; the direct path doubles as the correctness
oracle for the fast one.

Boundary handling: ``zero`` (default) pads to the next power of two at or
above twice the signal length before wrapping; ``periodic`` wraps on the
signal length itself, which makes the transform exactly covariant under
circular shifts of the input.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvalidScaleError,
    InvalidWindowError,
    BasisNotOrthogonalError,
    RawFormatError,
    ScaleTooLargeError,
)
from .signal_io import Signal
from .wavelets import MotherWavelet

CWTS_MAGIC = b"CWTS"
CWTS_VERSION = 1


@dataclass(frozen=True)
class ScaleGrid:
    """Geometric grid of analysis scales ``a_j = a0 * 2**(j * dj)``."""

    a0: float
    dj: float
    n_scales: int
    scales: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.a0 > 0:
            raise InvalidScaleError(f"a0 must be positive, got {self.a0}")
        if not self.dj > 0:
            raise InvalidScaleError(f"dj must be positive, got {self.dj}")
        if self.n_scales < 1:
            raise InvalidScaleError(f"n_scales must be >= 1, got {self.n_scales}")
        j = np.arange(self.n_scales)
        object.__setattr__(self, "scales", self.a0 * 2.0 ** (j * self.dj))

    def __len__(self) -> int:
        return self.n_scales


def build_scale_grid(a0: float, dj: float, n_scales: int) -> ScaleGrid:
    return ScaleGrid(a0=a0, dj=dj, n_scales=n_scales)


def default_scale_grid(
    n_samples: int,
    a0: float = 2.0,
    n_scales: int | None = None,
    dj: float = 0.25,
) -> ScaleGrid:
    """Grid from a0 up to half the window length.

    With ``n_scales`` given, the log2 spacing is solved so the last scale
    lands on ``n_samples / 2``; otherwise the spacing ``dj`` fixes the count.
    """
    a_max = n_samples / 2.0
    if a_max <= a0:
        return ScaleGrid(a0=a0, dj=dj, n_scales=1)
    span = np.log2(a_max / a0)
    if n_scales is None:
        return ScaleGrid(a0=a0, dj=dj, n_scales=int(np.floor(span / dj)) + 1)
    if n_scales == 1:
        return ScaleGrid(a0=a0, dj=dj, n_scales=1)
    return ScaleGrid(a0=a0, dj=float(span / (n_scales - 1)), n_scales=n_scales)


@dataclass(frozen=True)
class Scalogram:
    """Coefficient matrix of one CWT: rows are scales, columns translations.

    For real wavelets the entries are the signed coefficients; for complex
    wavelets they are the modulus.
    """

    coefficients: np.ndarray
    grid: ScaleGrid
    sample_rate_hz: float
    wavelet: str

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", c)
        if c.ndim != 2 or c.shape[0] != self.grid.n_scales:
            raise ValueError(f"coefficient shape {c.shape} inconsistent with grid")
        if not np.all(np.isfinite(c)):
            raise ValueError("scalogram has non-finite entries")

    @property
    def n_scales(self) -> int:
        return self.coefficients.shape[0]

    @property
    def n_times(self) -> int:
        return self.coefficients.shape[1]


@dataclass(frozen=True)
class Spectrogram:
    """Magnitudes of a short-time Fourier transform, freqs x hops."""

    magnitudes: np.ndarray
    window_len: int
    hop: int

    def __post_init__(self):
        m = np.asarray(self.magnitudes, dtype=np.float64)
        object.__setattr__(self, "magnitudes", m)
        if np.any(m < 0):
            raise ValueError("spectrogram magnitudes must be non-negative")


def _padded_length(n: int, boundary: str) -> int:
    if boundary == "periodic":
        return n
    if boundary == "zero":
        return int(2 ** np.ceil(np.log2(2 * n)))
    raise ValueError(f"unknown boundary rule {boundary!r}")


def _lags(m: int) -> np.ndarray:
    # lag of buffer index j: j for j <= m//2, j - m beyond (wavelet centered at 0)
    idx = np.arange(m)
    return np.where(idx <= m // 2, idx, idx - m)


def cwt(
    s: Signal,
    w: MotherWavelet,
    g: ScaleGrid,
    strategy: str = "fft",
    boundary: str = "zero",
) -> Scalogram:
    """Continuous wavelet transform of one signal window.

    Parameters
    ----------
    s : Signal
        Input window, length >= 2.
    w : MotherWavelet
        Mother wavelet; complex families yield modulus coefficients.
    g : ScaleGrid
        Scales in samples.  A scale above half the (padded) transform
        length raises ScaleTooLargeError.
    strategy : {"fft", "direct"}
    boundary : {"zero", "periodic"}
    """
    x = s.samples
    n = len(x)
    if n < 2:
        raise ValueError("signal must have at least 2 samples")
    m = _padded_length(n, boundary)
    if np.max(g.scales) > m / 2:
        raise ScaleTooLargeError(
            f"largest scale {np.max(g.scales):g} exceeds half the padded length {m}"
        )
    if strategy == "fft":
        coeffs = _cwt_fft(x, w, g, m)
    elif strategy == "direct":
        coeffs = _cwt_direct(x, w, g, m)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    out = np.abs(coeffs) if w.is_complex else coeffs.real
    return Scalogram(
        coefficients=out, grid=g, sample_rate_hz=s.sample_rate_hz, wavelet=w.selector
    )


def _daughter(w: MotherWavelet, lags: np.ndarray, scale: float) -> np.ndarray:
    return w.evaluate(lags / scale) / np.sqrt(scale)


def _cwt_fft(x: np.ndarray, w: MotherWavelet, g: ScaleGrid, m: int) -> np.ndarray:
    n = len(x)
    lags = _lags(m)
    xf = np.fft.fft(x, n=m)
    rows = np.empty((g.n_scales, n), dtype=np.complex128)
    for j, a in enumerate(g.scales):
        # kernel with negated lags turns the correlation into a circular convolution
        kernel = _daughter(w, -lags, a)
        rows[j] = np.fft.ifft(xf * np.fft.fft(kernel))[:n]
    return rows


def _cwt_direct(x: np.ndarray, w: MotherWavelet, g: ScaleGrid, m: int) -> np.ndarray:
    n = len(x)
    lags = _lags(m)
    # idx[b, t] = (t - b) mod m; row b gathers the daughter samples for shift b
    t_idx = np.arange(n)[None, :]
    b_idx = np.arange(n)[:, None]
    idx = (t_idx - b_idx) % m
    rows = np.empty((g.n_scales, n), dtype=np.complex128)
    for j, a in enumerate(g.scales):
        q = np.zeros(m, dtype=np.complex128)
        q[lags % m] = _daughter(w, lags, a)
        rows[j] = q[idx] @ x
    return rows


def best_scale_for_frequency(w: MotherWavelet, g: ScaleGrid, freq_hz: float, sample_rate_hz: float) -> int:
    """Index of the grid scale whose equivalent Fourier period matches 1/f."""
    period_samples = sample_rate_hz / freq_hz
    periods = np.array([w.fourier_period(a) for a in g.scales])
    return int(np.argmin(np.abs(np.log(periods / period_samples))))


def stft(s: Signal, window_len: int, hop: int | None = None, window: str = "hann") -> Spectrogram:
    """Short-time Fourier transform magnitudes.

    Frames start at 0, hop, 2*hop, ... while they fit in the signal;
    ``n_freqs = window_len // 2 + 1``.  Hop defaults to half the window.
    """
    x = s.samples
    n = len(x)
    if hop is None:
        hop = window_len // 2
    if not 0 < hop <= window_len <= n:
        raise InvalidWindowError(
            f"need 0 < hop <= window_len <= {n}, got hop={hop}, window_len={window_len}"
        )
    if window == "hann":
        win = np.hanning(window_len)
    elif window == "rect":
        win = np.ones(window_len)
    else:
        raise InvalidWindowError(f"unknown window {window!r}")
    starts = range(0, n - window_len + 1, hop)
    cols = [np.abs(np.fft.rfft(x[b : b + window_len] * win)) for b in starts]
    return Spectrogram(
        magnitudes=np.stack(cols, axis=1), window_len=window_len, hop=hop
    )


def dft_magnitude(s: Signal) -> np.ndarray:
    """Magnitude spectrum of the discrete Fourier transform, bins 0..N//2."""
    if len(s) < 2:
        raise ValueError("signal must have at least 2 samples")
    return np.abs(np.fft.rfft(s.samples))


def fourier_series_coeffs(s: Signal, n_max: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Trapezoidal Fourier series coefficients of a window read as [-pi, pi].

    Returns ``(a0, a_n, b_n)`` with ``a_n[k]`` the cosine coefficient of
    order k+1 and likewise for ``b_n``.
    """
    x = s.samples
    t = np.linspace(-np.pi, np.pi, len(x))
    a0 = float(np.trapezoid(x, t) / np.pi)
    orders = np.arange(1, n_max + 1)
    a_n = np.array([np.trapezoid(x * np.cos(k * t), t) / np.pi for k in orders])
    b_n = np.array([np.trapezoid(x * np.sin(k * t), t) / np.pi for k in orders])
    return a0, a_n, b_n


def generalized_fourier_coeffs(
    s: Signal, basis: list[Signal], rtol: float = 1e-6
) -> np.ndarray:
    """Projection coefficients of the signal onto an orthogonal basis.

    ``C_n = <S, phi_n> / <phi_n, phi_n>`` with trapezoidal inner products on
    the shared sample grid.  The basis is checked for pairwise orthogonality
    (relative tolerance ``rtol``) first.
    """
    x = s.samples
    funcs = [b.samples for b in basis]
    for f in funcs:
        if len(f) != len(x):
            raise ValueError("basis functions must share the signal's grid")

    def inner(u, v):
        return float(np.trapezoid(u * v))

    norms = np.array([inner(f, f) for f in funcs])
    for i, nrm in enumerate(norms):
        if nrm == 0.0:
            raise BasisNotOrthogonalError(f"basis function {i} is identically zero")
    for i in range(len(funcs)):
        for j in range(i + 1, len(funcs)):
            cross = inner(funcs[i], funcs[j])
            if abs(cross) > rtol * np.sqrt(norms[i] * norms[j]):
                raise BasisNotOrthogonalError(
                    f"basis functions {i} and {j} are not orthogonal "
                    f"(<phi_i, phi_j> = {cross:.3g})"
                )
    return np.array([inner(x, f) / nrm for f, nrm in zip(funcs, norms)])


def write_cwts(path: str | Path, coefficients: np.ndarray) -> None:
    """Write a stack of coefficient planes in the CWTS raw format.

    Layout: magic ``CWTS``, little-endian u32 {version, n_scales, n_times,
    n_channels}, then float32 little-endian values in (channel, scale, time)
    row-major order.  A 2-D array is treated as a single channel.
    """
    c = np.asarray(coefficients)
    if c.ndim == 2:
        c = c[None, :, :]
    if c.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D array, got shape {c.shape}")
    n_channels, n_scales, n_times = c.shape
    header = CWTS_MAGIC + struct.pack("<4I", CWTS_VERSION, n_scales, n_times, n_channels)
    Path(path).write_bytes(header + np.ascontiguousarray(c, dtype="<f4").tobytes())


def read_cwts(path: str | Path) -> np.ndarray:
    """Read a CWTS file back into a float32 array of shape (C, S, T)."""
    blob = Path(path).read_bytes()
    if len(blob) < 20 or blob[:4] != CWTS_MAGIC:
        raise RawFormatError(f"{path}: not a CWTS file")
    version, n_scales, n_times, n_channels = struct.unpack("<4I", blob[4:20])
    if version != CWTS_VERSION:
        raise RawFormatError(f"{path}: unsupported CWTS version {version}")
    expected = 20 + 4 * n_scales * n_times * n_channels
    if len(blob) != expected:
        raise RawFormatError(
            f"{path}: size {len(blob)} does not match header (expected {expected})"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=20)
    return data.reshape(n_channels, n_scales, n_times).copy()
