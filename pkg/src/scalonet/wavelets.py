"""Mother wavelet families and numeric admissibility checks.

Three families are shipped, all in their standard unit-energy time-domain
forms so transform magnitudes are comparable across families:

* ``DOG(m)``   -- m-th derivative of a Gaussian,
  ``psi(t) = -He_m(t) exp(-t^2/2) / sqrt(Gamma(m + 1/2))`` with He_m the
  probabilists' Hermite polynomial.  Real-valued; ``mexh`` is DOG(2).
* ``Morlet(w0)`` -- ``psi(t) = pi^(-1/4) exp(i w0 t) exp(-t^2/2)``.  Its mean
  is not exactly zero (~3e-8 at the default w0 = 6); no correction term is
  applied.
* ``Paul(m)``  -- ``psi(t) = (2^m i^m m!) / sqrt(pi (2m)!) (1 - it)^-(m+1)``.

All integrals here are trapezoidal on an EvalGrid; each family carries a
standard grid wide enough for its decay rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .errors import GridTooNarrowError, InvalidWaveletError

# Endpoint magnitude above which a grid is considered too narrow to
# integrate the wavelet (Paul(4) sits at ~3.4e-7 on its standard grid).
DECAY_ATOL = 1e-6


@dataclass(frozen=True)
class EvalGrid:
    """Uniform time grid used for the numerical-integration checks."""

    t_min: float
    t_max: float
    n_points: int

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be below t_max")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")

    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_points)


class MotherWavelet:
    """Common interface of the wavelet families."""

    #: True when evaluate() returns complex values.
    is_complex: bool = False

    def evaluate(self, t) -> np.ndarray:
        """Wavelet value at (array of) dimensionless time."""
        raise NotImplementedError

    def fourier_period(self, scale: float) -> float:
        """Equivalent Fourier period of the wavelet at the given scale."""
        raise NotImplementedError

    def standard_grid(self) -> EvalGrid:
        """Grid on which the admissibility integrals converge."""
        return EvalGrid(-8.0, 8.0, 4096)

    #: |mean| tolerance used by the admissibility suite.
    mean_atol: float = 1e-6

    @property
    def selector(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.selector!r})"


class DOG(MotherWavelet):
    """Derivative-of-Gaussian wavelet of order m; m = 2 is the Mexican Hat.

    Has exactly m vanishing moments, so low orders respond to slowly
    oscillating structure and high orders to fast structure.
    """

    is_complex = False

    def __init__(self, m: int = 2):
        if not (isinstance(m, int) and m >= 1):
            raise InvalidWaveletError(f"DOG order must be an integer >= 1, got {m!r}")
        self.m = m
        self._norm = 1.0 / math.sqrt(gamma(m + 0.5))
        self._hermite = np.zeros(m + 1)
        self._hermite[m] = 1.0

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        he = np.polynomial.hermite_e.hermeval(t, self._hermite)
        return -self._norm * he * np.exp(-t * t / 2.0)

    def fourier_period(self, scale: float) -> float:
        return 2.0 * math.pi * scale / math.sqrt(self.m + 0.5)

    @property
    def selector(self) -> str:
        return f"dog:{self.m}"


class Morlet(MotherWavelet):
    """Complex Morlet wavelet: a plane wave under a Gaussian envelope."""

    is_complex = True
    # the uncorrected form has a small non-zero mean
    mean_atol = 1e-4

    def __init__(self, omega0: float = 6.0):
        if not omega0 > 0:
            raise InvalidWaveletError(f"Morlet center frequency must be positive, got {omega0!r}")
        self.omega0 = float(omega0)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return math.pi ** -0.25 * np.exp(1j * self.omega0 * t) * np.exp(-t * t / 2.0)

    def fourier_period(self, scale: float) -> float:
        w0 = self.omega0
        return 4.0 * math.pi * scale / (w0 + math.sqrt(2.0 + w0 * w0))

    @property
    def selector(self) -> str:
        return f"morlet:{self.omega0:g}"


class Paul(MotherWavelet):
    """Complex Paul wavelet of order m; decays only polynomially."""

    is_complex = True

    def __init__(self, m: int = 4):
        if not (isinstance(m, int) and m >= 1):
            raise InvalidWaveletError(f"Paul order must be an integer >= 1, got {m!r}")
        self.m = m
        self._const = (
            2.0**m
            * 1j**m
            * math.factorial(m)
            / math.sqrt(math.pi * math.factorial(2 * m))
        )

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return self._const * (1.0 - 1j * t) ** -(self.m + 1)

    def fourier_period(self, scale: float) -> float:
        return 4.0 * math.pi * scale / (2.0 * self.m + 1.0)

    def standard_grid(self) -> EvalGrid:
        return EvalGrid(-20.0, 20.0, 8192)

    @property
    def selector(self) -> str:
        return f"paul:{self.m}"


def parse_wavelet(selector: str) -> MotherWavelet:
    """Build a wavelet from a selector string.

    Grammar: ``dog:<m>``, ``mexh`` (alias of ``dog:2``), ``morlet[:<w0>]``,
    ``paul[:<m>]``.
    """
    name, _, arg = selector.strip().lower().partition(":")
    try:
        if name == "mexh":
            if arg:
                raise InvalidWaveletError("mexh takes no parameter")
            return DOG(2)
        if name == "dog":
            if not arg:
                raise InvalidWaveletError("dog requires an order, e.g. dog:2")
            return DOG(int(arg))
        if name == "morlet":
            return Morlet(float(arg)) if arg else Morlet()
        if name == "paul":
            return Paul(int(arg)) if arg else Paul()
    except ValueError as exc:
        raise InvalidWaveletError(f"bad wavelet parameter in {selector!r}: {exc}") from None
    raise InvalidWaveletError(f"unknown wavelet selector {selector!r}")


def _check_decay(psi: np.ndarray, grid: EvalGrid, atol: float) -> bool:
    return bool(abs(psi[0]) < atol and abs(psi[-1]) < atol)


def admissibility_report(
    w: MotherWavelet,
    g: EvalGrid | None = None,
    decay_atol: float = DECAY_ATOL,
) -> dict:
    """Trapezoidal mean and squared norm of the wavelet on a grid.

    Returns ``{"mean": complex, "norm_sq": float, "decay_ok": bool}``.
    A admissible wavelet has |mean| ~ 0 and finite norm (= 1 under the
    unit-energy normalization used here).

    Raises
    ------
    GridTooNarrowError
        If the wavelet has not decayed below ``decay_atol`` at the grid ends.
    """
    if g is None:
        g = w.standard_grid()
    t = g.times()
    psi = w.evaluate(t)
    if not _check_decay(psi, g, decay_atol):
        raise GridTooNarrowError(
            f"{w.selector}: |psi| at grid ends is "
            f"({abs(psi[0]):.3g}, {abs(psi[-1]):.3g}), above {decay_atol:g}"
        )
    mean = complex(np.trapezoid(psi, t))
    norm_sq = float(np.trapezoid(np.abs(psi) ** 2, t))
    return {"mean": mean, "norm_sq": norm_sq, "decay_ok": True}


def vanishing_moments(
    w: MotherWavelet,
    up_to: int,
    g: EvalGrid | None = None,
    decay_atol: float = DECAY_ATOL,
) -> list[float]:
    """|integral of t^k psi(t) dt| for k = 0..up_to, trapezoidal."""
    if up_to < 0:
        raise ValueError("up_to must be >= 0")
    if g is None:
        g = w.standard_grid()
    t = g.times()
    psi = w.evaluate(t)
    if not _check_decay(psi, g, decay_atol):
        raise GridTooNarrowError(
            f"{w.selector}: grid does not cover the wavelet support"
        )
    return [float(abs(np.trapezoid(t**k * psi, t))) for k in range(up_to + 1)]
