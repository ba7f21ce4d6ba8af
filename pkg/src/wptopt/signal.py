"""Multisine waveforms on a periodic time grid.

All computations use the complex baseband envelope: sub-carrier ``n`` sits at
offset ``n * delta_f`` from the lowest tone ``f0``, and the carrier itself never
enters a power or DC quantity.  Weights are complex arrays of shape ``(N, M)``
(sub-carrier, antenna) in volts, with the 1-ohm, factor-1/2 power convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_OVERSAMPLING = 16


@dataclass(frozen=True)
class ToneGrid:
    num_subcarriers: int
    num_antennas: int = 1
    base_frequency: float = 5.18e9
    spacing: float = 312.5e3

    def __post_init__(self):
        if self.num_subcarriers < 1 or self.num_antennas < 1:
            raise ValueError("need at least one sub-carrier and one antenna")
        if not (self.spacing > 0 and self.base_frequency > 0):
            raise ValueError("base_frequency and spacing must be positive")

    @property
    def period(self) -> float:
        return 1.0 / self.spacing

    @property
    def frequencies(self) -> np.ndarray:
        """Absolute tone frequencies, 0-indexed from ``f0``."""
        return self.base_frequency + self.spacing * np.arange(self.num_subcarriers)

    def time_grid(self, oversampling: int = DEFAULT_OVERSAMPLING) -> "TimeGrid":
        return TimeGrid(oversampling * self.num_subcarriers, self.period)


@dataclass(frozen=True)
class TimeGrid:
    """``num_samples`` uniform points covering one envelope period."""

    num_samples: int
    period: float = 1.0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be positive")

    @property
    def sample_times(self) -> np.ndarray:
        return self.period * np.arange(self.num_samples) / self.num_samples

    def phase_matrix(self, num_subcarriers: int) -> np.ndarray:
        """``E[k, n] = exp(i 2 pi n k / K)``, the synthesis matrix."""
        k = np.arange(self.num_samples)[:, None]
        n = np.arange(num_subcarriers)[None, :]
        return np.exp(2j * np.pi * ((n * k) % self.num_samples) / self.num_samples)

    def check_moments(self, num_subcarriers: int) -> None:
        """Raise unless fourth-order envelope moments are exact on this grid."""
        if self.num_samples < 4 * num_subcarriers:
            raise ValueError(
                f"time grid too coarse: K={self.num_samples} < 4N={4 * num_subcarriers}"
            )


def as_weights(weights, num_antennas: int | None = None) -> np.ndarray:
    """Coerce to a finite complex ``(N, M)`` array; 1-D input is one antenna."""
    w = np.asarray(weights, dtype=complex)
    if w.ndim == 1:
        w = w[:, None]
    if w.ndim != 2:
        raise ValueError(f"weights must be 1-D or 2-D, got shape {w.shape}")
    if num_antennas is not None and w.shape[1] != num_antennas:
        raise ValueError(f"expected {num_antennas} antennas, got {w.shape[1]}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain NaN or Inf")
    return w


def envelope_samples(weights_column, tones: ToneGrid | None, grid: TimeGrid) -> np.ndarray:
    """Complex baseband envelope of one antenna's multisine on ``grid``.

    Accepts a length-N column or an ``(N, M)`` matrix; the latter returns a
    ``(K, M)`` array with one envelope per antenna.  ``tones`` is only used
    for a size check and may be None.
    """
    w = np.asarray(weights_column, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain NaN or Inf")
    n = w.shape[0]
    if tones is not None and n != tones.num_subcarriers:
        raise ValueError(f"expected {tones.num_subcarriers} sub-carriers, got {n}")
    return grid.phase_matrix(n) @ w


def average_power(weights) -> float:
    """``(1/2) * sum |w|^2`` in watts."""
    w = np.asarray(weights, dtype=complex)
    return 0.5 * float(np.sum(w.real**2 + w.imag**2))


def papr(weights_column, tones: ToneGrid | None, grid: TimeGrid) -> float:
    """Peak over mean of ``|envelope|^2`` on the grid."""
    env = envelope_samples(np.ravel(weights_column), tones, grid)
    inst = np.abs(env) ** 2
    mean = inst.mean()
    if mean == 0.0:
        raise ValueError("PAPR undefined for an all-zero waveform")
    return float(inst.max() / mean)


def _scalar_or_array(x: np.ndarray):
    return float(x) if x.ndim == 0 else x


def dbw_to_watts(x):
    return _scalar_or_array(10.0 ** (np.asarray(x, dtype=float) / 10.0))


def dbv_to_volts(x):
    return _scalar_or_array(10.0 ** (np.asarray(x, dtype=float) / 20.0))


def watts_to_dbw(p):
    return _scalar_or_array(10.0 * np.log10(np.asarray(p, dtype=float)))
