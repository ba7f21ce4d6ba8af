"""Truncated diode model of the rectenna and the harvested-DC scaling term.

The DC figure of merit is

    zdc = k2 R E[y^2] + k4 R^2 E[y^4]
        = k2 R / 2 * sum_n |s_n|^2 + 3 k4 R^2 / 8 * sum_{n0+n1=n2+n3} s_n0 s_n1 s*_n2 s*_n3

where ``s_n = sum_m h_nm w_nm`` is the received complex amplitude of tone n.
The quartic sum equals the period mean of ``|envelope|^4``, which gives an
independent time-domain route used as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from wptopt.signal import TimeGrid, ToneGrid, as_weights


@dataclass(frozen=True)
class RectennaParams:
    saturation_current: float = 5e-6
    ideality: float = 1.05
    thermal_voltage: float = 25.86e-3
    antenna_impedance: float = 50.0

    def __post_init__(self):
        if self.saturation_current < 0:
            raise ValueError("saturation current must be non-negative")
        if not (self.ideality > 0 and self.thermal_voltage > 0 and self.antenna_impedance > 0):
            raise ValueError("ideality, thermal voltage and impedance must be positive")


@dataclass(frozen=True)
class DiodeCoefficients:
    k2: float
    k4: float


def diode_coefficients(p: RectennaParams) -> DiodeCoefficients:
    nv = p.ideality * p.thermal_voltage
    k = [p.saturation_current / (factorial(i) * nv**i) for i in (2, 4)]
    return DiodeCoefficients(*k)


def effective_weights(h, w_tr) -> np.ndarray:
    """Per-tone received amplitude ``s_n = sum_m h_nm w_nm``."""
    h = as_weights(h)
    w = as_weights(w_tr)
    if h.shape != w.shape:
        raise ValueError(f"channel shape {h.shape} does not match weights {w.shape}")
    return np.sum(h * w, axis=1)


def _quartic_tuples(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """All ``(n0, n1, n2, n3)`` in ``[0, n)^4`` with ``n0 + n1 = n2 + n3``."""
    n1, n2, n3 = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    n0 = n2 + n3 - n1
    keep = (n0 >= 0) & (n0 < n)
    return n0[keep], n1[keep], n2[keep], n3[keep]


def quartic_moment(s) -> float:
    s = np.asarray(s, dtype=complex)
    n0, n1, n2, n3 = _quartic_tuples(s.shape[0])
    total = np.sum(s[n0] * s[n1] * np.conj(s[n2]) * np.conj(s[n3]))
    return float(total.real)


def zdc(s, k: DiodeCoefficients, r_ant: float) -> float:
    """Scaling term from received tone amplitudes, frequency-domain form."""
    s = np.asarray(s, dtype=complex)
    quad = float(np.sum(s.real**2 + s.imag**2))
    return 0.5 * k.k2 * r_ant * quad + 0.375 * k.k4 * r_ant**2 * quartic_moment(s)


def zdc_time_oracle(s, k: DiodeCoefficients, r_ant: float, tones: ToneGrid | None, grid: TimeGrid) -> float:
    """Same quantity from period averages of the received envelope.

    ``E[y^2] = mean|env|^2 / 2`` and ``E[y^4] = 3/8 mean|env|^4`` for a real
    passband signal whose carrier is far above the envelope bandwidth.
    """
    s = np.asarray(s, dtype=complex)
    grid.check_moments(s.shape[0])
    if tones is not None and s.shape[0] != tones.num_subcarriers:
        raise ValueError(f"expected {tones.num_subcarriers} tones, got {s.shape[0]}")
    k_idx = np.arange(grid.num_samples)
    t = k_idx / grid.num_samples
    env = np.zeros(grid.num_samples, dtype=complex)
    # explicit tone-by-tone synthesis; deliberately not the shared phase matrix
    for n, sn in enumerate(s):
        env += sn * np.exp(2j * np.pi * n * t)
    inst = np.abs(env) ** 2
    return 0.5 * k.k2 * r_ant * float(inst.mean()) + 0.375 * k.k4 * r_ant**2 * float(np.mean(inst**2))


def zdc_of_weights(h, w_tr, k: DiodeCoefficients, r_ant: float) -> float:
    return zdc(effective_weights(h, w_tr), k, r_ant)


def zdc_gradient(h, w_tr, k: DiodeCoefficients, r_ant: float) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of zdc w.r.t. real and imaginary weight parts.

    For a real function of ``s`` the complex gradient ``d/dRe + i d/dIm`` is
    ``2 df/ds*``; through ``s_n = sum_m h_nm w_nm`` this picks up ``conj(h)``:

        grad_nm = conj(h_nm) * (k2 R s_n + 3/2 k4 R^2 T_n),
        T_n = sum_{n0 + n1 = n + n3} s_n0 s_n1 s*_n3.
    """
    h = as_weights(h)
    s = effective_weights(h, w_tr)
    n = s.shape[0]
    n0, n1, n2, n3 = _quartic_tuples(n)
    # bin each tuple's s_n0 s_n1 s*_n3 on its conjugated index n2
    t = np.zeros(n, dtype=complex)
    np.add.at(t, n2, s[n0] * s[n1] * np.conj(s[n3]))
    per_tone = k.k2 * r_ant * s + 1.5 * k.k4 * r_ant**2 * t
    g = np.conj(h) * per_tone[:, None]
    return g.real.copy(), g.imag.copy()
