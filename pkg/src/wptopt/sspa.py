"""Rapp solid-state power amplifier (AM/AM only).

The forward curve is ``G a / (1 + (G a / A_s)^(2 beta))^(1/(2 beta))``.  The
optimizer works with the inverse: given the amplitude the amplifier must
deliver, how large must its input be.  The inverse only exists below ``A_s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wptopt.signal import TimeGrid, ToneGrid, as_weights, envelope_samples

# Amplitudes at or above A_s * (1 - DOMAIN_MARGIN) are out of reach for the solver.
DOMAIN_MARGIN = 1e-9


class SspaDomainError(ValueError):
    """Requested output amplitude is at or beyond the saturation voltage."""


@dataclass(frozen=True)
class SspaParams:
    gain: float = 1.0
    saturation: float = 1.0
    smoothness: float = 1.0

    def __post_init__(self):
        if not (self.gain > 0 and self.saturation > 0 and self.smoothness > 0):
            raise ValueError("SSPA gain, saturation and smoothness must be positive")

    @property
    def saturation_power(self) -> float:
        """Power of a constant envelope at ``A_s`` (1-ohm, factor-1/2 convention)."""
        return 0.5 * self.saturation**2


def amam_forward(a, p: SspaParams):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("input amplitude must be non-negative")
    x = p.gain * a / p.saturation
    two_b = 2.0 * p.smoothness
    # past saturation write it as A_s (1 + x^-2b)^(-1/2b): no overflow, never above A_s
    with np.errstate(over="ignore", divide="ignore"):
        small = p.gain * a * (1.0 + x**two_b) ** (-1.0 / two_b)
        large = p.saturation * (1.0 + np.where(x > 0, x, 1.0) ** -two_b) ** (-1.0 / two_b)
    out = np.where(x <= 1.0, small, large)
    return float(out) if out.ndim == 0 else out


def amam_inverse(a_out, p: SspaParams):
    a = np.asarray(a_out, dtype=float)
    if np.any(a < 0):
        raise ValueError("output amplitude must be non-negative")
    if np.any(a >= p.saturation):
        raise SspaDomainError(
            f"output amplitude {float(np.max(a)):.6g} V not below saturation {p.saturation:.6g} V"
        )
    r = (a / p.saturation) ** (2.0 * p.smoothness)
    out = (a / p.gain) * (1.0 - r) ** (-1.0 / (2.0 * p.smoothness))
    return float(out) if out.ndim == 0 else out


def apply_to_envelope(samples, p: SspaParams) -> np.ndarray:
    """Compress each sample's amplitude, keeping its phase."""
    x = np.asarray(samples, dtype=complex)
    amp = np.abs(x)
    out_amp = amam_forward(amp, p)
    phase = np.where(amp > 0, x / np.where(amp > 0, amp, 1.0), 0.0)
    return out_amp * phase


def project_to_subcarriers(samples, num_subcarriers: int) -> np.ndarray:
    """In-band DFT coefficients (harmonics ``0..N-1``) of a periodic envelope.

    Works along axis 0, so a ``(K, M)`` array gives ``(N, M)`` weights.
    """
    x = np.asarray(samples, dtype=complex)
    k = x.shape[0]
    if k < 2 * num_subcarriers:
        raise ValueError(
            f"need at least 2N={2 * num_subcarriers} samples per period, got {k}"
        )
    return np.fft.fft(x, axis=0)[:num_subcarriers] / k


def input_power_density(q, p: SspaParams, derivatives: int = 0):
    """Half the squared inverse amplitude as a function of squared output amplitude.

    With ``q = a_out^2`` and ``r = (q / A_s^2)^beta`` this is
    ``psi(q) = q / (2 G^2) * (1 - r)^(-1/beta)``.  It is smooth at ``q = 0``
    (no ``1/a`` terms), which is why the solver differentiates it instead of
    the inverse amplitude.  Returns ``psi`` or ``(psi, psi', psi'')``.
    Points with ``q`` outside the reachable set give ``inf``.
    """
    q = np.asarray(q, dtype=float)
    beta = p.smoothness
    inv2g2 = 0.5 / p.gain**2
    a2 = p.saturation**2
    u = q / a2
    inside = u < (1.0 - DOMAIN_MARGIN) ** 2
    all_inside = bool(inside.all())
    if not all_inside:
        u = np.where(inside, np.maximum(u, 0.0), 0.0)
    if beta == 1.0:
        inv = 1.0 / (1.0 - u)
        psi = inv2g2 * q * inv
        if derivatives:
            d1 = inv2g2 * inv * inv
            d2 = (2.0 * inv2g2 / a2) * inv * inv * inv
    else:
        one_minus = 1.0 - u**beta
        psi = inv2g2 * q * one_minus ** (-1.0 / beta)
        if derivatives:
            d1 = inv2g2 * one_minus ** (-(1.0 + beta) / beta)
            with np.errstate(divide="ignore"):
                r_over_q = np.where(u > 0, u ** (beta - 1.0), 0.0) / a2
            d2 = inv2g2 * (1.0 + beta) * r_over_q * one_minus ** (-(1.0 + 2.0 * beta) / beta)
    if not all_inside:
        psi = np.where(inside, psi, np.inf)
        if derivatives:
            d1 = np.where(inside, d1, np.inf)
            d2 = np.where(inside, d2, np.inf)
    if derivatives == 0:
        return psi
    return psi, d1, d2


def required_input_power(w_tr, p: SspaParams, tones: ToneGrid | None, grid: TimeGrid) -> float:
    """Input power that makes the SSPA emit exactly the transmit envelope.

    Sum over antennas of the period mean of ``amam_inverse(|env|)^2 / 2``.
    Raises :class:`SspaDomainError` when any envelope sample reaches ``A_s``.
    """
    w = as_weights(w_tr)
    env = envelope_samples(w, tones, grid)
    a_in = amam_inverse(np.abs(env), p)
    return 0.5 * float(np.sum(np.mean(np.asarray(a_in) ** 2, axis=0)))
