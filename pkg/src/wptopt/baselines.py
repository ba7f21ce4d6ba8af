"""Reference strategies the SSPA-aware optimum is compared against.

* ideal: the rectenna-only optimum sent through a transparent amplifier.
* decoupling: the same waveform fed to the SSPA as its input; what survives
  the band-pass filter is transmitted.
* smf: scaled matched filter, ``w ∝ conj(h)``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from wptopt.optimizer import (
    DegenerateChannelError,
    PowerBudgets,
    SolverConfig,
    optimize_transmit_only,
)
from wptopt.rectenna import RectennaParams, diode_coefficients, zdc_of_weights
from wptopt.signal import TimeGrid, ToneGrid, as_weights, average_power, envelope_samples
from wptopt.sspa import SspaParams, apply_to_envelope, project_to_subcarriers

INPUT_SCALINGS = ("none", "p_in")


def optimize_rectenna_only(
    h,
    p_tr_max: float,
    rect: RectennaParams,
    tones: ToneGrid | None = None,
    cfg: SolverConfig | None = None,
) -> np.ndarray:
    """Stationary point of zdc under the transmit budget alone (linear amplifier)."""
    return optimize_transmit_only(h, p_tr_max, rect, tones, cfg).weights


def scaled_matched_filter(h, power: float) -> np.ndarray:
    h = as_weights(h)
    norm2 = float(np.sum(np.abs(h) ** 2))
    if norm2 == 0.0:
        raise DegenerateChannelError("channel is identically zero")
    return np.conj(h) * np.sqrt(2.0 * power / norm2)


def eval_ideal_hpa(h, w, rect: RectennaParams) -> float:
    return zdc_of_weights(h, w, diode_coefficients(rect), rect.antenna_impedance)


def sspa_transmit(w_in, sspa: SspaParams, grid: TimeGrid) -> np.ndarray:
    """In-band weights the SSPA emits when driven by the multisine ``w_in``."""
    w_in = as_weights(w_in)
    out = apply_to_envelope(envelope_samples(w_in, None, grid), sspa)
    return project_to_subcarriers(out, w_in.shape[0])


def decoupling_transmit(
    w9,
    budgets: PowerBudgets,
    sspa: SspaParams,
    grid: TimeGrid,
    input_scaling: str = "none",
) -> tuple[np.ndarray, np.ndarray]:
    """Drive the SSPA with a rectenna-only waveform; return ``(w_in, w_tr)``.

    By default (``"none"``) the waveform drives the SSPA as designed;
    ``"p_in"`` first rescales it to the input budget.  If the in-band output
    exceeds the transmit budget, the input is scaled down until it complies.
    The input never exceeds ``p_in_max`` either way.
    """
    if input_scaling not in INPUT_SCALINGS:
        raise ValueError(f"input_scaling must be one of {INPUT_SCALINGS}")
    w9 = as_weights(w9)
    p9 = average_power(w9)
    if p9 == 0.0:
        return w9, w9.copy()
    c_max = np.sqrt(budgets.p_in_max / p9)
    if input_scaling == "none":
        c_max = min(1.0, c_max)

    def excess(c):
        return average_power(sspa_transmit(c * w9, sspa, grid)) - budgets.p_tr_max

    c = c_max
    if excess(c_max) > 0:
        c = brentq(excess, 0.0, c_max, xtol=1e-14 * c_max, rtol=1e-13)
        # brentq may land a hair above the root
        while excess(c) > 0:
            c *= 1 - 1e-12
    w_in = c * w9
    return w_in, sspa_transmit(w_in, sspa, grid)


def eval_decoupling(
    h,
    budgets: PowerBudgets,
    sspa: SspaParams,
    rect: RectennaParams,
    tones: ToneGrid | None = None,
    grid: TimeGrid | None = None,
    cfg: SolverConfig | None = None,
    w9=None,
    input_scaling: str = "none",
) -> float:
    """zdc of the rectenna-only waveform after passing through the SSPA.

    ``w9`` may be supplied to reuse an already computed rectenna-only optimum.
    """
    cfg = cfg or SolverConfig()
    h = as_weights(h)
    grid = grid or TimeGrid(cfg.oversampling * h.shape[0])
    if w9 is None:
        w9 = optimize_rectenna_only(h, budgets.p_tr_max, rect, tones, cfg)
    _, w_tr = decoupling_transmit(w9, budgets, sspa, grid, input_scaling)
    return eval_ideal_hpa(h, w_tr, rect)

