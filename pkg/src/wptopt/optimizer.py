"""SCP + log-barrier + Newton solver for the transmit waveform.

The variable is the transmit-referred weight matrix, stacked as a real vector
``x = [Re W.ravel(), Im W.ravel()]``.  Each outer (SCP) round linearizes zdc at
the current point and maximizes the linear model over the convex feasible set

    f1(x) = (1/2) |x|^2 - P_tr                     <= 0
    f2(x) = sum_m mean_k psi(|env_m(t_k)|^2) - P_in <= 0

where ``psi`` is half the squared inverse-SSPA amplitude.  The inner problem
is solved by the barrier method, warm-started at the previous round's point,
with a damped Newton method at each barrier parameter.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from wptopt.rectenna import DiodeCoefficients, RectennaParams, diode_coefficients, zdc_gradient, zdc_of_weights
from wptopt.signal import TimeGrid, ToneGrid, as_weights, envelope_samples
from wptopt.sspa import (
    DOMAIN_MARGIN,
    SspaParams,
    amam_inverse,
    input_power_density,
    project_to_subcarriers,
)

log = logging.getLogger(__name__)

ARMIJO = 0.01
HESSIAN_FLOOR = 1e-12


class NoProgressError(RuntimeError):
    """Newton line search shrank the step to nothing before converging."""


class DegenerateChannelError(ValueError):
    """The channel is identically zero, so no waveform harvests anything."""


@dataclass(frozen=True)
class PowerBudgets:
    p_in_max: float
    p_tr_max: float

    def __post_init__(self):
        for name in ("p_in_max", "p_tr_max"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class SolverConfig:
    scp_tol: float = 1e-6
    scp_stall_tol: float = 1e-8
    scp_max_iters: int = 500
    barrier_t0: float = 1.0
    barrier_mu: float = 10.0
    barrier_tol: float = 1e-6
    newton_tol: float = 1e-8
    newton_max_iters: int = 100
    line_search_backtrack: float = 0.5
    feasibility_margin: float = 0.1
    oversampling: int = 16

    def __post_init__(self):
        if self.barrier_mu <= 1:
            raise ValueError("barrier_mu must exceed 1")
        if not 0 < self.line_search_backtrack < 1:
            raise ValueError("line_search_backtrack must lie in (0, 1)")
        if not 0 <= self.feasibility_margin < 1:
            raise ValueError("feasibility_margin must lie in [0, 1)")
        positive = ("scp_tol", "scp_stall_tol", "barrier_t0", "barrier_tol", "newton_tol")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.scp_max_iters < 1 or self.newton_max_iters < 1 or self.oversampling < 4:
            raise ValueError("iteration caps must be >= 1 and oversampling >= 4")


@dataclass
class OptResult:
    weights: np.ndarray
    input_envelope: np.ndarray
    input_weights: np.ndarray
    zdc_value: float
    scp_iterations: int
    per_iteration_zdc: np.ndarray
    constraint_slacks: tuple[float, float]
    newton_steps: int = 0
    stop_reason: str = ""


# ---------------------------------------------------------------------------
# real <-> complex packing


def pack(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    return np.concatenate([w.real.ravel(), w.imag.ravel()])


def unpack(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    half = x.size // 2
    return (x[:half] + 1j * x[half:]).reshape(shape)


# ---------------------------------------------------------------------------
# constraints


class TransmitPowerConstraint:
    """``f1(x) = |x|^2 / 2 - P_tr``."""

    identity_hessian = True

    def __init__(self, p_tr_max: float):
        self.p_tr_max = p_tr_max
        self._eye = None

    def value(self, x):
        return 0.5 * float(x @ x) - self.p_tr_max

    def evaluate(self, x, hessian: bool = True):
        v = self.value(x)
        if not hessian:
            return v, x.copy()
        if self._eye is None or self._eye.shape[0] != x.size:
            self._eye = np.eye(x.size)
        return v, x.copy(), self._eye


class InputPowerConstraint:
    """``f2(x)``: input power the SSPA needs to emit the transmit envelope, minus ``P_in``.

    Out-of-domain points (any envelope sample at or beyond ``A_s``) evaluate to
    ``inf``.  Per antenna the envelope is ``env = (Ar + i Ai) x_m`` with real
    synthesis matrices, so ``q = |env|^2`` has gradient ``2 (Re env Ar + Im env Ai)``
    and Hessian ``2 (Ar^T Ar + Ai^T Ai)``; the Hessian of f2 is exact.
    """

    def __init__(self, sspa: SspaParams, p_in_max: float, shape: tuple[int, int], grid: TimeGrid):
        self.sspa = sspa
        self.p_in_max = p_in_max
        self.shape = shape
        n, m = shape
        self.grid = grid
        e = grid.phase_matrix(n)
        self.ar = np.hstack([e.real, -e.imag])
        self.ai = np.hstack([e.imag, e.real])
        # column j holds antenna j's [Re, Im] coordinates within x
        rows = np.arange(n) * m
        self.sel = np.stack([np.concatenate([rows + j, n * m + rows + j]) for j in range(m)], axis=1)

    def _envelope(self, x):
        local = x[self.sel]
        return self.ar @ local, self.ai @ local

    def value(self, x):
        er, ei = self._envelope(x)
        psi = input_power_density(er * er + ei * ei, self.sspa)
        return float(psi.sum()) / er.shape[0] - self.p_in_max

    def evaluate(self, x, hessian: bool = True):
        k = self.grid.num_samples
        er, ei = self._envelope(x)
        psi, d1, d2 = input_power_density(er * er + ei * ei, self.sspa, derivatives=2)
        v = float(psi.sum()) / k - self.p_in_max
        if not np.isfinite(v):
            return (np.inf, None, None) if hessian else (np.inf, None)
        grad = np.empty(x.size)
        grad[self.sel] = (2.0 / k) * (self.ar.T @ (d1 * er) + self.ai.T @ (d1 * ei))
        if not hessian:
            return v, grad
        m = self.shape[1]
        hess = None if m == 1 else np.zeros((x.size, x.size))
        for j in range(m):
            # one Gram product: rows sqrt(2 psi') Ar, sqrt(2 psi') Ai, sqrt(psi'') grad q
            s1 = np.sqrt(2.0 * d1[:, j, None])
            gq = 2.0 * (er[:, j, None] * self.ar + ei[:, j, None] * self.ai)
            rows = np.vstack([s1 * self.ar, s1 * self.ai, np.sqrt(d2[:, j, None]) * gq])
            block = (rows.T @ rows) / k
            if m == 1:
                hess = block
            else:
                hess[np.ix_(self.sel[:, j], self.sel[:, j])] = block
        return v, grad, hess


def constraint_f1(w, budgets: PowerBudgets) -> tuple[float, np.ndarray]:
    """Transmit-power constraint value and gradient (real, imaginary stacked)."""
    x = pack(as_weights(w))
    return TransmitPowerConstraint(budgets.p_tr_max).evaluate(x, hessian=False)


def constraint_f2(w, sspa: SspaParams, budgets: PowerBudgets, tones: ToneGrid | None, grid: TimeGrid):
    """Input-power constraint value and gradient; ``inf`` value outside the SSPA domain."""
    w = as_weights(w)
    if tones is not None and w.shape[0] != tones.num_subcarriers:
        raise ValueError("weights do not match the tone grid")
    c = InputPowerConstraint(sspa, budgets.p_in_max, w.shape, grid)
    return c.evaluate(pack(w), hessian=False)


# ---------------------------------------------------------------------------
# barrier objective and Newton


def barrier_value(x, coeffs, t: float, constraints) -> float:
    """Value of :func:`barrier_objective` only; ``inf`` when not strictly feasible."""
    value = -float(coeffs @ x)
    for con in constraints:
        f = con.value(x)
        if not (np.isfinite(f) and f < 0):
            return np.inf
        value -= np.log(-f) / t
    return value


def barrier_objective(x, coeffs, t: float, constraints, hessian: bool = True):
    """``-coeffs . x - (1/t) sum_i log(-f_i(x))`` with gradient and Hessian.

    Returns ``(inf, None, None)`` when ``x`` is not strictly feasible.
    """
    out = _centering_objective(x, coeffs, t, constraints, hessian)
    if not np.isfinite(out[0]):
        return out
    return tuple(part / t for part in out)


def _centering_objective(x, coeffs, t: float, constraints, hessian: bool = True):
    """``t * barrier_objective``, the scale Newton centers on."""
    value = -t * float(coeffs @ x)
    grad = -t * coeffs
    hess = np.zeros((x.size, x.size)) if hessian else None
    for con in constraints:
        identity = getattr(con, "identity_hessian", False)
        out = con.evaluate(x, hessian=hessian and not identity)
        f = out[0]
        if not (np.isfinite(f) and f < 0):
            return (np.inf, None, None) if hessian else (np.inf, None)
        gf = out[1]
        inv = -1.0 / f
        value -= np.log(-f)
        grad = grad + inv * gf
        if hessian:
            hess += (inv * inv) * np.outer(gf, gf)
            if identity:
                hess.flat[:: x.size + 1] += inv
            else:
                hess += inv * out[2]
    if hessian:
        return value, grad, hess
    return value, grad


def _newton_direction(grad, hess):
    h = hess.copy()
    h.flat[:: grad.size + 1] += HESSIAN_FLOOR * max(1.0, float(np.max(np.abs(np.diag(hess)))))
    try:
        factor = scipy.linalg.cho_factor(h, check_finite=False)
        return -scipy.linalg.cho_solve(factor, grad, check_finite=False)
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(h, grad, rcond=None)[0]


def newton_minimize(
    start,
    objective: Callable,
    cfg: SolverConfig,
    value: Callable | None = None,
    on_step: Callable[[np.ndarray], None] | None = None,
) -> tuple[np.ndarray, int]:
    """Damped Newton with backtracking on Armijo decrease and strict feasibility.

    ``objective(x)`` returns ``(value, grad, hess)`` with ``value = inf`` outside
    the domain; the optional ``value(x)`` is a cheaper value-only version used
    for line-search trials.  Stops when ``|grad| <= newton_tol`` or when half
    the squared Newton decrement drops below ``newton_tol``.  Returns the point
    and the number of accepted steps.
    """
    if value is None:
        value = lambda z: objective(z)[0]  # noqa: E731
    x = np.asarray(start, dtype=float).copy()
    f, g, h = objective(x)
    if not np.isfinite(f):
        raise ValueError("Newton start point is outside the objective's domain")
    steps = 0
    for _ in range(cfg.newton_max_iters):
        if np.linalg.norm(g) <= cfg.newton_tol:
            break
        dx = _newton_direction(g, h)
        slope = float(g @ dx)
        if -0.5 * slope <= cfg.newton_tol:
            break
        s = 1.0
        slack = 8 * np.finfo(float).eps * abs(f)
        while True:
            trial = x + s * dx
            ft = value(trial)
            if np.isfinite(ft) and ft <= f + ARMIJO * s * slope + slack:
                break
            s *= cfg.line_search_backtrack
            if s < 1e-14:
                if -0.5 * slope <= np.sqrt(cfg.newton_tol):
                    return x, steps
                raise NoProgressError(
                    f"line search underflow (decrement^2/2={-0.5 * slope:.3e}, f={f:.6e})"
                )
        x = trial
        f, g, h = objective(x)
        steps += 1
        if on_step is not None:
            on_step(x)
    return x, steps


def barrier_solve(
    coeffs,
    start,
    constraints,
    cfg: SolverConfig,
    on_step: Callable[[np.ndarray], None] | None = None,
    on_round: Callable[[float, np.ndarray], None] | None = None,
    warm_starts: list[np.ndarray] | None = None,
) -> tuple[np.ndarray, int]:
    """Maximize ``coeffs . x`` subject to ``f_i(x) <= 0`` by the barrier method.

    Centers at ``t = t0, mu t0, ...`` until the duality-gap bound
    ``m / t <= barrier_tol`` holds, warm-starting each centering at the
    previous one.  ``coeffs`` should be normalized so ``coeffs . x`` is O(1)
    on the feasible set; the gap bound is then a relative accuracy.

    ``warm_starts[i]``, when given, is an alternative start for the i-th
    centering (e.g. the matching center of a nearby problem); the candidate
    with the lower centering value is used.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.asarray(start, dtype=float).copy()
    t = cfg.barrier_t0
    m = len(constraints)
    total = 0
    level = 0
    while True:
        # Boyd form t*f0 + phi: same minimizer, decrement measured on the barrier scale
        def objective(z, t=t):
            return _centering_objective(z, coeffs, t, constraints)

        def value(z, t=t):
            return t * barrier_value(z, coeffs, t, constraints)

        if warm_starts is not None and level < len(warm_starts) and value(warm_starts[level]) < value(x):
            x = warm_starts[level].copy()
        x, steps = newton_minimize(x, objective, cfg, value=value, on_step=on_step)
        total += steps
        level += 1
        if on_round is not None:
            on_round(t, x)
        if m / t <= cfg.barrier_tol:
            return x, total
        t *= cfg.barrier_mu


# ---------------------------------------------------------------------------
# SCP


def _problem_radius(shape, budgets: PowerBudgets | None, p_tr_max: float, sspa: SspaParams | None) -> float:
    """Upper bound on ``|x|`` over the feasible set, used to scale the linear model."""
    r2 = 2.0 * p_tr_max
    if sspa is not None:
        # per-antenna mean |env|^2 = sum_n |w_n|^2 < A_s^2; input power >= transmit / G^2
        r2 = min(r2, shape[1] * sspa.saturation**2, 2.0 * sspa.gain**2 * budgets.p_in_max)
    return float(np.sqrt(r2))


def feasible_start(
    h,
    budgets: PowerBudgets,
    sspa: SspaParams | None,
    tones: ToneGrid | None,
    cfg: SolverConfig,
) -> np.ndarray:
    """Scaled matched filter ``w ∝ conj(h)`` strictly inside every constraint.

    Both slacks end up at most ``-feasibility_margin`` times their budget and
    the peak transmit envelope at most ``(1 - 1e-3) A_s``.  Pass ``sspa=None``
    to ignore the amplifier (only the transmit budget applies).
    """
    h = as_weights(h)
    base = np.conj(h)
    norm2 = float(np.sum(np.abs(base) ** 2))
    if norm2 == 0.0:
        raise DegenerateChannelError("channel is identically zero")
    keep = 1.0 - cfg.feasibility_margin
    scale = np.sqrt(2.0 * keep * budgets.p_tr_max / norm2)
    if sspa is not None:
        n = h.shape[0]
        grid = TimeGrid(cfg.oversampling * n)
        peak = float(np.max(np.abs(envelope_samples(base, tones, grid))))
        scale = min(scale, (1.0 - 1e-3) * sspa.saturation / peak)
        con = InputPowerConstraint(sspa, budgets.p_in_max, h.shape, grid)
        x = pack(base)
        target = -cfg.feasibility_margin * budgets.p_in_max
        if con.value(scale * x) > target:
            scale = brentq(lambda c: con.value(c * x) - target, 0.0, scale, xtol=1e-15 * scale)
    return scale * base


def _scp(h, constraints, k: DiodeCoefficients, r_ant: float, start: np.ndarray, radius: float, cfg: SolverConfig, on_iterate=None):
    shape = start.shape
    x = pack(start)
    z = zdc_of_weights(h, start, k, r_ant)
    trace = [z]
    newton_steps = 0
    reason = "max_iters"
    iters = 0
    # consecutive rounds differ only slightly in their coefficients, so each
    # centering may start from the previous round's center at the same t
    centers: list[np.ndarray] = []
    previous: list[np.ndarray] | None = None

    for _ in range(cfg.scp_max_iters):
        gr, gi = zdc_gradient(h, unpack(x, shape), k, r_ant)
        alpha = np.concatenate([gr.ravel(), gi.ravel()])
        an = np.linalg.norm(alpha)
        if an == 0.0:
            reason = "stationary"
            break
        try:
            centers = []
            x_new, steps = barrier_solve(
                alpha / (an * radius), x, constraints, cfg,
                on_round=lambda t, z: centers.append(z), warm_starts=previous,
            )
        except NoProgressError as exc:
            raise NoProgressError(f"SCP iteration {iters + 1}: {exc}") from exc
        newton_steps += steps
        previous = centers
        z_new = zdc_of_weights(h, unpack(x_new, shape), k, r_ant)
        if z_new < z:
            # linearized ascent exhausted to within the barrier gap
            reason = "no_ascent"
            break
        iters += 1
        moved = np.linalg.norm(x_new - x)
        x, z = x_new, z_new
        trace.append(z)
        if on_iterate is not None:
            on_iterate(unpack(x, shape))
        if moved < cfg.scp_tol * max(np.linalg.norm(x), np.finfo(float).tiny):
            reason = "converged"
            break
        if z - trace[-2] <= cfg.scp_stall_tol * z:
            reason = "stalled"
            break
    return unpack(x, shape), np.asarray(trace), iters, newton_steps, reason


def input_description(w_tr, sspa: SspaParams, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-mapped input envelope per antenna and its in-band DFT coefficients.

    The exact SSPA input is not band-limited, so the coefficients are only a
    convenient summary of it.
    """
    w = as_weights(w_tr)
    env = envelope_samples(w, None, grid)
    amp = np.abs(env)
    a_in = amam_inverse(np.minimum(amp, sspa.saturation * (1 - DOMAIN_MARGIN)), sspa)
    phase = np.where(amp > 0, env / np.where(amp > 0, amp, 1.0), 0.0)
    env_in = a_in * phase
    return env_in, project_to_subcarriers(env_in, w.shape[0])


def scp_optimize(
    h,
    budgets: PowerBudgets,
    sspa: SspaParams,
    rect: RectennaParams,
    tones: ToneGrid | None = None,
    cfg: SolverConfig | None = None,
    start=None,
    on_iterate: Callable[[np.ndarray], None] | None = None,
) -> OptResult:
    """Maximize zdc over transmit weights under the transmit and SSPA-input budgets.

    ``on_iterate`` receives the weights of every accepted SCP iterate.
    """
    cfg = cfg or SolverConfig()
    h = as_weights(h)
    if tones is not None and h.shape != (tones.num_subcarriers, tones.num_antennas):
        raise ValueError(f"channel shape {h.shape} does not match tone grid")
    if not np.any(h != 0):
        raise DegenerateChannelError("channel is identically zero")
    grid = TimeGrid(cfg.oversampling * h.shape[0])
    k = diode_coefficients(rect)
    f1 = TransmitPowerConstraint(budgets.p_tr_max)
    f2 = InputPowerConstraint(sspa, budgets.p_in_max, h.shape, grid)
    w0 = feasible_start(h, budgets, sspa, tones, cfg) if start is None else as_weights(start)
    radius = _problem_radius(h.shape, budgets, budgets.p_tr_max, sspa)
    w, trace, iters, steps, reason = _scp(h, [f1, f2], k, rect.antenna_impedance, w0, radius, cfg, on_iterate)
    x = pack(w)
    env_in, w_in = input_description(w, sspa, grid)
    log.debug("scp_optimize: %d iterations, %d Newton steps, stop=%s", iters, steps, reason)
    return OptResult(
        weights=w,
        input_envelope=env_in,
        input_weights=w_in,
        zdc_value=float(trace[-1]),
        scp_iterations=iters,
        per_iteration_zdc=trace,
        constraint_slacks=(f1.value(x), f2.value(x)),
        newton_steps=steps,
        stop_reason=reason,
    )


def optimize_transmit_only(
    h,
    p_tr_max: float,
    rect: RectennaParams,
    tones: ToneGrid | None = None,
    cfg: SolverConfig | None = None,
) -> OptResult:
    """Same SCP machinery with only the transmit-power constraint (linear amplifier).

    zdc grows with the waveform's scale, so the barrier's interior point is
    finally pushed onto the budget sphere; that last gain is appended to the trace.
    """
    cfg = cfg or SolverConfig()
    h = as_weights(h)
    if not np.any(h != 0):
        raise DegenerateChannelError("channel is identically zero")
    # the input budget is unused without an SSPA
    budgets = PowerBudgets(p_in_max=p_tr_max, p_tr_max=p_tr_max)
    k = diode_coefficients(rect)
    f1 = TransmitPowerConstraint(p_tr_max)
    w0 = feasible_start(h, budgets, None, tones, cfg)
    radius = _problem_radius(h.shape, None, p_tr_max, None)
    w, trace, iters, steps, reason = _scp(h, [f1], k, rect.antenna_impedance, w0, radius, cfg)
    x = pack(w)
    x *= np.sqrt(2.0 * p_tr_max / float(x @ x)) * (1 - 4 * np.finfo(float).eps)
    if f1.value(x) <= 0:
        w = unpack(x, h.shape)
        trace = np.append(trace, zdc_of_weights(h, w, k, rect.antenna_impedance))
    x = pack(w)
    return OptResult(
        weights=w,
        input_envelope=envelope_samples(w, None, TimeGrid(cfg.oversampling * h.shape[0])),
        input_weights=w.copy(),
        zdc_value=float(trace[-1]),
        scp_iterations=iters,
        per_iteration_zdc=trace,
        constraint_slacks=(f1.value(x), float("nan")),
        newton_steps=steps,
        stop_reason=reason,
    )
