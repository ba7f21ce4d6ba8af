"""Independent numerical oracles and the self-test run by ``wptopt check``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from wptopt.optimizer import (
    InputPowerConstraint,
    PowerBudgets,
    TransmitPowerConstraint,
    barrier_objective,
    pack,
    scp_optimize,
    unpack,
)
from wptopt.baselines import optimize_rectenna_only, eval_ideal_hpa
from wptopt.rectenna import (
    RectennaParams,
    diode_coefficients,
    effective_weights,
    zdc,
    zdc_gradient,
    zdc_of_weights,
    zdc_time_oracle,
)
from wptopt.signal import TimeGrid, average_power, dbv_to_volts, dbw_to_watts
from wptopt.sspa import SspaParams, amam_forward, amam_inverse, required_input_power


def central_difference(f, x, eps: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def relative_error(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b)) / scale)


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def constant_envelope_optimum(h: complex, budgets: PowerBudgets, sspa: SspaParams | None, rect: RectennaParams) -> float:
    """zdc of the best single-tone, single-antenna waveform.

    A single tone has a constant envelope, so both budgets cap its amplitude
    in closed form and zdc is increasing in that amplitude.
    """
    amp = np.sqrt(2 * budgets.p_tr_max)
    if sspa is not None:
        amp = min(amp, amam_forward(np.sqrt(2 * budgets.p_in_max), sspa))
    k = diode_coefficients(rect)
    s = abs(h) * amp
    r = rect.antenna_impedance
    return 0.5 * k.k2 * r * s**2 + 0.375 * k.k4 * r**2 * s**4


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _oracle_equivalence(rng) -> CheckResult:
    worst = 0.0
    k = diode_coefficients(RectennaParams())
    for _ in range(100):
        n, m = rng.integers(1, 9), rng.integers(1, 4)
        h = random_complex(rng, (n, m))
        w = random_complex(rng, (n, m), 0.05)
        s = effective_weights(h, w)
        a = zdc(s, k, 50.0)
        b = zdc_time_oracle(s, k, 50.0, None, TimeGrid(16 * n))
        worst = max(worst, abs(a - b) / abs(b))
    return CheckResult("zdc frequency vs time oracle", worst < 1e-10, f"max rel err {worst:.2e}")


def _gradients(rng) -> CheckResult:
    rect = RectennaParams()
    k = diode_coefficients(rect)
    worst = 0.0
    for _ in range(20):
        n, m = 4, 2
        h = random_complex(rng, (n, m))
        sspa = SspaParams(1.0, 0.05, 1.0)
        w = random_complex(rng, (n, m), 0.003)
        x = pack(w)
        gr, gi = zdc_gradient(h, w, k, 50.0)
        fd = central_difference(lambda z: zdc_of_weights(h, unpack(z, w.shape), k, 50.0), x, 1e-7)
        worst = max(worst, relative_error(np.concatenate([gr.ravel(), gi.ravel()]), fd))
        f2 = InputPowerConstraint(sspa, 1.0, w.shape, TimeGrid(16 * n))
        fd = central_difference(f2.value, x, 1e-8)
        worst = max(worst, relative_error(f2.evaluate(x, hessian=False)[1], fd))
        f1 = TransmitPowerConstraint(1.0)
        coeffs = rng.standard_normal(x.size)
        _, g, _ = barrier_objective(x, coeffs, 3.0, [f1, f2])
        fd = central_difference(lambda z: barrier_objective(z, coeffs, 3.0, [f1, f2])[0], x, 1e-8)
        worst = max(worst, relative_error(g, fd))
    return CheckResult("analytic gradients vs central differences", worst < 1e-5, f"max rel err {worst:.2e}")


def _sspa(rng) -> CheckResult:
    p = SspaParams(1.0, dbv_to_volts(-35), 1.0)
    a = np.sort(rng.uniform(0, 0.999 * p.saturation, 1000))
    rt = relative_error(amam_forward(amam_inverse(a, p), p), a)
    mono = bool(np.all(np.diff(amam_forward(a, p)) > 0) and np.all(np.diff(amam_inverse(a, p)) > 0))
    lin = SspaParams(1.0, 1e6, 1.0)
    w = random_complex(rng, (8, 1), 0.1)
    lin_err = abs(required_input_power(w, lin, None, TimeGrid(128)) / average_power(w) - 1)
    ok = rt < 1e-12 and mono and lin_err < 1e-6
    return CheckResult("SSPA inverse, monotonicity, linear limit", ok, f"round trip {rt:.1e}, linear {lin_err:.1e}")


def _closed_form(rng) -> CheckResult:
    rect = RectennaParams()
    sspa = SspaParams(1.0, dbv_to_volts(-35), 1.0)
    worst = 0.0
    for h, p_tr, p_in in [(0.8 - 0.3j, -40, -20), (1.2j, -30, -36), (0.5, -45, -20)]:
        b = PowerBudgets(dbw_to_watts(p_in), dbw_to_watts(p_tr))
        got = scp_optimize([[h]], b, sspa, rect).zdc_value
        worst = max(worst, abs(got / constant_envelope_optimum(h, b, sspa, rect) - 1))
        w = optimize_rectenna_only([[h]], b.p_tr_max, rect)
        worst = max(worst, abs(eval_ideal_hpa([[h]], w, rect) / constant_envelope_optimum(h, b, None, rect) - 1))
    return CheckResult("single-tone closed-form optimum", worst < 1e-3, f"max rel err {worst:.2e}")


def run_checks(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for check in (_oracle_equivalence, _gradients, _sspa, _closed_form):
        t0 = time.perf_counter()
        res = check(rng)
        ok &= res.passed
        out(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail} ({time.perf_counter() - t0:.2f}s)")
    return ok
