"""Multisine waveform optimization for wireless power transfer under
amplifier (Rapp SSPA) and rectenna nonlinearities."""

from wptopt.signal import (
    TimeGrid,
    ToneGrid,
    average_power,
    dbv_to_volts,
    dbw_to_watts,
    envelope_samples,
    papr,
)
from wptopt.sspa import (
    SspaDomainError,
    SspaParams,
    amam_forward,
    amam_inverse,
    apply_to_envelope,
    project_to_subcarriers,
    required_input_power,
)
from wptopt.rectenna import (
    DiodeCoefficients,
    RectennaParams,
    diode_coefficients,
    effective_weights,
    zdc,
    zdc_gradient,
    zdc_time_oracle,
)
from wptopt.optimizer import (
    DegenerateChannelError,
    NoProgressError,
    OptResult,
    PowerBudgets,
    SolverConfig,
    scp_optimize,
)

__version__ = "0.1.0"

__all__ = [
    "amam_forward",
    "amam_inverse",
    "apply_to_envelope",
    "average_power",
    "dbv_to_volts",
    "dbw_to_watts",
    "DegenerateChannelError",
    "diode_coefficients",
    "DiodeCoefficients",
    "effective_weights",
    "envelope_samples",
    "NoProgressError",
    "OptResult",
    "papr",
    "PowerBudgets",
    "project_to_subcarriers",
    "RectennaParams",
    "required_input_power",
    "scp_optimize",
    "SolverConfig",
    "SspaDomainError",
    "SspaParams",
    "TimeGrid",
    "ToneGrid",
    "zdc",
    "zdc_gradient",
    "zdc_time_oracle",
]
