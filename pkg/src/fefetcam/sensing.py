"""Thermometer-code ADC for matchline currents and its serial cost model.

The ADC compares the matchline current against reference currents placed
at (k + 0.5) times the nominal ON current; the output code is the number
of references the input exceeds, i.e. the nearest integer multiple of the
ON current up to saturation.  The sense amplifier is a serial design, so
latency and energy scale linearly with the number of stages actually used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

# Placeholder per-stage costs; model parameters, not measured values.
DEFAULT_T_STAGE = 100e-12
DEFAULT_E_STAGE = 1e-15


@dataclass(frozen=True)
class AdcConfig:
    i_on_nominal: float = 1e-7
    n_stages: int = 64
    t_stage: float = DEFAULT_T_STAGE
    e_stage: float = DEFAULT_E_STAGE

    def __post_init__(self):
        if self.i_on_nominal <= 0 or self.t_stage <= 0 or self.e_stage <= 0:
            raise InvalidParameterError("ADC parameters must be > 0")
        if self.n_stages < 1:
            raise InvalidParameterError("n_stages must be >= 1")


def thermometer_code(i_ml, cfg: AdcConfig):
    """Count of references (k + 0.5)*i_on strictly below i_ml, saturating.

    Accepts a scalar or array of currents; currents must be >= 0.
    """
    i = np.asarray(i_ml, dtype=float)
    if np.any(i < 0) or not np.all(np.isfinite(i)):
        raise InvalidParameterError("matchline current must be finite and >= 0")
    # ceil(i/i_on - 0.5) equals the count of exceeded references and keeps
    # exact half-integer inputs on the lower code (strict comparison).
    code = np.ceil(i / cfg.i_on_nominal - 0.5)
    code = np.clip(code, 0, cfg.n_stages).astype(np.int64)
    return int(code) if code.ndim == 0 else code


@dataclass(frozen=True)
class SenseCost:
    latency: float
    energy: float


def sense_cost(stages_used: int, cfg: AdcConfig) -> SenseCost:
    """Serial-stage cost: both latency and energy scale with stages_used."""
    if not 1 <= stages_used <= cfg.n_stages:
        raise InvalidParameterError(
            f"stages_used must be in [1, {cfg.n_stages}], got {stages_used}"
        )
    return SenseCost(latency=stages_used * cfg.t_stage, energy=stages_used * cfg.e_stage)


def stages_for_threshold(threshold: int) -> int:
    """Stages needed to tell distance <= threshold from > threshold."""
    return threshold + 1
