"""Behavioral FeFET and 1FeFET1R cell model.

A FeFET stores its state as a programmed threshold voltage.  The drain
current follows an exponential subthreshold law below V_TH and a linear,
gate-voltage-dependent ON law above it.  Putting a series resistor on the
drain clamps the ON current to vd/rs, which removes both the V_G dependence
and the device-to-device spread of the ON current.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericalError

BISECTION_MAX_ITER = 200
BISECTION_REL_TOL = 1e-9


@dataclass(frozen=True)
class DeviceParams:
    """Nominal FeFET parameters shared by all devices of an array.

    vth_levels: one threshold voltage (V) per storable state, strictly
        increasing; 2 entries for binary cells, 4 for 2-bit cells.
    ss: subthreshold swing in mV/decade.
    i0: drain current at vg == vth (A).
    k_on: ON-region transconductance (A/V); models the V_G dependence of
        the unclamped ON current.
    sigma_vth: device-to-device threshold standard deviation (V).
    """

    vth_levels: tuple[float, ...] = (0.4, 1.4)
    ss: float = 100.0
    i0: float = 1e-7
    k_on: float = 1e-5
    sigma_vth: float = 0.05

    def __post_init__(self):
        levels = tuple(float(v) for v in self.vth_levels)
        object.__setattr__(self, "vth_levels", levels)
        if len(levels) < 2:
            raise InvalidParameterError("need at least two vth levels")
        if not all(np.isfinite(levels)):
            raise InvalidParameterError("vth_levels must be finite")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise InvalidParameterError("vth_levels must be strictly increasing")
        for name in ("ss", "i0", "k_on"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidParameterError(f"{name} must be finite and > 0")
        if not np.isfinite(self.sigma_vth) or self.sigma_vth < 0:
            raise InvalidParameterError("sigma_vth must be finite and >= 0")

    @property
    def n_levels(self) -> int:
        return len(self.vth_levels)


# Default 4-level parameter set for 2-bit cells.  The level spacing is wider
# than the binary window so that the midpoint search voltages keep the
# subthreshold leakage of a 64-cell word well below the match margin.
MLC4_VTH_LEVELS = (0.2, 1.0, 1.8, 2.6)


def mlc4_params(**overrides) -> DeviceParams:
    """DeviceParams preset for 4-level (2 bits/cell) operation."""
    kw = dict(vth_levels=MLC4_VTH_LEVELS)
    kw.update(overrides)
    return DeviceParams(**kw)


@dataclass(frozen=True)
class CellConfig:
    """1FeFET1R cell bias: series resistance, drain bias, limiter switch."""

    rs: float = 1e6
    vd: float = 0.1
    limiter_enabled: bool = True

    def __post_init__(self):
        if not np.isfinite(self.rs) or self.rs <= 0:
            raise InvalidParameterError("rs must be finite and > 0")
        if not np.isfinite(self.vd) or self.vd <= 0:
            raise InvalidParameterError("vd must be finite and > 0")

    @property
    def i_clamp(self) -> float:
        """Clamp current vd/rs; the nominal ON current with the limiter."""
        return self.vd / self.rs


@dataclass
class DeviceInstance:
    """One sampled device: per-state thresholds plus the programmed state."""

    sampled_vth: tuple[float, ...]
    stored_state: int = 0

    def __post_init__(self):
        self.sampled_vth = tuple(float(v) for v in self.sampled_vth)
        if not 0 <= self.stored_state < len(self.sampled_vth):
            raise InvalidParameterError("stored_state out of range")

    @property
    def vth(self) -> float:
        """Threshold of the currently stored state."""
        return self.sampled_vth[self.stored_state]


def fet_current(vg, vd, vth, params: DeviceParams):
    """Drain current of a bare FeFET.

    Exponential subthreshold below vth, linear ON region above; continuous
    at vg == vth.  Accepts scalars or broadcastable arrays for vg/vth.
    """
    vg = np.asarray(vg, dtype=float)
    vth = np.asarray(vth, dtype=float)
    if not (np.all(np.isfinite(vg)) and np.all(np.isfinite(vth))):
        raise InvalidParameterError("non-finite gate or threshold voltage")
    if not np.isfinite(vd) or vd <= 0:
        raise InvalidParameterError("vd must be finite and > 0")
    ov = vg - vth
    sub = params.i0 * np.power(10.0, np.minimum(ov, 0.0) * 1000.0 / params.ss)
    on = params.i0 + params.k_on * np.maximum(ov, 0.0)
    out = np.where(ov < 0.0, sub, on)
    return float(out) if out.ndim == 0 else out


def clamped_current(vg, vth, cell: CellConfig, params: DeviceParams):
    """Current through a 1FeFET1R cell (vectorized over vg/vth).

    Solves I = fet_current(vg, vd_fet) with vd_fet = vd - I*rs by bisection
    on vd_fet in [0, vd]; the equation is monotone so the root is unique.
    When the device current exceeds vd/rs everywhere on the interval the
    residual never changes sign and the solution is the clamp endpoint
    vd_fet -> 0, i.e. I = vd/rs.
    """
    if not cell.limiter_enabled:
        return fet_current(vg, cell.vd, vth, params)
    vg = np.asarray(vg, dtype=float)
    vth = np.asarray(vth, dtype=float)
    i_fet = np.asarray(fet_current(vg, cell.vd, vth, params))
    scalar = i_fet.ndim == 0
    i_fet = np.atleast_1d(i_fet)

    lo = np.zeros_like(i_fet)
    hi = np.full_like(i_fet, cell.vd)
    # residual(v) = fet_current(vg, v) - (vd - v)/rs; the device current in
    # this behavioral model does not depend on its own drain bias, so the
    # residual is affine in v and only (vd - v)/rs moves during bisection.
    clamped = i_fet - cell.vd / cell.rs >= 0.0  # residual(0) >= 0: no root
    tol = BISECTION_REL_TOL * cell.vd
    for it in range(BISECTION_MAX_ITER):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        res = i_fet - (cell.vd - mid) / cell.rs
        lo = np.where(res < 0.0, mid, lo)
        hi = np.where(res < 0.0, hi, mid)
    else:
        raise NumericalError("series bisection did not converge")
    # Report the FET-side current at the root: identical to (vd - vd_fet)/rs
    # there, but free of cancellation error when the root sits close to vd
    # (deep subthreshold, currents many decades below vd/rs).
    current = np.where(clamped, cell.vd / cell.rs, i_fet)
    return float(current[0]) if scalar else current


def cell_current(vg, device: DeviceInstance, cell: CellConfig, params: DeviceParams) -> float:
    """Current through one cell given its stored state's threshold."""
    return clamped_current(vg, device.vth, cell, params)


def sample_device(params: DeviceParams, stored_state: int, seed: int) -> DeviceInstance:
    """Draw one device: a single Gaussian V_TH offset shifts all levels rigidly."""
    if not 0 <= stored_state < params.n_levels:
        raise InvalidParameterError("stored_state out of range")
    eps = sample_vth_offsets(params, 1, seed)[0]
    vth = tuple(v + eps for v in params.vth_levels)
    return DeviceInstance(sampled_vth=vth, stored_state=stored_state)


def sample_vth_offsets(params: DeviceParams, n, seed) -> np.ndarray:
    """Vector/matrix of per-device V_TH offsets, deterministic in seed.

    Uses a counter-based Philox stream keyed on the seed; each device
    consumes exactly one draw, so extending n preserves earlier draws.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed) % (1 << 128)))
    return params.sigma_vth * rng.standard_normal(n)


def on_resistance(vg, vth, params: DeviceParams, vd: float):
    """Effective device resistance vd / fet_current at the given bias."""
    return vd / fet_current(vg, vd, vth, params)
