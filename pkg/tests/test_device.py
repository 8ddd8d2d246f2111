import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fefetcam.device import (
    CellConfig,
    DeviceParams,
    cell_current,
    clamped_current,
    fet_current,
    on_resistance,
    sample_device,
    sample_vth_offsets,
)
from fefetcam.errors import InvalidParameterError


@pytest.fixture
def params():
    return DeviceParams()


@pytest.fixture
def cell():
    return CellConfig()


def bisection_oracle(vg, vth, cell, params, iters=100):
    """Independent series solve: plain interval halving on the FET drain node."""
    lo, hi = 0.0, cell.vd
    res_lo = fet_current(vg, cell.vd, vth, params) - (cell.vd - lo) / cell.rs
    if res_lo >= 0:
        return cell.vd / cell.rs
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fet_current(vg, cell.vd, vth, params) - (cell.vd - mid) / cell.rs < 0:
            lo = mid
        else:
            hi = mid
    return (cell.vd - 0.5 * (lo + hi)) / cell.rs


class TestFetCurrent:
    def test_boundary_equals_i0(self, params):
        assert fet_current(0.4, 0.1, 0.4, params) == pytest.approx(params.i0)

    def test_subthreshold_decade_per_ss(self, params):
        # 0.5 V below threshold at 100 mV/dec: five decades below i0
        i = fet_current(-0.1, 0.1, 0.4, params)
        assert i == pytest.approx(1e-12, rel=1e-9)

    def test_on_region_linear(self, params):
        i = fet_current(1.4, 0.1, 0.4, params)
        assert i == pytest.approx(1.01e-5, rel=1e-12)

    def test_non_finite_rejected(self, params):
        with pytest.raises(InvalidParameterError):
            fet_current(float("nan"), 0.1, 0.4, params)
        with pytest.raises(InvalidParameterError):
            fet_current(0.5, -0.1, 0.4, params)

    def test_strictly_increasing(self, params):
        vth = 0.4
        vg = np.arange(vth - 1.0, vth + 2.0, 0.001)
        i = fet_current(vg, 0.1, vth, params)
        assert np.all(np.diff(i) > 0)

    def test_continuous_at_threshold(self, params):
        below = fet_current(0.4 - 1e-9, 0.1, 0.4, params)
        above = fet_current(0.4 + 1e-9, 0.1, 0.4, params)
        assert below == pytest.approx(above, rel=1e-4)


class TestCellCurrent:
    def test_subthreshold_unaffected_by_limiter(self, params, cell):
        dev = sample_device(DeviceParams(sigma_vth=0.0), 0, seed=0)
        vg = dev.vth - 1.0
        i = cell_current(vg, dev, cell, params)
        assert i == pytest.approx(fet_current(vg, cell.vd, dev.vth, params), rel=1e-3)

    def test_on_state_clamped_to_vd_over_rs(self, params, cell):
        dev = sample_device(DeviceParams(sigma_vth=0.0), 0, seed=0)
        i = cell_current(dev.vth + 1.0, dev, cell, params)
        assert i == pytest.approx(cell.vd / cell.rs, rel=0.05)

    def test_limiter_disabled_is_passthrough(self, params):
        bare = CellConfig(limiter_enabled=False)
        dev = sample_device(DeviceParams(sigma_vth=0.0), 1, seed=0)
        for vg in (0.0, 0.7, 1.5, 2.5):
            assert cell_current(vg, dev, bare, params) == fet_current(
                vg, bare.vd, dev.vth, params
            )

    def test_matches_independent_bisection_oracle(self, params, cell):
        for vg in np.linspace(-0.5, 2.5, 31):
            got = clamped_current(vg, 0.4, cell, params)
            want = bisection_oracle(vg, 0.4, cell, params)
            assert got == pytest.approx(want, rel=1e-6, abs=1e-18)

    def test_clamp_bound_everywhere(self, params, cell):
        vg = np.linspace(-1.0, 3.0, 400)
        i = clamped_current(vg, np.full_like(vg, 0.4), cell, params)
        assert np.all(i <= cell.vd / cell.rs * (1 + 1e-12))
        assert np.all(i >= 0)

    def test_vg_independence_under_clamp(self, params, cell):
        # both reads well above threshold, rs far above the device resistance
        dev = sample_device(DeviceParams(sigma_vth=0.0), 0, seed=0)
        vg1, vg2 = dev.vth + 0.4, dev.vth + 1.5
        assert cell.rs >= 20 * on_resistance(vg1, dev.vth, params, cell.vd)
        i1 = cell_current(vg1, dev, cell, params)
        i2 = cell_current(vg2, dev, cell, params)
        assert abs(i1 - i2) / i1 <= 0.02

    def test_variation_suppression_10x(self, cell):
        params = DeviceParams(sigma_vth=0.05)
        eps = sample_vth_offsets(params, 1000, seed=11)
        vth = params.vth_levels[0] + eps
        vg = params.vth_levels[0] + 0.7
        bare = CellConfig(limiter_enabled=False)
        i_lim = clamped_current(np.full_like(vth, vg), vth, cell, params)
        i_bare = clamped_current(np.full_like(vth, vg), vth, bare, params)
        cov_lim = np.std(i_lim) / np.mean(i_lim)
        cov_bare = np.std(i_bare) / np.mean(i_bare)
        assert cov_lim <= cov_bare / 10


class TestSampleDevice:
    def test_zero_sigma_is_nominal(self):
        params = DeviceParams(sigma_vth=0.0)
        dev = sample_device(params, 0, seed=99)
        assert dev.sampled_vth == params.vth_levels

    def test_offset_statistics(self):
        params = DeviceParams(sigma_vth=0.05)
        eps = sample_vth_offsets(params, 10_000, seed=5)
        assert 0.048 <= np.std(eps) <= 0.052

    def test_deterministic_per_seed(self):
        params = DeviceParams()
        assert sample_device(params, 1, seed=7) == sample_device(params, 1, seed=7)
        assert sample_device(params, 1, seed=7) != sample_device(params, 1, seed=8)

    def test_rigid_shift_across_levels(self):
        params = DeviceParams(sigma_vth=0.05)
        dev = sample_device(params, 0, seed=3)
        shifts = [s - n for s, n in zip(dev.sampled_vth, params.vth_levels)]
        assert shifts[0] == pytest.approx(shifts[1])

    def test_invalid_state(self):
        with pytest.raises(InvalidParameterError):
            sample_device(DeviceParams(), 2, seed=0)


class TestParamValidation:
    def test_vth_levels_must_increase(self):
        with pytest.raises(InvalidParameterError):
            DeviceParams(vth_levels=(1.4, 0.4))

    @pytest.mark.parametrize("field,value", [("ss", -1.0), ("i0", 0.0), ("k_on", float("inf"))])
    def test_positive_finite(self, field, value):
        with pytest.raises(InvalidParameterError):
            DeviceParams(**{field: value})

    def test_cell_config(self):
        with pytest.raises(InvalidParameterError):
            CellConfig(rs=0.0)
        with pytest.raises(InvalidParameterError):
            CellConfig(vd=-0.1)


@settings(max_examples=50, deadline=None)
@given(
    vg=st.floats(-1.0, 3.0),
    vth=st.floats(0.1, 2.0),
    rs=st.floats(1e4, 1e8),
)
def test_clamp_bound_property(vg, vth, rs):
    params = DeviceParams()
    cell = CellConfig(rs=rs)
    i = clamped_current(vg, vth, cell, params)
    assert 0.0 <= i <= cell.vd / cell.rs * (1 + 1e-12)
