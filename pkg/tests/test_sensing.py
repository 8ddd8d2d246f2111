import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fefetcam.cam import CamArray, SearchQuery, make_ladder, search_array
from fefetcam.device import CellConfig, DeviceParams
from fefetcam.errors import InvalidParameterError
from fefetcam.sensing import AdcConfig, sense_cost, stages_for_threshold, thermometer_code

I_ON = 1e-7
ADC = AdcConfig(i_on_nominal=I_ON, n_stages=8)


class TestThermometerCode:
    def test_zero(self):
        assert thermometer_code(0.0, ADC) == 0

    def test_fractional_rounds_to_nearest(self):
        assert thermometer_code(3.2 * I_ON, ADC) == 3
        assert thermometer_code(3.6 * I_ON, ADC) == 4

    def test_saturation(self):
        assert thermometer_code(8 * I_ON, ADC) == 8
        assert thermometer_code(25 * I_ON, ADC) == 8

    def test_exact_integer_multiples(self):
        for m in range(9):
            assert thermometer_code(m * I_ON, ADC) == m

    def test_half_integer_reference_excluded(self):
        # references sit at (k + 0.5)*i_on and compare strictly
        assert thermometer_code(2.5 * I_ON, ADC) == 2

    def test_negative_rejected(self):
        with pytest.raises(InvalidParameterError):
            thermometer_code(-1e-9, ADC)

    def test_monotone_non_decreasing(self):
        grid = np.linspace(0.0, 10 * I_ON, 1000)
        codes = thermometer_code(grid, ADC)
        assert np.all(np.diff(codes) >= 0)


class TestSenseCost:
    def test_single_stage(self):
        c = sense_cost(1, ADC)
        assert c.latency == ADC.t_stage
        assert c.energy == ADC.e_stage

    def test_doubling(self):
        c1, c2 = sense_cost(2, ADC), sense_cost(4, ADC)
        assert c2.latency == 2 * c1.latency
        assert c2.energy == 2 * c1.energy

    def test_threshold_sweep_is_linear(self):
        cfg = AdcConfig(i_on_nominal=I_ON, n_stages=65)
        thresholds = np.arange(1, 65)
        lat = [sense_cost(stages_for_threshold(t), cfg).latency for t in thresholds]
        en = [sense_cost(stages_for_threshold(t), cfg).energy for t in thresholds]
        assert np.all(np.diff(lat) > 0) and np.all(np.diff(en) > 0)
        for values in (lat, en):
            fit = np.polyfit(thresholds, values, 1)
            resid = values - np.polyval(fit, thresholds)
            r2 = 1 - np.sum(resid**2) / np.sum((values - np.mean(values)) ** 2)
            assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            sense_cost(0, ADC)
        with pytest.raises(InvalidParameterError):
            sense_cost(9, ADC)


@settings(max_examples=100, deadline=None)
@given(i=st.floats(0, 2e-6), j=st.floats(0, 2e-6))
def test_monotonicity_property(i, j):
    lo, hi = sorted((i, j))
    assert thermometer_code(lo, ADC) <= thermometer_code(hi, ADC)


class TestEndToEnd:
    def test_codes_recover_counts_at_wordlength_8(self):
        # sampled stored/query pairs; the full 2^8 x 2^8 set runs in acceptance
        params = DeviceParams(sigma_vth=0.0)
        cell = CellConfig()
        ladder = make_ladder(params)
        adc = AdcConfig(i_on_nominal=cell.i_clamp, n_stages=8)
        rng = np.random.default_rng(23)
        stored = rng.integers(0, 2, size=(64, 8))
        arr = CamArray(stored=stored, eps=np.zeros((64, 8)), cell=cell, params=params)
        for _ in range(16):
            q = rng.integers(0, 2, size=8)
            i1, i2 = search_array(arr, SearchQuery(tuple(q)), ladder)
            n01 = np.sum((stored == 0) & (q[None, :] == 1), axis=1)
            n10 = np.sum((stored == 1) & (q[None, :] == 0), axis=1)
            assert np.array_equal(thermometer_code(i1, adc), n01)
            assert np.array_equal(8 - thermometer_code(i2, adc), n10)
