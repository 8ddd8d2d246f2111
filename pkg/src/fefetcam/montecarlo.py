"""Array-level variation experiments.

Three harnesses cover the validation story of the CAM design:

* `run_bcam_sweep` sweeps the number of mismatching bits of a binary word
  and checks that the decoded Hamming distance tracks the truth under
  device-to-device V_TH variation;
* `run_limiter_ablation` runs the same search with and without the series
  current limiter and quantifies how badly the step-2 current distributions
  of neighbouring mismatch counts overlap without it;
* `run_mcam_worst_case` runs the four one-cell-perturbation scenarios of a
  4-level word and scores the exact-match classifier.

Every trial samples fresh devices from a counter-based Philox stream keyed
on (seed, scenario index); each trial consumes a fixed block of draws, so
results are reproducible and independent of evaluation order or trial
count extensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cam import DEFAULT_M_GUARD, decode_hamming_arrays, make_ladder
from .device import CellConfig, DeviceParams, clamped_current, mlc4_params
from .errors import ConfigurationError
from .sensing import AdcConfig, thermometer_code

_PHILOX_MIX = 0x9E3779B97F4A7C15  # per-scenario key spacing


@dataclass(frozen=True)
class McExperimentConfig:
    wordlength: int = 8
    mode: str = "binary"  # "binary" | "multilevel"
    trials: int = 1000
    sigma_vth: float = 0.05
    limiter_enabled: bool = True
    seed: int = 1
    scenario: str = "stored_zeros"  # bcam: stored_zeros | stored_ones
    m_guard: float = DEFAULT_M_GUARD
    margin_fraction: float = 0.4
    params: DeviceParams | None = None
    cell: CellConfig = field(default_factory=CellConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.mode not in ("binary", "multilevel"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "binary" and self.scenario not in ("stored_zeros", "stored_ones"):
            raise ConfigurationError(f"unknown binary scenario {self.scenario!r}")

    def effective_params(self) -> DeviceParams:
        base = self.params
        if base is None:
            base = DeviceParams() if self.mode == "binary" else mlc4_params()
        return replace(base, sigma_vth=self.sigma_vth)

    def effective_cell(self) -> CellConfig:
        return replace(self.cell, limiter_enabled=self.limiter_enabled)


@dataclass
class ScenarioResult:
    label: str
    truth: int  # target mismatch count (binary) or match flag (mlc)
    i_mls1: np.ndarray
    i_mls2: np.ndarray
    decoded: np.ndarray
    error_rate: float

    @property
    def mean1(self) -> float:
        return float(np.mean(self.i_mls1))

    @property
    def std1(self) -> float:
        return float(np.std(self.i_mls1))

    @property
    def mean2(self) -> float:
        return float(np.mean(self.i_mls2))

    @property
    def std2(self) -> float:
        return float(np.std(self.i_mls2))


@dataclass
class McResult:
    config: McExperimentConfig
    scenarios: list[ScenarioResult]
    error_rate: float
    sensing_margin: float  # min adjacent-scenario gap, in units of i_on
    overlap_fraction: float
    code_agreement: float = 1.0  # fraction of trials where ADC codes match truth


def _scenario_rng(seed: int, scenario_index: int, purpose: int = 0) -> np.random.Generator:
    # One stream per (seed, scenario, draw purpose): each trial consumes a
    # fixed-size block from its stream, so extending the trial count never
    # disturbs earlier trials.
    key = (int(seed) * _PHILOX_MIX + scenario_index * 1000003 + purpose + 1) % (1 << 128)
    return np.random.Generator(np.random.Philox(key=key))


def _word_currents(vg_row: np.ndarray, vth: np.ndarray, cell: CellConfig, params: DeviceParams) -> np.ndarray:
    """Matchline currents for (trials, N) device thresholds under one drive row."""
    return clamped_current(vg_row[np.newaxis, :], vth, cell, params).sum(axis=1)


def _range_overlap_fraction(groups: dict[int, np.ndarray]) -> float:
    """Fraction of samples falling inside the empirical range of an adjacent group."""
    keys = sorted(groups)
    total = sum(len(groups[k]) for k in keys)
    if total == 0:
        return 0.0
    inside = 0
    for k in keys:
        samples = groups[k]
        mask = np.zeros(len(samples), dtype=bool)
        for adj in (k - 1, k + 1):
            if adj in groups and len(groups[adj]) > 0:
                lo, hi = np.min(groups[adj]), np.max(groups[adj])
                mask |= (samples >= lo) & (samples <= hi)
        inside += int(np.sum(mask))
    return inside / total


def _adjacent_margin(groups: dict[int, np.ndarray], i_on: float) -> float:
    """Min gap between the ranges of adjacent groups (ordered by mean), in i_on units."""
    keys = sorted(groups, key=lambda k: float(np.mean(groups[k])))
    margin = np.inf
    for a, b in zip(keys, keys[1:]):
        gap = float(np.min(groups[b]) - np.max(groups[a]))
        margin = min(margin, gap / i_on)
    return margin if np.isfinite(margin) else np.inf


def run_bcam_sweep(cfg: McExperimentConfig) -> McResult:
    """Sweep k = 0..N target mismatches of a binary word.

    stored_zeros: all cells store '0', the first k query bits are '1'
    (k St0Sr1 mismatches, visible in step 1).
    stored_ones: all cells store '1', the first k query bits are '0'
    (k St1Sr0 mismatches, visible in step 2).
    """
    if cfg.mode != "binary":
        raise ConfigurationError("run_bcam_sweep requires binary mode")
    params = cfg.effective_params()
    cell = cfg.effective_cell()
    ladder = make_ladder(params, cfg.m_guard)
    n = cfg.wordlength
    i_on = cfg.cell.i_clamp
    adc = AdcConfig(i_on_nominal=i_on, n_stages=n)
    levels = np.asarray(params.vth_levels)
    stored_bit = 0 if cfg.scenario == "stored_zeros" else 1
    v_low = np.asarray(ladder.v_low)
    v_high = np.asarray(ladder.v_high)

    scenarios: list[ScenarioResult] = []
    groups1: dict[int, np.ndarray] = {}
    groups2: dict[int, np.ndarray] = {}
    errors = 0
    code_hits = 0
    for k in range(n + 1):
        rng = _scenario_rng(cfg.seed, k)
        eps = params.sigma_vth * rng.standard_normal((cfg.trials, n))
        vth = levels[stored_bit] + eps
        query = np.full(n, stored_bit)
        query[:k] = 1 - stored_bit
        i1 = _word_currents(v_low[query], vth, cell, params)
        i2 = _word_currents(v_high[query], vth, cell, params)
        _, _, hamming = decode_hamming_arrays(i1, i2, n, i_on)
        err = int(np.sum(hamming != k))
        errors += err
        codes1 = thermometer_code(i1, adc)
        codes2 = thermometer_code(i2, adc)
        true1 = k if stored_bit == 0 else 0
        true2 = n - (k if stored_bit == 1 else 0)
        code_hits += int(np.sum((codes1 == true1) & (codes2 == true2)))
        scenarios.append(
            ScenarioResult(
                label=f"k={k}",
                truth=k,
                i_mls1=i1,
                i_mls2=i2,
                decoded=hamming,
                error_rate=err / cfg.trials,
            )
        )
        groups1[k] = i1
        groups2[k] = i2

    total = cfg.trials * (n + 1)
    varying = groups1 if stored_bit == 0 else groups2
    return McResult(
        config=cfg,
        scenarios=scenarios,
        error_rate=errors / total,
        sensing_margin=_adjacent_margin(varying, i_on),
        overlap_fraction=_range_overlap_fraction(varying),
        code_agreement=code_hits / total,
    )


@dataclass
class AblationStepStats:
    overlap_step1: float
    overlap_step2: float
    result: McResult


@dataclass
class AblationResult:
    with_limiter: AblationStepStats
    without_limiter: AblationStepStats


def _ablation_run(cfg: McExperimentConfig, limiter: bool) -> AblationStepStats:
    params = cfg.effective_params()
    cell = replace(cfg.cell, limiter_enabled=limiter)
    ladder = make_ladder(params, cfg.m_guard)
    n = cfg.wordlength
    i_on = cfg.cell.i_clamp
    levels = np.asarray(params.vth_levels)
    v_low = np.asarray(ladder.v_low)
    v_high = np.asarray(ladder.v_high)

    scenarios: list[ScenarioResult] = []
    step1_groups: dict[int, list[np.ndarray]] = {}
    step2_groups: dict[int, np.ndarray] = {}
    errors = 0
    for j in range(n + 1):
        eps = params.sigma_vth * _scenario_rng(cfg.seed, j, 0).standard_normal((cfg.trials, n))
        # First j cells: St1Sr0.  Remaining cells: stored random; stored-0
        # cells are searched with a random bit so the V_G-dependent St0Sr1
        # ON current mixes into step 2, which is what breaks the bare FeFET.
        stored = np.empty((cfg.trials, n), dtype=np.int64)
        stored[:, :j] = 1
        stored[:, j:] = _scenario_rng(cfg.seed, j, 1).integers(0, 2, size=(cfg.trials, n - j))
        query = stored.copy()
        query[:, :j] = 0
        flip = (stored[:, j:] == 0) & (
            _scenario_rng(cfg.seed, j, 2).random((cfg.trials, n - j)) < 0.5
        )
        query[:, j:][flip] = 1
        vth = levels[stored] + eps
        i1 = clamped_current(v_low[query], vth, cell, params).sum(axis=1)
        i2 = clamped_current(v_high[query], vth, cell, params).sum(axis=1)
        n01 = np.sum((stored == 0) & (query == 1), axis=1)
        _, dec_n10, _ = decode_hamming_arrays(i1, i2, n, i_on)
        err = int(np.sum(dec_n10 != j))
        errors += err
        scenarios.append(
            ScenarioResult(
                label=f"n_st1sr0={j}",
                truth=j,
                i_mls1=i1,
                i_mls2=i2,
                decoded=dec_n10,
                error_rate=err / cfg.trials,
            )
        )
        step2_groups[j] = i2
        for c in np.unique(n01):
            step1_groups.setdefault(int(c), []).append(i1[n01 == c])

    step1_merged = {k: np.concatenate(v) for k, v in step1_groups.items()}
    overlap1 = _range_overlap_fraction(step1_merged)
    overlap2 = _range_overlap_fraction(step2_groups)
    total = cfg.trials * (n + 1)
    result = McResult(
        config=replace(cfg, limiter_enabled=limiter),
        scenarios=scenarios,
        error_rate=errors / total,
        sensing_margin=_adjacent_margin(step2_groups, i_on),
        overlap_fraction=overlap2,
    )
    return AblationStepStats(overlap_step1=overlap1, overlap_step2=overlap2, result=result)


def run_limiter_ablation(cfg: McExperimentConfig) -> AblationResult:
    """Paired run (same seeds) with and without the series current limiter."""
    if cfg.mode != "binary":
        raise ConfigurationError("run_limiter_ablation requires binary mode")
    return AblationResult(
        with_limiter=_ablation_run(cfg, limiter=True),
        without_limiter=_ablation_run(cfg, limiter=False),
    )


MCAM_SCENARIOS = ("mismatch_00", "match", "mismatch_10", "mismatch_11")


def run_mcam_worst_case(cfg: McExperimentConfig) -> McResult:
    """One-cell perturbations of a word storing all '01' (state index 1).

    Scenario 'mismatch_00' searches one cell below the stored threshold
    (caught in step 2), 'mismatch_10'/'mismatch_11' search above it
    (caught in step 1); 'match' searches the stored symbols everywhere.
    """
    if cfg.mode != "multilevel":
        raise ConfigurationError("run_mcam_worst_case requires multilevel mode")
    params = cfg.effective_params()
    if params.n_levels != 4:
        raise ConfigurationError("MCAM worst cases are defined for 4 levels")
    cell = cfg.effective_cell()
    ladder = make_ladder(params, cfg.m_guard)
    n = cfg.wordlength
    i_on = cfg.cell.i_clamp
    levels = np.asarray(params.vth_levels)
    v_low = np.asarray(ladder.v_low)
    v_high = np.asarray(ladder.v_high)

    stored_symbol = 1  # '01'
    scenario_symbols = {"mismatch_00": 0, "match": 1, "mismatch_10": 2, "mismatch_11": 3}
    scenarios: list[ScenarioResult] = []
    errors = 0
    for idx, label in enumerate(MCAM_SCENARIOS):
        rng = _scenario_rng(cfg.seed, idx)
        eps = params.sigma_vth * rng.standard_normal((cfg.trials, n))
        vth = levels[stored_symbol] + eps
        query = np.full(n, stored_symbol)
        query[0] = scenario_symbols[label]
        i1 = _word_currents(v_low[query], vth, cell, params)
        i2 = _word_currents(v_high[query], vth, cell, params)
        is_match = (i1 < cfg.margin_fraction * i_on) & (
            i2 > (n - cfg.margin_fraction) * i_on
        )
        truth = 1 if label == "match" else 0
        err = int(np.sum(is_match != bool(truth)))
        errors += err
        scenarios.append(
            ScenarioResult(
                label=label,
                truth=truth,
                i_mls1=i1,
                i_mls2=i2,
                decoded=is_match.astype(np.int64),
                error_rate=err / cfg.trials,
            )
        )

    total = cfg.trials * len(MCAM_SCENARIOS)
    groups1 = {i: s.i_mls1 for i, s in enumerate(scenarios)}
    return McResult(
        config=cfg,
        scenarios=scenarios,
        error_rate=errors / total,
        sensing_margin=_adjacent_margin(groups1, i_on),
        overlap_fraction=_range_overlap_fraction(groups1),
    )


def result_rows(result: McResult):
    """Flatten a result into (scenario, trial, i_mls1, i_mls2, decoded, truth) rows."""
    for s in result.scenarios:
        for t in range(len(s.i_mls1)):
            yield (s.label, t, s.i_mls1[t], s.i_mls2[t], int(s.decoded[t]), s.truth)


def result_summary(result: McResult) -> dict:
    """JSON-ready summary of means, spreads, margins and error rates."""
    return {
        "wordlength": result.config.wordlength,
        "mode": result.config.mode,
        "trials": result.config.trials,
        "sigma_vth": result.config.sigma_vth,
        "limiter_enabled": result.config.limiter_enabled,
        "seed": result.config.seed,
        "scenario": result.config.scenario,
        "error_rate": result.error_rate,
        "sensing_margin": result.sensing_margin,
        "overlap_fraction": result.overlap_fraction,
        "code_agreement": result.code_agreement,
        "scenarios": [
            {
                "label": s.label,
                "truth": s.truth,
                "mean_i_mls1": s.mean1,
                "std_i_mls1": s.std1,
                "mean_i_mls2": s.mean2,
                "std_i_mls2": s.std2,
                "error_rate": s.error_rate,
            }
            for s in result.scenarios
        ],
    }
