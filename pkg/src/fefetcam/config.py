"""Experiment configuration: JSON schema, defaults and strict validation.

The defaults are derived from the module-level dataclass defaults, so the
CLI and the library cannot drift apart.  Unknown keys are rejected with a
dotted field path; every field has a documented default (see README).
"""

from __future__ import annotations

import copy
import json

from .device import CellConfig, DeviceParams, MLC4_VTH_LEVELS
from .cam import DEFAULT_M_GUARD
from .montecarlo import McExperimentConfig
from .sensing import AdcConfig
from .errors import ConfigurationError

EXPERIMENTS = (
    "device-iv",
    "bcam-sweep",
    "limiter-ablation",
    "mcam-worst",
    "adc-sweep",
    "genome-build",
    "genome-query",
    "bench-report",
)

_DEV = DeviceParams()
_CELL = CellConfig()
_MC = McExperimentConfig()
_ADC = AdcConfig()


def default_config() -> dict:
    return copy.deepcopy(
        {
            "experiment": "bcam-sweep",
            "seed": _MC.seed,
            "out_dir": "out",
            "formats": ["csv", "json"],
            "device": {
                "vth_levels": list(_DEV.vth_levels),
                "ss": _DEV.ss,
                "i0": _DEV.i0,
                "k_on": _DEV.k_on,
                "sigma_vth": _DEV.sigma_vth,
            },
            "cell": {
                "rs": _CELL.rs,
                "vd": _CELL.vd,
                "limiter_enabled": _CELL.limiter_enabled,
            },
            "ladder": {"m_guard": DEFAULT_M_GUARD},
            "mc": {
                "wordlength": _MC.wordlength,
                "mode": _MC.mode,
                "trials": _MC.trials,
                "scenario": _MC.scenario,
                "margin_fraction": _MC.margin_fraction,
            },
            "adc": {
                "n_stages": _ADC.n_stages,
                "t_stage": _ADC.t_stage,
                "e_stage": _ADC.e_stage,
                "threshold_max": 64,
            },
            "device_iv": {"n_devices": 60, "vg_step": 0.01},
            "hdc": {
                "k": 16,
                "stride": 1,
                "dimension": 1024,
                "reference_fasta": "",
                "synthetic_reference_length": 0,
                "queries_file": "",
                "threshold": 0,
                "index_path": "",
            },
            "bench": {"inputs": []},
        }
    )


def _merge(defaults, overrides, path=""):
    if isinstance(defaults, dict):
        if not isinstance(overrides, dict):
            raise ConfigurationError(f"config field {path or '<root>'} must be an object")
        merged = {}
        for key, value in overrides.items():
            if key not in defaults:
                raise ConfigurationError(f"unknown config key {path + key!r}")
        for key, dval in defaults.items():
            if key in overrides:
                merged[key] = _merge(dval, overrides[key], f"{path}{key}.")
            else:
                merged[key] = copy.deepcopy(dval)
        return merged
    # leaf: loose type check (ints are acceptable where floats are expected)
    field = path.rstrip(".")
    if isinstance(defaults, bool):
        if not isinstance(overrides, bool):
            raise ConfigurationError(f"config field {field!r} must be a boolean")
    elif isinstance(defaults, (int, float)):
        if isinstance(overrides, bool) or not isinstance(overrides, (int, float)):
            raise ConfigurationError(f"config field {field!r} must be a number")
    elif isinstance(defaults, str):
        if not isinstance(overrides, str):
            raise ConfigurationError(f"config field {field!r} must be a string")
    elif isinstance(defaults, list):
        if not isinstance(overrides, list):
            raise ConfigurationError(f"config field {field!r} must be a list")
    return copy.deepcopy(overrides)


def load_config(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    cfg = _merge(default_config(), raw)
    if cfg["experiment"] not in EXPERIMENTS:
        raise ConfigurationError(
            f"unknown experiment {cfg['experiment']!r}; valid: {', '.join(EXPERIMENTS)}"
        )
    for fmt in cfg["formats"]:
        if fmt not in ("csv", "json", "svg"):
            raise ConfigurationError(f"unknown output format {fmt!r}")
    # Multilevel experiments default to the 4-level parameter set unless the
    # user pinned vth_levels explicitly.
    user_levels = isinstance(raw, dict) and "vth_levels" in raw.get("device", {})
    if cfg["experiment"] == "mcam-worst":
        cfg["mc"]["mode"] = "multilevel"
    if cfg["mc"]["mode"] == "multilevel" and not user_levels:
        cfg["device"]["vth_levels"] = list(MLC4_VTH_LEVELS)
    return cfg


def device_params(cfg: dict) -> DeviceParams:
    d = cfg["device"]
    return DeviceParams(
        vth_levels=tuple(d["vth_levels"]),
        ss=d["ss"],
        i0=d["i0"],
        k_on=d["k_on"],
        sigma_vth=d["sigma_vth"],
    )


def cell_config(cfg: dict) -> CellConfig:
    c = cfg["cell"]
    return CellConfig(rs=c["rs"], vd=c["vd"], limiter_enabled=c["limiter_enabled"])


def mc_config(cfg: dict) -> McExperimentConfig:
    m = cfg["mc"]
    return McExperimentConfig(
        wordlength=m["wordlength"],
        mode=m["mode"],
        trials=m["trials"],
        sigma_vth=cfg["device"]["sigma_vth"],
        limiter_enabled=cfg["cell"]["limiter_enabled"],
        seed=cfg["seed"],
        scenario=m["scenario"],
        m_guard=cfg["ladder"]["m_guard"],
        margin_fraction=m["margin_fraction"],
        params=device_params(cfg),
        cell=cell_config(cfg),
    )


def adc_config(cfg: dict, i_on_nominal: float) -> AdcConfig:
    a = cfg["adc"]
    return AdcConfig(
        i_on_nominal=i_on_nominal,
        n_stages=a["n_stages"],
        t_stage=a["t_stage"],
        e_stage=a["e_stage"],
    )
