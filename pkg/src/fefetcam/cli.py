"""Batch CLI: runs experiments from JSON configs and writes artifacts.

Subcommands mirror the experiment kinds; every run writes CSV/JSON (and
optionally SVG) artifacts into the output directory and prints a one-line
summary.  Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import config as cfgmod
from . import hdc, plots
from .cam import make_ladder
from .device import clamped_current, fet_current, sample_vth_offsets
from .errors import FefetCamError, NumericalError
from .montecarlo import (
    run_bcam_sweep,
    run_limiter_ablation,
    run_mcam_worst_case,
    result_rows,
    result_summary,
)
from .sensing import sense_cost, stages_for_threshold, thermometer_code

MODEL_NOTE = "model-derived, not paper-validated"


def _atomic_write(path: str, text: str):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12e}"
    return str(value)


def write_csv(path: str, header: list[str], rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: str, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out(cfg, name):
    return os.path.join(cfg["out_dir"], name)


def _wants(cfg, fmt):
    return fmt in cfg["formats"]


def run_device_iv(cfg: dict) -> str:
    params = cfgmod.device_params(cfg)
    cell = cfgmod.cell_config(cfg)
    n_dev = int(cfg["device_iv"]["n_devices"])
    step = float(cfg["device_iv"]["vg_step"])
    vg = np.arange(min(params.vth_levels) - 0.5, max(params.vth_levels) + 0.7 + step / 2, step)
    eps = sample_vth_offsets(params, n_dev, cfg["seed"])

    rows = []
    lim_curves, bare_curves = [], []
    for d in range(n_dev):
        for state, vth0 in enumerate(params.vth_levels):
            vth = vth0 + eps[d]
            bare = fet_current(vg, cell.vd, vth, params)
            lim = clamped_current(vg, np.full_like(vg, vth), cell, params)
            lim_curves.append(lim)
            bare_curves.append(bare)
            rows.extend(
                (d, state, float(v), float(ib), float(il))
                for v, ib, il in zip(vg, bare, lim)
            )
    if _wants(cfg, "csv"):
        write_csv(_out(cfg, "device_iv.csv"), ["device", "state", "vg", "i_bare", "i_limited"], rows)
    if _wants(cfg, "json"):
        cov_lim = float(np.std([c[-1] for c in lim_curves]) / np.mean([c[-1] for c in lim_curves]))
        cov_bare = float(np.std([c[-1] for c in bare_curves]) / np.mean([c[-1] for c in bare_curves]))
        write_json(
            _out(cfg, "device_iv_summary.json"),
            {"n_devices": n_dev, "cov_on_limited": cov_lim, "cov_on_bare": cov_bare},
        )
    if _wants(cfg, "svg"):
        plots.plot_iv_curves(vg, lim_curves, bare_curves, _out(cfg, "device_iv.svg"))
    return f"device-iv: {n_dev} devices, {len(vg)} bias points per state"


def _write_mc_artifacts(cfg, result, stem):
    if _wants(cfg, "csv"):
        write_csv(
            _out(cfg, f"{stem}.csv"),
            ["scenario", "trial", "i_mls1", "i_mls2", "decoded", "truth"],
            ((lbl, t, float(i1), float(i2), dec, tr) for lbl, t, i1, i2, dec, tr in result_rows(result)),
        )
    if _wants(cfg, "json"):
        write_json(_out(cfg, f"{stem}_summary.json"), result_summary(result))


def run_bcam_sweep_exp(cfg: dict) -> str:
    mc = cfgmod.mc_config(cfg)
    result = run_bcam_sweep(mc)
    _write_mc_artifacts(cfg, result, "bcam_sweep")
    if _wants(cfg, "svg"):
        plots.plot_sweep(result, _out(cfg, "bcam_sweep.svg"))
    return (
        f"bcam-sweep: N={mc.wordlength} trials={mc.trials} "
        f"error_rate={result.error_rate:.2e} margin={result.sensing_margin:.3f}*i_on"
    )


def run_limiter_ablation_exp(cfg: dict) -> str:
    mc = cfgmod.mc_config(cfg)
    pair = run_limiter_ablation(mc)
    _write_mc_artifacts(cfg, pair.with_limiter.result, "ablation_with_limiter")
    _write_mc_artifacts(cfg, pair.without_limiter.result, "ablation_without_limiter")
    if _wants(cfg, "json"):
        write_json(
            _out(cfg, "ablation_summary.json"),
            {
                "with_limiter": {
                    "overlap_step1": pair.with_limiter.overlap_step1,
                    "overlap_step2": pair.with_limiter.overlap_step2,
                    "error_rate": pair.with_limiter.result.error_rate,
                },
                "without_limiter": {
                    "overlap_step1": pair.without_limiter.overlap_step1,
                    "overlap_step2": pair.without_limiter.overlap_step2,
                    "error_rate": pair.without_limiter.result.error_rate,
                },
            },
        )
    if _wants(cfg, "svg"):
        plots.plot_distributions(pair.with_limiter.result, 2, _out(cfg, "ablation_with_limiter.svg"))
        plots.plot_distributions(pair.without_limiter.result, 2, _out(cfg, "ablation_without_limiter.svg"))
    return (
        f"limiter-ablation: step2 overlap with={pair.with_limiter.overlap_step2:.4f} "
        f"without={pair.without_limiter.overlap_step2:.4f}"
    )


def run_mcam_worst_exp(cfg: dict) -> str:
    mc = cfgmod.mc_config(cfg)
    result = run_mcam_worst_case(mc)
    _write_mc_artifacts(cfg, result, "mcam_worst")
    if _wants(cfg, "svg"):
        plots.plot_distributions(result, 1, _out(cfg, "mcam_worst_step1.svg"))
        plots.plot_distributions(result, 2, _out(cfg, "mcam_worst_step2.svg"))
    return f"mcam-worst: N={mc.wordlength} trials={mc.trials} error_rate={result.error_rate:.2e}"


def run_adc_sweep(cfg: dict) -> str:
    from dataclasses import replace

    cell = cfgmod.cell_config(cfg)
    adc = cfgmod.adc_config(cfg, cell.i_clamp)
    i_grid = np.linspace(0.0, (adc.n_stages + 1) * adc.i_on_nominal, 4 * adc.n_stages + 5)
    codes = thermometer_code(i_grid, adc)
    t_max = int(cfg["adc"]["threshold_max"])
    thresholds = list(range(1, t_max + 1))
    # The threshold sweep needs threshold+1 stages at the top end.
    cost_adc = replace(adc, n_stages=max(adc.n_stages, t_max + 1))
    costs = [sense_cost(stages_for_threshold(t), cost_adc) for t in thresholds]
    lat = [c.latency for c in costs]
    en = [c.energy for c in costs]
    # R^2 of a straight-line fit; 1.0 by construction of the serial model.
    fit = np.polyfit(thresholds, lat, 1)
    resid = np.asarray(lat) - np.polyval(fit, thresholds)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((lat - np.mean(lat)) ** 2))
    if _wants(cfg, "csv"):
        write_csv(_out(cfg, "adc_codes.csv"), ["i_ml", "code"], zip(map(float, i_grid), map(int, codes)))
        write_csv(
            _out(cfg, "sense_cost.csv"),
            ["threshold", "stages_used", "latency_s", "energy_j"],
            (
                (t, stages_for_threshold(t), float(l), float(e))
                for t, l, e in zip(thresholds, lat, en)
            ),
        )
    if _wants(cfg, "json"):
        write_json(
            _out(cfg, "adc_summary.json"),
            {
                "n_stages": adc.n_stages,
                "t_stage": adc.t_stage,
                "e_stage": adc.e_stage,
                "latency_fit_r2": r2,
                "note": MODEL_NOTE,
            },
        )
    if _wants(cfg, "svg"):
        plots.plot_sense_cost(thresholds, lat, en, _out(cfg, "sense_cost.svg"))
    return f"adc-sweep: {adc.n_stages} stages, latency fit R^2={r2:.6f}"


def _load_reference(cfg: dict) -> str:
    h = cfg["hdc"]
    if h["reference_fasta"]:
        with open(h["reference_fasta"]) as fh:
            return hdc.read_fasta(fh.read())
    n = int(h["synthetic_reference_length"])
    if n <= 0:
        raise cfgmod.ConfigurationError(
            "hdc.reference_fasta or hdc.synthetic_reference_length required"
        )
    rng = np.random.Generator(np.random.Philox(key=int(cfg["seed"]) % (1 << 128)))
    return "".join(hdc.ALPHABET[i] for i in rng.integers(0, 4, size=n))


def _index_path(cfg: dict) -> str:
    return cfg["hdc"]["index_path"] or _out(cfg, "genome_index.npz")


def run_genome_build(cfg: dict) -> str:
    h = cfg["hdc"]
    reference = _load_reference(cfg)
    index = hdc.build_index(
        reference,
        k=int(h["k"]),
        stride=int(h["stride"]),
        d=int(h["dimension"]),
        params=cfgmod.device_params(cfg),
        cell=cfgmod.cell_config(cfg),
        m_guard=cfg["ladder"]["m_guard"],
        seed=cfg["seed"],
    )
    path = _index_path(cfg)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    np.savez_compressed(
        path,
        packed=index.bank.packed,
        positions=index.positions,
        item_vectors=index.item_memory.vectors,
        reference=np.frombuffer(reference.encode(), dtype=np.uint8),
    )
    meta = {
        "k": index.k,
        "dimension": index.dimension,
        "stride": index.stride,
        "seed": cfg["seed"],
        "n_entries": index.n_entries,
        "segments_per_entry": index.segments_per_entry,
        "device": cfg["device"],
        "cell": cfg["cell"],
        "ladder": cfg["ladder"],
    }
    write_json(path + ".meta.json", meta)
    return f"genome-build: {index.n_entries} entries, k={index.k}, D={index.dimension}"


def load_index(path: str) -> hdc.GenomeIndex:
    with open(path + ".meta.json") as fh:
        meta = json.load(fh)
    data = np.load(path)
    params = cfgmod.device_params({"device": meta["device"]})
    cell = cfgmod.cell_config({"cell": meta["cell"]})
    im = hdc.ItemMemory(vectors=data["item_vectors"], seed=meta["seed"])
    bank = hdc.PackedCamBank(
        packed=data["packed"], params=params, cell=cell, seed=meta["seed"]
    )
    return hdc.GenomeIndex(
        k=meta["k"],
        dimension=meta["dimension"],
        stride=meta["stride"],
        item_memory=im,
        bank=bank,
        positions=data["positions"],
        ladder=make_ladder(params, meta["ladder"]["m_guard"]),
    )


def run_genome_query(cfg: dict) -> str:
    h = cfg["hdc"]
    if not h["queries_file"]:
        raise cfgmod.ConfigurationError("hdc.queries_file is required for genome-query")
    index = load_index(_index_path(cfg))
    with open(h["queries_file"]) as fh:
        patterns = hdc.read_query_list(fh.read())
    threshold = int(h["threshold"])
    rows = []
    n_hits = 0
    for qid, pattern in enumerate(patterns):
        res = hdc.query(index, pattern, threshold)
        n_hits += len(res.matches)
        rows.extend((qid, off, dist) for off, dist in res.matches)
    if _wants(cfg, "csv"):
        write_csv(_out(cfg, "query_results.csv"), ["query_id", "offset", "distance"], rows)
    if _wants(cfg, "json"):
        write_json(
            _out(cfg, "query_summary.json"),
            {
                "n_queries": len(patterns),
                "threshold": threshold,
                "n_matches": n_hits,
                "n_entries": index.n_entries,
                "segments_per_entry": index.segments_per_entry,
            },
        )
    return f"genome-query: {len(patterns)} queries, {n_hits} matches at threshold {threshold}"


def bench_report(cfg: dict) -> str:
    """Consolidate prior run summaries into one report; missing files skipped."""
    adc = cfg["adc"]
    runs, warnings = [], []
    for path in cfg["bench"]["inputs"]:
        if not os.path.exists(path):
            warnings.append(f"missing input skipped: {path}")
            continue
        with open(path) as fh:
            summary = json.load(fh)
        entry = {"source": path}
        for key in ("error_rate", "sensing_margin", "overlap_fraction", "wordlength"):
            if key in summary:
                entry[key] = summary[key]
        if "segments_per_entry" in summary:
            stages = int(summary.get("threshold", 0)) + 1
            segs = summary["segments_per_entry"]
            entries = summary["n_entries"]
            entry["latency_per_query_s"] = stages * adc["t_stage"] * segs * entries
            entry["energy_per_query_j"] = stages * adc["e_stage"] * segs * entries
        runs.append(entry)
    margins = [r["sensing_margin"] for r in runs if "sensing_margin" in r]
    errors = [r["error_rate"] for r in runs if "error_rate" in r]
    report = {
        "note": MODEL_NOTE,
        "warnings": warnings,
        "runs": runs,
        "aggregate": {
            "n_runs": len(runs),
            "min_sensing_margin": min(margins) if margins else None,
            "max_error_rate": max(errors) if errors else None,
        },
    }
    if _wants(cfg, "json"):
        write_json(_out(cfg, "bench_report.json"), report)
    if _wants(cfg, "csv"):
        keys = ["source", "wordlength", "error_rate", "sensing_margin",
                "latency_per_query_s", "energy_per_query_j"]
        write_csv(
            _out(cfg, "bench_report.csv"),
            keys,
            ((r.get(k, "") for k in keys) for r in runs),
        )
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return f"bench-report: {len(runs)} runs aggregated, {len(warnings)} skipped"


RUNNERS = {
    "device-iv": run_device_iv,
    "bcam-sweep": run_bcam_sweep_exp,
    "limiter-ablation": run_limiter_ablation_exp,
    "mcam-worst": run_mcam_worst_exp,
    "adc-sweep": run_adc_sweep,
    "genome-build": run_genome_build,
    "genome-query": run_genome_query,
    "bench-report": bench_report,
}


def run(config_path: str | None, experiment: str | None = None, overrides: dict | None = None) -> int:
    try:
        if config_path:
            with open(config_path) as fh:
                cfg = cfgmod.load_config(fh.read())
        else:
            cfg = cfgmod.load_config("{}")
        if experiment:
            cfg["experiment"] = experiment
        if overrides:
            for key, value in overrides.items():
                if value is not None:
                    cfg[key] = value
        if env_out := os.environ.get("FEFETCAM_OUT"):
            cfg["out_dir"] = env_out
        summary = RUNNERS[cfg["experiment"]](cfg)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (FefetCamError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fefetcam",
        description="1FeFET1R CAM simulator: device, array, sensing, Monte Carlo and HDC genome experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for kind in RUNNERS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON config file (defaults used when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument(
            "--format",
            action="append",
            choices=["csv", "json", "svg"],
            help="output format (repeatable; overrides config formats)",
        )
    args = parser.parse_args(argv)
    overrides = {"seed": args.seed, "out_dir": args.out, "formats": args.format}
    return run(args.config, experiment=args.experiment, overrides=overrides)


if __name__ == "__main__":
    sys.exit(main())
