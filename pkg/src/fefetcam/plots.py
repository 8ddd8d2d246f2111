"""SVG figure output for the CLI experiments.

All figures are written through one helper that strips the creation date
from the SVG metadata, so repeated runs with the same config produce
equivalent artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import os

import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "fefetcam"


def _save(fig, path):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_iv_curves(vg, currents_limited, currents_bare, path):
    """Overlay of per-device I-V sweeps with and without the limiter."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for ax, curves, title in (
        (axes[0], currents_bare, "bare FeFET"),
        (axes[1], currents_limited, "with series limiter"),
    ):
        for c in curves:
            ax.semilogy(vg, np.maximum(c, 1e-16), lw=0.6, alpha=0.6)
        ax.set_xlabel("gate voltage (V)")
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
    axes[0].set_ylabel("drain current (A)")
    fig.tight_layout()
    _save(fig, path)


def plot_sweep(result, path):
    """Mean matchline currents vs mismatch count, with spread bars."""
    ks = [s.truth for s in result.scenarios]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, attr, title in (
        (axes[0], ("mean1", "std1"), "step 1"),
        (axes[1], ("mean2", "std2"), "step 2"),
    ):
        means = [getattr(s, attr[0]) for s in result.scenarios]
        stds = [getattr(s, attr[1]) for s in result.scenarios]
        ax.errorbar(ks, means, yerr=stds, fmt="o-", capsize=3)
        ax.set_xlabel("mismatch count")
        ax.set_ylabel("matchline current (A)")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_distributions(result, step, path):
    """Per-scenario current scatter, one column per scenario."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for i, s in enumerate(result.scenarios):
        samples = s.i_mls1 if step == 1 else s.i_mls2
        x = np.full(len(samples), i, dtype=float)
        x += np.linspace(-0.2, 0.2, len(samples))
        ax.plot(x, samples, ".", ms=2, alpha=0.4)
    ax.set_xticks(range(len(result.scenarios)))
    ax.set_xticklabels([s.label for s in result.scenarios], rotation=45, ha="right")
    ax.set_ylabel(f"step-{step} matchline current (A)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_sense_cost(thresholds, latencies, energies, path):
    """Linear latency/energy scaling with the Hamming threshold."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].plot(thresholds, np.asarray(latencies) * 1e9, "o-")
    axes[0].set_ylabel("search latency (ns)")
    axes[1].plot(thresholds, np.asarray(energies) * 1e15, "o-")
    axes[1].set_ylabel("search energy (fJ)")
    for ax in axes:
        ax.set_xlabel("Hamming distance threshold")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
