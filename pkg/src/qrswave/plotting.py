"""Matplotlib figures written next to the CSV/SVG reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .harness import Analysis, SweepReport
from .svg import METRIC_LABELS
from .wavelets import WaveletKind

MARKERS = {WaveletKind.BIOR13: "s", WaveletKind.DB10: "o", WaveletKind.MEXICAN_HAT: "*"}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def plot_sweep(report: SweepReport, path, metrics=("rmm", "mate", "fom")):
    """RMM, MATE and FOM against scale, one panel each."""
    with plt.rc_context(RC):
        fig, axes = plt.subplots(len(metrics), 1, figsize=(5, 2.2 * len(metrics)), sharex=True)
        axes = np.atleast_1d(axes)
        for ax, name in zip(axes, metrics):
            for kind in WaveletKind:
                pts = report.metric(name, kind)
                if pts:
                    x, y = zip(*pts)
                    ax.plot(x, y, marker=MARKERS[kind], mfc="none", label=kind.value)
            ax.set_ylabel(METRIC_LABELS[name])
        axes[0].legend(frameon=False)
        axes[-1].set_xlabel("Scale")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_signal_characteristics(a: Analysis, path, title: str = ""):
    """Raw ECG, y[n], envelope with threshold, and detected vs reference R peaks."""
    fs = a.x.fs
    t = a.x.start_time + np.arange(len(a.x)) / fs
    with plt.rc_context(RC):
        fig, ax = plt.subplots(4, 1, figsize=(7, 7), sharex=True)
        ax[0].plot(t, a.x.samples, lw=0.8, color="k")
        ax[0].set_ylabel("x[n] (mV)")
        ax[1].plot(t, a.y.samples, lw=0.8, color="k")
        ax[1].set_ylabel("y[n]")
        ax[2].plot(t, a.z.samples, lw=0.8, ls=":", color="k")
        ax[2].axhline(a.threshold, lw=1.6, color="k")
        ax[2].set_ylabel("z[n]")
        ax[3].plot(t, a.x.samples, lw=0.8, color="k")
        det = np.array([d.tR for d in a.detections], dtype=int)
        ref = np.array([b.sample_index for b in a.annotations], dtype=int)
        if det.size:
            ax[3].plot(t[det], a.x.samples[det], "s", mfc="none", color="tab:blue", label="detector")
        ref = ref[(ref >= 0) & (ref < len(t))]
        if ref.size:
            ax[3].plot(t[ref], a.x.samples[ref], "*", color="tab:red", label="reference")
        ax[3].legend(frameon=False, loc="upper right")
        ax[3].set_ylabel("x[n] (mV)")
        ax[3].set_xlabel("Time (s)")
        if title:
            ax[0].set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
