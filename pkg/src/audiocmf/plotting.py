"""Figure rendering for CLI reports. All output goes to files (Agg)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .constellation import PeakMap
from .matcher import ForgeryReport
from .spectrogram import Spectrogram

__all__ = ["save_detection_figure", "save_curves_figure"]


def save_detection_figure(spec: Spectrogram, peaks: PeakMap | None,
                          report: ForgeryReport, path, show_dst: bool = True) -> None:
    """Spectrogram with the constellation overlaid and any reported
    source/destination segments shaded. show_dst=False suits cross-file
    reports, where destination times belong to the other recording."""
    fig, ax = plt.subplots(figsize=(11, 4.5))
    duration = spec.duration_s
    nyquist_khz = spec.frame_rate_hz * spec.config.hop / 2000.0
    ax.imshow(spec.values.T, origin="lower", aspect="auto", cmap="magma",
              extent=(0.0, duration, 0.0, nyquist_khz))
    if peaks is not None and len(peaks):
        t = peaks.frames / spec.frame_rate_hz
        f = peaks.bins * nyquist_khz / (spec.num_bins - 1)
        ax.scatter(t, f, s=4, c="cyan", marker=".", alpha=0.6, linewidths=0)
    for i, seg in enumerate(report.segments):
        src_label = "source" if i == 0 else None
        ax.axvspan(seg.src_start_s, seg.src_end_s, color="lime", alpha=0.25, label=src_label)
        if show_dst:
            dst_label = "copy" if i == 0 else None
            ax.axvspan(seg.dst_start_s, seg.dst_end_s, color="red", alpha=0.25, label=dst_label)
    verdict = "copy-move detected" if report.verdict else "clean"
    ax.set_title(f"{verdict} ({len(report.segments)} segment(s))")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (kHz)")
    if report.segments:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_curves_figure(rows: list[dict], path) -> None:
    """Detection-probability families: P_exist vs p, one panel per
    scenario, one line per (k, T)."""
    scenarios = sorted({row["scenario"] for row in rows})
    fig, axes = plt.subplots(1, len(scenarios), figsize=(5.5 * len(scenarios), 4.2),
                             squeeze=False)
    for ax, scenario in zip(axes[0], scenarios):
        subset = [r for r in rows if r["scenario"] == scenario]
        families = sorted({(r["k"], r["T"]) for r in subset})
        for k, duration in families:
            pts = sorted((r["p"], r["p_exist"]) for r in subset
                         if r["k"] == k and r["T"] == duration)
            ax.plot([p for p, _ in pts], [v for _, v in pts],
                    label=f"k={k}, T={duration:g}s")
        f_vals = sorted({r["F"] for r in subset})
        ax.set_title(f"scenario: {scenario} (F={','.join(str(v) for v in f_vals)})")
        ax.set_xlabel("peak survival probability p")
        ax.set_ylabel("P(at least one matching pair)")
        ax.set_xlim(0, 1)
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
