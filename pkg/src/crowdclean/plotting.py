"""Figure rendering for sweep reports: mean SI-SNR vs input SNR per
method, with 95% CI bars, written next to the CSV/JSON output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METHOD_STYLES = {
    "mean": dict(color="tab:gray", marker="s"),
    "median": dict(color="tab:green", marker="^"),
    "max-elim": dict(color="tab:orange", marker="v"),
    "ours": dict(color="tab:blue", marker="o"),
}


def render_sweep_figure(summary: dict, path, title: str | None = None):
    """Plot the summary produced by sweep.summarize to an image file."""
    by_method: dict[str, list[dict]] = {}
    for point in summary["points"]:
        by_method.setdefault(point["method"], []).append(point)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for method, points in by_method.items():
        points = sorted(points, key=lambda p: p["snr_db"])
        style = METHOD_STYLES.get(method, dict(marker="x"))
        ax.errorbar([p["snr_db"] for p in points],
                    [p["mean_si_snr"] for p in points],
                    yerr=[p["ci95"] for p in points],
                    label=method, capsize=3, **style)
    ax.set_xlabel("input SNR (dB)")
    ax.set_ylabel("output SI-SNR (dB)")
    if title is None:
        title = f"k={summary.get('k')}, {summary.get('trials')} trials"
        if summary.get("packet_loss_sec"):
            title += f", {summary['packet_loss_sec']:g}s packet loss"
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
