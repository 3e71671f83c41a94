"""Report figures written next to the CSV/JSON outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def training_curve(returns, smoothed, path, window: int = 5) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        ax.plot(returns, color="0.7", lw=0.6, label="episode return")
        ax.plot(smoothed, color="tab:blue", lw=1.2, label=f"trailing mean ({window})")
        ax.set_xlabel("episode")
        ax.set_ylabel("return")
        ax.legend(frameon=False)
        return _save(fig, path)


def distance_traces(traces, path, title: str | None = None) -> Path:
    """Gripper-cube distance against time for each trial."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        for tr in traces:
            ax.plot(tr.t, tr.dist, lw=0.8, color="tab:green" if tr.success else "tab:red", alpha=0.8)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("distance (m)")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def success_rates(report: dict, path, reference: dict | None = None) -> Path:
    states = sorted(report)
    rates = [report[s]["success_rate"] for s in states]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.5, 2.8))
        x = range(len(states))
        ax.bar(x, rates, width=0.5, color="tab:blue", label="this run")
        if reference:
            ax.scatter(x, [reference.get(s, float("nan")) for s in states], color="k", marker="_",
                       s=200, label="reference")
            ax.legend(frameon=False)
        ax.set_xticks(list(x))
        ax.set_xticklabels([str(s) for s in states])
        ax.set_xlabel("WMO sea state")
        ax.set_ylabel("success rate")
        ax.set_ylim(0, 1.05)
        return _save(fig, path)
