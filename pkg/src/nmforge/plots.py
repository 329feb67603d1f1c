"""Figures written next to the TSV reports."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402


def plot_weakstar(run, path) -> Path:
    """Per-level L1 gaps (one line per probe) and the uniform-bound ledger."""
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    levels = [r.level for r in run.levels]
    for j in range(len(run.probes)):
        ax1.plot(levels, [float(r.gaps[j]) for r in run.levels], marker="o", label=f"probe {j}")
    ax1.set_xlabel("level k")
    ax1.set_ylabel("L1 gap")
    ax1.set_title("I(L_k)(phi*v) vs L(phi*v)")
    if run.probes:
        ax1.legend(fontsize="small")
    ax2.plot(levels, [float(r.integral_lk) for r in run.levels], marker="s", label="int |L_k|^e")
    ax2.axhline(float(run.levels[0].integral_l), color="k", linestyle="--", label="int |L|^e")
    ax2.set_xlabel("level k")
    ax2.set_title(f"uniform bound, e = {run.exponent}")
    ax2.legend(fontsize="small")
    for ax in (ax1, ax2):
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_verify(report, path) -> Path:
    """Passed and failed check counts per suite."""
    path = Path(path)
    summary = report.summary_by_suite()
    names = list(summary)
    ok = [summary[n][0] for n in names]
    bad = [summary[n][1] - summary[n][0] for n in names]
    fig, ax = plt.subplots(figsize=(max(4, 1.1 * len(names)), 3.5))
    ax.bar(names, ok, color="tab:green", label="pass")
    ax.bar(names, bad, bottom=ok, color="tab:red", label="fail")
    ax.set_ylabel("checks")
    ax.set_title(f"verify {report.suite}")
    ax.tick_params(axis="x", rotation=30)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
