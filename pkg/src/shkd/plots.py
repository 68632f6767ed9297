"""Figure rendering for simulation reports and overhead comparisons.

matplotlib is imported lazily with the Agg backend so headless batch runs
(and the CSV-only code paths) never pay for a display stack.
"""

from __future__ import annotations

import os
from typing import Sequence

RC = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.axisbelow": True,
    "font.size": 10,
    "legend.fontsize": 9,
    "savefig.bbox": "tight",
}


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    plt.rcParams.update(RC)
    return plt


def _save(fig, path: str) -> str:
    fig.savefig(path)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def render_run_figures(report, outdir: str) -> list[str]:
    """Per-session bandwidth and recovery-outcome charts for one run."""
    plt = _plt()
    os.makedirs(outdir, exist_ok=True)
    written = []
    sessions = [s.session for s in report.sessions]
    if not sessions:
        return written

    fig, ax = plt.subplots()
    ax.plot(sessions, [s.element_bits for s in report.sessions], "o-", label="measured element bits")
    ax.plot(
        sessions,
        [s.formula_bits for s in report.sessions],
        "s--",
        label="(t_j + 1) ceil(log2 q) bits",
    )
    ax.plot(sessions, [s.total_bytes * 8 for s in report.sessions], "^:", label="total wire bits")
    ax.set_xlabel("session")
    ax.set_ylabel("bits")
    ax.set_title(f"Broadcast bandwidth per session (q={report.q}, {report.kind})")
    ax.legend()
    written.append(_save(fig, os.path.join(outdir, "bandwidth.png")))

    fig, ax = plt.subplots()
    received = [s.received for s in report.sessions]
    healed = [s.healed for s in report.sessions]
    unrec = [s.unrecoverable for s in report.sessions]
    ax.bar(sessions, received, label="received", color="#4c72b0")
    ax.bar(sessions, healed, bottom=received, label="healed", color="#55a868")
    ax.bar(
        sessions,
        unrec,
        bottom=[r + h for r, h in zip(received, healed)],
        label="unrecoverable",
        color="#c44e52",
    )
    ax.set_xlabel("session")
    ax.set_ylabel("members")
    ax.set_title("Recovery outcomes per session")
    ax.legend()
    written.append(_save(fig, os.path.join(outdir, "outcomes.png")))
    return written


def render_bench_figures(csv_rows: Sequence[Sequence[str]], stem: str) -> list[str]:
    """Grouped bar charts (log scale) for the scheme comparison CSV."""
    plt = _plt()
    header = list(csv_rows[0])
    idx = {name: header.index(name) for name in ("scheme", "metric", "value")}
    written = []
    for metric, unit in (("communication", "bits"), ("computation", "multiplications")):
        pairs = [
            (r[idx["scheme"]], int(r[idx["value"]]))
            for r in csv_rows[1:]
            if r[idx["metric"]] == metric
        ]
        if not pairs:
            continue
        fig, ax = plt.subplots()
        names = [p[0] for p in pairs]
        values = [p[1] for p in pairs]
        bars = ax.bar(names, values, color="#4c72b0")
        ax.bar_label(bars, fmt="%d", padding=2, fontsize=8)
        ax.set_yscale("log")
        ax.set_ylabel(unit)
        ax.set_title(f"{metric.capitalize()} overhead per scheme")
        ax.tick_params(axis="x", rotation=20)
        written.append(_save(fig, f"{stem}_{metric}.png"))
    return written
