"""Figure rendering for curve tables (matplotlib, file output only)."""
from __future__ import annotations

import math
from pathlib import Path

from .tables import CurveTable

LABELS = {
    "bm-cdf": ("T", "P(tau <= T)"),
    "bm-mean": ("", "E[tau]"),
    "nonrev": ("C", "invariant mean of |x|^2"),
    "lq-control": ("kappa", "discounted cost"),
    "queue": ("epsilon", "relative error"),
    "vasicek": (None, "option value"),
    "rate-drop": ("t_f", "option value"),
}


def render(table: CurveTable, path: str | Path) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    xlabel, ylabel = LABELS.get(table.scenario, (table.sweep_name, "QoI"))
    fig, ax = plt.subplots(figsize=(6, 4))
    rows = table.rows
    if len(rows) == 1 and rows[0].sweep is None:
        r = rows[0]
        ax.errorbar([0], [r.baseline], yerr=[[r.baseline - r.lower], [r.upper - r.baseline]],
                    fmt="ko", capsize=8, label="bounds")
        if not math.isnan(r.ref_lower):
            ax.plot([0.2, 0.2], [r.ref_lower, r.ref_upper], "r_", markersize=20, label="reference")
        ax.set_xticks([])
    else:
        x = [r.sweep for r in rows]
        lo, up = table.column("lower"), table.column("upper")
        ax.fill_between(x, lo, up, color="0.85", label="bounded region")
        ax.plot(x, lo, "b--")
        ax.plot(x, up, "b--", label="bounds")
        ax.plot(x, table.column("baseline"), "k-", label="baseline")
        rl, ru = table.column("ref_lower"), table.column("ref_upper")
        if not all(math.isnan(v) for v in rl + ru):
            ax.plot(x, rl, "r-.")
            ax.plot(x, ru, "r-.", label="reference")
        ax.set_xlabel(xlabel or table.sweep_name or "")
    ax.set_ylabel(ylabel)
    ax.set_title(table.scenario)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
