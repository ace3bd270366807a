"""Figure rendering for the report paths of the command line.

Every function takes already-computed rows and writes a PNG next to the CSV
the caller is emitting; nothing here recomputes values.  The Agg backend is
forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["decay_figure", "checks_figure"]


def decay_figure(records, path, *, title: str = "value under parallel repetition"):
    """Exact value, theorem bound, and product lower bound against n.

    ``records`` is a sequence with ``n``, ``value``, ``bound`` and ``lower``
    attributes.  The y axis is logarithmic when every plotted point is
    positive (exponential decay then reads as a straight line).
    """
    ns = [r.n for r in records]
    value = [r.value for r in records]
    bound = [r.bound for r in records]
    lower = [r.lower for r in records]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(ns, bound, "s--", color="#b3443c", label="decay bound")
    ax.plot(ns, value, "o-", color="#1f5fa8", label="exact value")
    ax.plot(ns, lower, "^:", color="#3c8a4e", label="product strategy")
    if all(v > 0 for v in value + bound + lower):
        ax.set_yscale("log")
    ax.set_xticks(ns)
    ax.set_xlabel("repetitions n")
    ax.set_ylabel("winning probability")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def checks_figure(rows, path, *, title: str = "verification slack per check"):
    """Horizontal slack bars, one per check row.

    Assertion rows are colored by outcome (positive slack passes); report
    rows, which carry no threshold, are drawn in gray.
    """
    names = [r.name for r in rows]
    slacks = []
    colors = []
    for r in rows:
        try:
            s = float(r.rhs) - float(r.lhs)
        except (OverflowError, ValueError):
            s = 0.0
        slacks.append(s)
        if r.status == "report":
            colors.append("#9a9a9a")
        elif r.status == "ok":
            colors.append("#3c8a4e")
        else:
            colors.append("#b3443c")
    height = max(2.5, 0.34 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(8.5, height))
    pos = range(len(rows))
    ax.barh(pos, slacks, color=colors)
    ax.set_yticks(list(pos))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("slack (rhs - lhs)")
    ax.set_title(title)
    ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
