"""Figures rendered from the ``*.plot.csv`` files, so every picture is
reproducible from the numbers written next to it."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .reports import read_csv  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.frameon": False,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
}


def _float(s: str) -> float | None:
    if s in ("", "nan"):
        return None
    return float(s)


def render_plot_csv(csv_path, png_path=None) -> Path:
    """Line plot of every ``series`` in a plot-data CSV (columns x, y, series).

    Metadata keys ``title``, ``x``, ``y`` and ``yscale`` label the axes;
    points with an empty, nan or nonpositive y on a log axis are dropped.
    """
    csv_path = Path(csv_path)
    png_path = Path(png_path) if png_path else csv_path.with_name(csv_path.name.replace(".plot.csv", ".png"))
    meta, header, rows = read_csv(csv_path)
    ix, iy = header.index("x"), header.index("y")
    iseries = header.index("series") if "series" in header else None
    logy = meta.get("yscale") == "log"
    series: dict[str, tuple[list, list]] = {}
    for row in rows:
        x, y = _float(row[ix]), _float(row[iy])
        if x is None or y is None or (logy and y <= 0):
            continue
        key = row[iseries] if iseries is not None else ""
        xs, ys = series.setdefault(key, ([], []))
        xs.append(x)
        ys.append(y)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, marker="o", label=label or None)
        if logy:
            ax.set_yscale("log")
        ref = meta.get("reference")
        if ref:
            ax.axhline(float(ref), color="0.4", linestyle="--", linewidth=0.9)
        ax.set_xlabel(meta.get("x", "x"))
        ax.set_ylabel(meta.get("y", "y"))
        ax.set_title(meta.get("title", ""))
        if len(series) > 1 or any(series):
            ax.legend()
        fig.tight_layout()
        fig.savefig(png_path, metadata={"Software": None})
        plt.close(fig)
    return png_path
