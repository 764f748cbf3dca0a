"""Figures for sweep results: average UoI and AoI against the delay tail y.

matplotlib is imported lazily so the solvers never depend on it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
}

MARKERS = {"optimal": "o", "index": "s", "zero-wait": "^", "aoi-optimal": "d"}
LABELS = {
    "optimal": "UoI-optimal",
    "index": "Index-based",
    "zero-wait": "Zero wait",
    "aoi-optimal": "AoI-optimal",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_sweep(rows: Iterable[Mapping[str, object]], path: str | Path, title: str | None = None) -> Path:
    """Two panels (UoI, AoI) with one line per policy and 3-sigma error bars.

    ``rows`` are dicts as returned by :func:`uoi_sampling.report.read_sweep_csv`
    or the dataclass fields of a sweep row.
    """
    plt = _pyplot()
    series: dict[str, list[Mapping[str, object]]] = {}
    for row in rows:
        if row.get("error") or row.get("avg_uoi") is None:
            continue
        series.setdefault(str(row["policy"]), []).append(row)

    with plt.rc_context(STYLE):
        fig, (ax_u, ax_a) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        for name, pts in series.items():
            pts = sorted(pts, key=lambda r: r["y"])
            ys = [r["y"] for r in pts]
            kw = dict(marker=MARKERS.get(name, "x"), label=LABELS.get(name, name), capsize=2)
            ax_u.errorbar(ys, [r["avg_uoi"] for r in pts], yerr=[3 * (r["stderr_uoi"] or 0) for r in pts], **kw)
            ax_a.errorbar(ys, [r["avg_aoi"] for r in pts], yerr=[3 * (r["stderr_aoi"] or 0) for r in pts], **kw)
        ax_u.set_xlabel("$y$")
        ax_u.set_ylabel("Average UoI (bits)")
        ax_a.set_xlabel("$y$")
        ax_a.set_ylabel("Average AoI (slots)")
        ax_u.legend()
        if title:
            fig.suptitle(title)
        path = Path(path)
        fig.savefig(path)
        plt.close(fig)
    return path
