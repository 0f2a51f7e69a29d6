"""Render quality-latency trade-off figures from sweep rows.

One PNG per curve family, written alongside the sweep's CSV/JSON output:
lag vs BLEU, lag vs WER, lag vs erasure, and erasure vs WER. Rows sharing a
mask size K form one series with the free-token budget F varying along it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_STYLE = {
    "figure.figsize": (5.0, 3.6),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 7,
}

FIGURES = (
    ("al_vs_bleu", "al_translation", "bleu", "average lag (s, translation)", "BLEU"),
    ("al_vs_wer", "al_transcript", "wer", "average lag (s, transcript)", "WER"),
    ("al_vs_ne", "al_translation", "ne_combined", "average lag (s, translation)", "normalized erasure"),
    ("ne_vs_wer", "ne_combined", "wer", "normalized erasure", "WER"),
)


def _series_by_k(rows: list[dict]) -> dict[int, list[dict]]:
    series: dict[int, list[dict]] = {}
    for row in rows:
        series.setdefault(row["k"], []).append(row)
    for k in series:
        series[k].sort(key=lambda r: r["f"])
    return series


def render_sweep_figures(rows: list[dict], out_dir: str | Path) -> list[Path]:
    """Write the four trade-off figures; returns the created file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    series = _series_by_k(rows)
    with plt.rc_context(_STYLE):
        for name, x_field, y_field, x_label, y_label in FIGURES:
            fig, ax = plt.subplots()
            for k, k_rows in sorted(series.items()):
                xs = [r[x_field] for r in k_rows if r[x_field] is not None and r[y_field] is not None]
                ys = [r[y_field] for r in k_rows if r[x_field] is not None and r[y_field] is not None]
                if not xs:
                    continue
                ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=0.9, label=f"K={k}")
            ax.set_xlabel(x_label)
            ax.set_ylabel(y_label)
            ax.legend(ncol=3, frameon=False)
            fig.tight_layout()
            path = out_dir / f"{name}.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)
    return written
