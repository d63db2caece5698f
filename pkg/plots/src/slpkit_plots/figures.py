"""Render static figures from slpkit experiment CSVs.

Input contracts (shared with the experiment harness, by schema only):

* sweep CSV header:
  ``family,method,N,K,axis_value,metric_name,metric_value,trials_used,seed,wall_time_ms``
* scatter CSV header: ``user,re,im,symbol_index,method``
* constellation JSON: ``{"name": str, "normalize": bool, "points": [[re, im], ...]}``
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from scipy.spatial import Voronoi, voronoi_plot_2d  # noqa: E402

SWEEP_HEADER = ("family", "method", "N", "K", "axis_value", "metric_name",
                "metric_value", "trials_used", "seed", "wall_time_ms")
SCATTER_HEADER = ("user", "re", "im", "symbol_index", "method")

#: kind -> (expected family, selected metric, default axis labels)
SWEEP_KINDS = {
    "feasibility": ("feasibility_sweep", "feasibility_probability",
                    "total power budget P [dBW]", "feasibility probability"),
    "ser": ("ser_sweep", "ser",
            "SINR threshold [dB]", "symbol error rate"),
    "throughput": ("throughput_sweep", "throughput_bits",
                   "SINR threshold [dB]", "throughput [bits/symbol]"),
    "maxmin": ("maxmin_sweep", "mean_min_sinr_db",
               "total power budget P [dBW]", "worst-user SINR [dB]"),
    "dimension": ("dimension_sweep", "mean_min_sinr_db",
                  "system dimension N = K", "worst-user SINR [dB]"),
    "bcd_iters": ("bcd_convergence", "mean_iterations",
                  "system dimension N = K", "mean iterations to converge"),
}
FIGURE_KINDS = tuple(SWEEP_KINDS) + ("scatter",)

_STYLE = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.marker": "o",
    "lines.markersize": 4,
    "svg.hashsalt": "slpkit-plots",
}


class PlotError(Exception):
    """Invalid figure spec or malformed input CSV."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv: Path
    out: Path
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    constellation: Path | None = None   # scatter overlay source
    scale: float = 1.0                  # received-signal scale for overlay

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; "
                            f"expected one of {', '.join(FIGURE_KINDS)}")
        object.__setattr__(self, "csv", Path(self.csv))
        object.__setattr__(self, "out", Path(self.out))
        if self.constellation is not None:
            object.__setattr__(self, "constellation",
                               Path(self.constellation))
        if self.out.suffix.lower() not in (".png", ".svg"):
            raise PlotError("output must be a .png or .svg file")
        if not float(self.scale) > 0:
            raise PlotError("scale must be positive")


def spec_from_dict(d: dict) -> FigureSpec:
    known = {"kind", "csv", "out", "title", "xlabel", "ylabel",
             "constellation", "scale"}
    unknown = set(d) - known
    if unknown:
        raise PlotError(f"unknown spec keys: {sorted(unknown)}")
    for req in ("kind", "csv", "out"):
        if req not in d:
            raise PlotError(f"spec is missing required key {req!r}")
    return FigureSpec(**d)


def load_spec(path) -> FigureSpec:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise PlotError(f"spec is not valid JSON: {e}") from e
    if not isinstance(d, dict):
        raise PlotError("spec must be a JSON object")
    return spec_from_dict(d)


def _read_rows(path: Path, header) -> list:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise PlotError(f"cannot read {path}: {e}") from e
    if not rows:
        raise PlotError(f"{path} is empty")
    if tuple(rows[0]) != tuple(header):
        raise PlotError(f"{path} has header {rows[0]}; "
                        f"expected {list(header)}")
    if not rows[1:]:
        raise PlotError(f"{path} has no data rows")
    return rows[1:]


def _save(fig, out: Path):
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Date": None} if out.suffix == ".svg" else None)
    plt.close(fig)


def _render_sweep(spec: FigureSpec) -> Path:
    family, metric, xlab, ylab = SWEEP_KINDS[spec.kind]
    rows = _read_rows(spec.csv, SWEEP_HEADER)
    series: dict[str, list] = {}
    for r in rows:
        if len(r) != len(SWEEP_HEADER):
            raise PlotError(f"malformed row in {spec.csv}: {r}")
        if r[0] != family:
            raise PlotError(f"{spec.csv} holds family {r[0]!r}, but figure "
                            f"kind {spec.kind!r} expects {family!r}")
        if r[5] != metric:
            continue
        series.setdefault(r[1], []).append((float(r[4]), float(r[6])))
    if not series:
        raise PlotError(f"{spec.csv} has no rows with metric {metric!r}")

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name in sorted(series):
            pts = sorted(series[name])
            x, y = zip(*pts)
            ax.plot(x, y, label=name)
        if spec.kind == "ser":
            ymax = max(v for s in series.values() for _, v in s)
            if ymax > 0:
                ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel or xlab)
        ax.set_ylabel(spec.ylabel or ylab)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(fontsize=8)
        _save(fig, spec.out)
    return spec.out


def _load_constellation(path: Path) -> np.ndarray:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise PlotError(f"cannot read constellation {path}: {e}") from e
    pts = np.asarray(d.get("points", []), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise PlotError(f"{path} must hold at least 3 two-dimensional points")
    if d.get("normalize"):
        pts = pts / np.sqrt(np.mean(np.sum(pts**2, axis=1)))
    return pts


def _render_scatter(spec: FigureSpec) -> Path:
    rows = _read_rows(spec.csv, SCATTER_HEADER)
    try:
        user = np.array([int(r[0]) for r in rows])
        re = np.array([float(r[1]) for r in rows])
        im = np.array([float(r[2]) for r in rows])
    except (ValueError, IndexError) as e:
        raise PlotError(f"malformed row in {spec.csv}: {e}") from e

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.4, 5.4))
        for k in np.unique(user):
            m = user == k
            ax.plot(re[m], im[m], linestyle="none", marker=".",
                    markersize=3, alpha=0.6, label=f"user {k}")
        if spec.constellation is not None:
            pts = _load_constellation(spec.constellation) * float(spec.scale)
            vor = Voronoi(pts)
            voronoi_plot_2d(vor, ax=ax, show_points=False,
                            show_vertices=False, line_colors="gray",
                            line_styles="dashed", line_width=1.0)
            ax.plot(pts[:, 0], pts[:, 1], linestyle="none", marker="x",
                    markersize=7, color="black", label="constellation")
        lim = 1.05 * max(np.abs(re).max(), np.abs(im).max())
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.set_xlabel(spec.xlabel or "in-phase")
        ax.set_ylabel(spec.ylabel or "quadrature")
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(fontsize=7, loc="upper right")
        _save(fig, spec.out)
    return spec.out


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written path."""
    if spec.kind == "scatter":
        return _render_scatter(spec)
    return _render_sweep(spec)
