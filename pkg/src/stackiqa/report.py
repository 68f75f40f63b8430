"""CSV reports and SVG plots for the evaluation results.

All writers are byte-deterministic: rows follow fixed orders, floats are
rendered with repr (shortest round-trip form), and the SVG is assembled from
plain strings with fixed coordinate formatting.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

from .errors import DataError
from .evalkit import (
    EvalReport,
    SubsetResult,
    SupporterMatrix,
    per_size_best,
)

BASELINES_CSV = "baselines.csv"
CV_REPORT_CSV = "cv_report.csv"
SUBSET_CSV = "subset_search.csv"
SUPPORTERS_CSV = "supporters.csv"
SUBSET_SVG = "subset_scatter.svg"
SUPPORTER_SVG = "supporter_heatmap.svg"


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _ensure_dir(out_dir: str | os.PathLike) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}")
    if not os.access(out, os.W_OK):
        raise DataError(f"output directory {out} is not writable")
    return out


def write_baselines_csv(
    rows: list[tuple[str, float, int]], out_dir: str | os.PathLike
) -> Path:
    path = _ensure_dir(out_dir) / BASELINES_CSV
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["metric_id", "accuracy", "n"])
        for mid, acc, n in rows:
            w.writerow([mid, repr(acc), n])
    return path


def write_cv_report_csv(report: EvalReport, out_dir: str | os.PathLike) -> Path:
    path = _ensure_dir(out_dir) / CV_REPORT_CSV
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["cycle", "accuracy", "n_train", "n_test"])
        for c in report.cycles:
            w.writerow([c.cycle, repr(c.accuracy), c.n_train, c.n_test])
        w.writerow(["median", repr(report.median_accuracy), "", ""])
    return path


def write_subset_csv(
    results: list[SubsetResult], out_dir: str | os.PathLike
) -> Path:
    path = _ensure_dir(out_dir) / SUBSET_CSV
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["size", "metric_ids", "median_accuracy"])
        for r in results:
            w.writerow([r.size, ",".join(r.metric_ids), repr(r.median_accuracy)])
    return path


def write_supporters_csv(
    matrix: SupporterMatrix, out_dir: str | os.PathLike
) -> Path:
    path = _ensure_dir(out_dir) / SUPPORTERS_CSV
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["supported", "supporter", "accuracy", "count"])
        for s in matrix.metric_ids:
            for t in matrix.metric_ids:
                cell = matrix.cells.get((s, t))
                if cell is None:
                    continue
                w.writerow([s, t, repr(cell.accuracy), cell.count])
    return path


def _svg_header(width: int, height: int) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def write_subset_scatter_svg(
    results: list[SubsetResult], out_dir: str | os.PathLike
) -> Path:
    """Scatter of median accuracy vs subset size with the per-size best marked."""
    path = _ensure_dir(out_dir) / SUBSET_SVG
    width, height = 640, 440
    ml, mr, mt, mb = 60, 20, 30, 50
    plot_w, plot_h = width - ml - mr, height - mt - mb

    sizes = sorted({r.size for r in results})
    accs = [r.median_accuracy for r in results]
    lo = min(accs)
    hi = max(accs)
    span = (hi - lo) or 1.0
    lo -= 0.05 * span
    hi += 0.05 * span

    def sx(size: float) -> float:
        if len(sizes) == 1:
            return ml + plot_w / 2
        return ml + (size - sizes[0]) / (sizes[-1] - sizes[0]) * plot_w

    def sy(acc: float) -> float:
        return mt + (hi - acc) / (hi - lo) * plot_h

    parts = [_svg_header(width, height)]
    parts.append(
        f'<line x1="{ml}" y1="{mt + plot_h}" x2="{ml + plot_w}" '
        f'y2="{mt + plot_h}" stroke="black"/>\n'
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + plot_h}" '
        'stroke="black"/>\n'
    )
    for s in sizes:
        x = sx(s)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{mt + plot_h}" x2="{_fmt(x)}" '
            f'y2="{mt + plot_h + 5}" stroke="black"/>\n'
            f'<text x="{_fmt(x)}" y="{mt + plot_h + 20}" font-size="12" '
            f'text-anchor="middle">{s}</text>\n'
        )
    for k in range(5):
        acc = lo + k * (hi - lo) / 4
        yy = sy(acc)
        parts.append(
            f'<line x1="{ml - 5}" y1="{_fmt(yy)}" x2="{ml}" y2="{_fmt(yy)}" '
            'stroke="black"/>\n'
            f'<text x="{ml - 8}" y="{_fmt(yy + 4)}" font-size="11" '
            f'text-anchor="end">{acc:.3f}</text>\n'
        )
    parts.append(
        f'<text x="{ml + plot_w // 2}" y="{height - 12}" font-size="13" '
        'text-anchor="middle">subset size</text>\n'
        f'<text x="16" y="{mt + plot_h // 2}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 16 {mt + plot_h // 2})">'
        "median accuracy</text>\n"
    )
    for r in results:
        parts.append(
            f'<circle cx="{_fmt(sx(r.size))}" cy="{_fmt(sy(r.median_accuracy))}" '
            'r="3" fill="#9aa7b1" fill-opacity="0.7"/>\n'
        )
    best = per_size_best(results)
    best_pts = [(s, b.median_accuracy) for s, b in best.items()]
    if len(best_pts) > 1:
        coords = " ".join(
            f"{_fmt(sx(s))},{_fmt(sy(a))}" for s, a in best_pts
        )
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="#c0392b" '
            'stroke-width="1.5"/>\n'
        )
    for s, a in best_pts:
        parts.append(
            f'<circle cx="{_fmt(sx(s))}" cy="{_fmt(sy(a))}" r="4.5" '
            'fill="#c0392b"/>\n'
        )
    parts.append("</svg>\n")
    path.write_text("".join(parts), encoding="utf-8")
    return path


def _heat_color(v: float) -> str:
    """Linear white -> blue ramp for an accuracy in [0, 1]."""
    v = min(max(v, 0.0), 1.0)
    r = round(255 - 180 * v)
    g = round(255 - 120 * v)
    b = 255
    return f"rgb({r},{g},{b})"


def write_supporter_heatmap_svg(
    matrix: SupporterMatrix, out_dir: str | os.PathLike
) -> Path:
    """Heatmap of supporter accuracy; rows = supported, columns = supporter."""
    path = _ensure_dir(out_dir) / SUPPORTER_SVG
    ids = matrix.metric_ids
    cell = 46
    ml, mt = 110, 90
    width = ml + cell * len(ids) + 20
    height = mt + cell * len(ids) + 20

    parts = [_svg_header(width, height)]
    for j, t in enumerate(ids):
        x = ml + j * cell + cell / 2
        parts.append(
            f'<text x="{_fmt(x)}" y="{mt - 8}" font-size="11" '
            f'text-anchor="start" transform="rotate(-45 {_fmt(x)} {mt - 8})">'
            f"{t}</text>\n"
        )
    for i, s in enumerate(ids):
        y = mt + i * cell + cell / 2
        parts.append(
            f'<text x="{ml - 8}" y="{_fmt(y + 4)}" font-size="11" '
            f'text-anchor="end">{s}</text>\n'
        )
        for j, t in enumerate(ids):
            x = ml + j * cell
            yy = mt + i * cell
            c = matrix.cells.get((s, t))
            if s == t or c is None:
                parts.append(
                    f'<rect x="{x}" y="{yy}" width="{cell}" height="{cell}" '
                    'fill="#eeeeee" stroke="#cccccc"/>\n'
                )
                continue
            parts.append(
                f'<rect x="{x}" y="{yy}" width="{cell}" height="{cell}" '
                f'fill="{_heat_color(c.accuracy)}" stroke="#cccccc"/>\n'
                f'<text x="{_fmt(x + cell / 2)}" y="{_fmt(yy + cell / 2 + 4)}" '
                f'font-size="10" text-anchor="middle">{c.accuracy:.2f}</text>\n'
            )
    parts.append("</svg>\n")
    path.write_text("".join(parts), encoding="utf-8")
    return path


def emit_report(obj, out_dir: str | os.PathLike) -> list[Path]:
    """Write the CSV (and SVG where defined) artifacts for a result object."""
    if isinstance(obj, EvalReport):
        return [write_cv_report_csv(obj, out_dir)]
    if isinstance(obj, SupporterMatrix):
        return [
            write_supporters_csv(obj, out_dir),
            write_supporter_heatmap_svg(obj, out_dir),
        ]
    if isinstance(obj, list) and obj and isinstance(obj[0], SubsetResult):
        return [
            write_subset_csv(obj, out_dir),
            write_subset_scatter_svg(obj, out_dir),
        ]
    raise DataError(f"no report writer for object of type {type(obj)!r}")
