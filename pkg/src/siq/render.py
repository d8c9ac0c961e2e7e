"""SVG overlays of grounded boxes, one file per matching frame.

The drawing is pure geometry, no raster compositing: every grounded box
becomes a labeled rectangle at its pixel coordinates, and the viewport is the
bounding extent of the drawn boxes plus a 10 px margin.  Output is byte
deterministic for identical inputs.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, Sequence

from .engine import BoxInfo, QueryResult

MARGIN = 10.0

_PALETTE = ("#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628")

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


def _fmt(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def frame_svg(boxes: Sequence[BoxInfo]) -> str:
    """Render one frame's grounded boxes as an SVG document."""
    if not boxes:
        raise ValueError("nothing to render")
    min_x = min(info.box.left for info in boxes) - MARGIN
    min_y = min(info.box.top for info in boxes) - MARGIN
    max_x = max(info.box.right for info in boxes) + MARGIN
    max_y = max(info.box.bottom for info in boxes) + MARGIN
    width = max_x - min_x
    height = max_y - min_y
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(min_x)} {_fmt(min_y)} {_fmt(width)} {_fmt(height)}" '
        f'width="{_fmt(width)}" height="{_fmt(height)}">'
    ]
    for i, info in enumerate(boxes):
        color = _PALETTE[i % len(_PALETTE)]
        box = info.box
        lines.append(
            f'  <rect x="{_fmt(box.left)}" y="{_fmt(box.top)}" '
            f'width="{_fmt(box.width)}" height="{_fmt(box.height)}" '
            f'fill="none" stroke="{color}" stroke-width="2"/>'
        )
        label = f"{info.bb} {info.label} {info.conf:.2f}"
        lines.append(
            f'  <text x="{_fmt(box.left + 2)}" y="{_fmt(box.top + 11)}" '
            f'font-family="sans-serif" font-size="10" fill="{color}">'
            f"{_escape(label)}</text>"
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _frame_boxes(groundings: Iterable[dict[str, BoxInfo]]) -> list[BoxInfo]:
    by_name: dict[str, BoxInfo] = {}
    for vars_info in groundings:
        for info in vars_info.values():
            by_name[info.bb] = info
    return [by_name[name] for name in sorted(by_name)]


def render_results(result: QueryResult, out_dir) -> list[Path]:
    """Write one overlay per matching frame; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    used: set[str] = set()
    for frame_id in result.frame_ids():
        boxes = _frame_boxes(result.frames[frame_id])
        if not boxes:
            continue
        stem = _UNSAFE.sub("_", frame_id) or "frame"
        name = f"frame_{stem}.svg"
        serial = 2
        while name in used:
            name = f"frame_{stem}~{serial}.svg"
            serial += 1
        used.add(name)
        path = out / name
        path.write_text(frame_svg(boxes), encoding="utf-8")
        written.append(path)
    return written
