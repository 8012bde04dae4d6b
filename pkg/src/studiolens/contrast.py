"""Legible-contrast analytic over a coarse block rasterization.

The document is sampled into a grid of blocks, each taking the color of the
topmost element covering its center (fill, else background, else stroke),
alpha-composited over the canvas background. Contrast between neighboring
blocks uses the relative-luminance ratio, so black on white measures 21:1.
Three signals come out of the grid: the fraction of blocks sitting on a
high-contrast boundary, long straight runs of such blocks (thick rules and
box outlines), and big adjacent areas of saturated bright color that shout
over the rest of the composition.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

from .model import Color, DesignDocument


@dataclass(frozen=True)
class ContrastConfig:
    block_resolution: int = 64          # blocks along the shorter canvas axis
    ratio_threshold: float = 4.5        # neighbor luminance ratio marking a block
    min_run_length: int = 10            # blocks; shorter runs are not line findings
    loudness_threshold: float = 0.7     # HSV saturation*value floor for loud cells
    loud_area_min_fraction: float = 0.15
    hue_gap_degrees: float = 60.0
    flag_fraction: float = 0.25         # high-contrast fraction that flags the doc
    hc_norm: float = 0.5                # fraction at which the contrast penalty saturates
    loud_norm: float = 0.5              # loud-area fraction at which that penalty saturates
    weight_hc: float = 0.5
    weight_loud: float = 0.5


@dataclass(frozen=True)
class BlockGrid:
    cols: int
    rows: int
    cells: tuple[Color, ...]            # row-major, composited opaque colors
    block_size: float                   # nominal block edge in canvas units
    cell_w: float
    cell_h: float
    sources: tuple[str | None, ...]     # element id that colored each cell

    def at(self, col: int, row: int) -> Color:
        return self.cells[row * self.cols + col]

    def source_at(self, col: int, row: int) -> str | None:
        return self.sources[row * self.cols + col]


def _paint_color(element) -> Color | None:
    style = element.style
    return style.fill or style.background or style.stroke


def _composite(c: Color, bg: Color) -> Color:
    if c.a >= 1.0:
        return Color(c.r, c.g, c.b, 1.0)
    a = c.a
    return Color(
        int(round(c.r * a + bg.r * (1 - a))),
        int(round(c.g * a + bg.g * (1 - a))),
        int(round(c.b * a + bg.b * (1 - a))),
        1.0,
    )


def rasterize_blocks(doc: DesignDocument, block_count_per_min_axis: int = 64) -> BlockGrid:
    """Sample the document into a block grid by cell-center coverage.

    Elements with no paintable color are transparent to the sampling; cells
    nobody covers carry the canvas background.
    """
    if block_count_per_min_axis < 16:
        raise ValueError(f"block_count_per_min_axis must be >= 16, got {block_count_per_min_axis}")
    w, h = doc.canvas.width, doc.canvas.height
    block_size = min(w, h) / block_count_per_min_axis
    cols = max(1, int(round(w / block_size)))
    rows = max(1, int(round(h / block_size)))
    cell_w = w / cols
    cell_h = h / rows
    background = Color(doc.background.r, doc.background.g, doc.background.b, 1.0)

    paintable = [(e, _paint_color(e)) for e in doc.elements if _paint_color(e) is not None]
    cells: list[Color] = []
    sources: list[str | None] = []
    for row in range(rows):
        cy = (row + 0.5) * cell_h
        for col in range(cols):
            cx = (col + 0.5) * cell_w
            cell = background
            source = None
            # Paint order is z-order; the last covering element wins.
            for element, color in paintable:
                if element.bbox.contains_point(cx, cy):
                    cell = _composite(color, background)
                    source = element.id
            cells.append(cell)
            sources.append(source)
    return BlockGrid(
        cols=cols, rows=rows, cells=tuple(cells),
        block_size=block_size, cell_w=cell_w, cell_h=cell_h,
        sources=tuple(sources),
    )


def _linearize(channel: int) -> float:
    c = channel / 255.0
    if c <= 0.03928:
        return c / 12.92
    return ((c + 0.055) / 1.055) ** 2.4


def relative_luminance(color: Color) -> float:
    return (
        0.2126 * _linearize(color.r)
        + 0.7152 * _linearize(color.g)
        + 0.0722 * _linearize(color.b)
    )


def contrast_ratio(c1: Color, c2: Color) -> float:
    """Relative-luminance contrast ratio, symmetric, in [1, 21]."""
    l1 = relative_luminance(c1)
    l2 = relative_luminance(c2)
    if l1 < l2:
        l1, l2 = l2, l1
    return (l1 + 0.05) / (l2 + 0.05)


@dataclass(frozen=True)
class LineBoxFinding:
    orientation: str  # "h" or "v"
    index: int        # row for "h", column for "v"
    start: int
    length: int
    element_ids: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "orientation": self.orientation,
            "index": self.index,
            "start": self.start,
            "length": self.length,
            "element_ids": list(self.element_ids),
        }


@dataclass(frozen=True)
class LoudAreaFinding:
    cells: tuple[tuple[int, int], ...]  # (col, row), sorted
    area_fraction: float
    mean_saturation_value: float
    hue_degrees: float
    element_ids: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "cells": [list(c) for c in self.cells],
            "area_fraction": self.area_fraction,
            "mean_saturation_value": self.mean_saturation_value,
            "hue_degrees": self.hue_degrees,
            "element_ids": list(self.element_ids),
        }


@dataclass(frozen=True)
class ContrastResult:
    high_contrast_fraction: float
    line_box_findings: tuple[LineBoxFinding, ...]
    loud_area_findings: tuple[LoudAreaFinding, ...]
    score: float
    flagged: bool
    grid: BlockGrid


def _marked_cells(grid: BlockGrid, ratio_threshold: float) -> list[list[bool]]:
    marked = [[False] * grid.cols for _ in range(grid.rows)]
    for row in range(grid.rows):
        for col in range(grid.cols):
            here = grid.at(col, row)
            for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nc, nr = col + dc, row + dr
                if 0 <= nc < grid.cols and 0 <= nr < grid.rows:
                    if contrast_ratio(here, grid.at(nc, nr)) >= ratio_threshold:
                        marked[row][col] = True
                        break
    return marked


def _runs(marked: list[list[bool]], grid: BlockGrid, min_length: int) -> list[LineBoxFinding]:
    findings = []

    def scan(cells_in_line, orientation, index):
        start = None
        for pos, flag in enumerate(cells_in_line + [False]):
            if flag and start is None:
                start = pos
            elif not flag and start is not None:
                length = pos - start
                if length >= min_length:
                    if orientation == "h":
                        coords = [(c, index) for c in range(start, pos)]
                    else:
                        coords = [(index, r) for r in range(start, pos)]
                    ids = sorted({
                        s for s in (grid.source_at(c, r) for c, r in coords) if s is not None
                    })
                    findings.append(LineBoxFinding(orientation, index, start, length, tuple(ids)))
                start = None

    for row in range(grid.rows):
        scan([marked[row][c] for c in range(grid.cols)], "h", row)
    for col in range(grid.cols):
        scan([marked[r][col] for r in range(grid.rows)], "v", col)
    findings.sort(key=lambda f: (f.orientation, f.index, f.start))
    return findings


def _hsv(color: Color) -> tuple[float, float, float]:
    h, s, v = colorsys.rgb_to_hsv(color.r / 255.0, color.g / 255.0, color.b / 255.0)
    return h * 360.0, s, v


def _hue_gap(h1: float, h2: float) -> float:
    d = abs(h1 - h2) % 360.0
    return min(d, 360.0 - d)


def _loud_regions(grid: BlockGrid, config: ContrastConfig) -> list[LoudAreaFinding]:
    """Connected same-color regions of saturated bright cells.

    Same-color connectivity keeps two clashing adjacent areas distinct so
    the hue-gap rule has something to compare. A region becomes a finding
    when big enough and either hue-clashing with an adjacent big loud region
    or dominating on its own (twice the minimum area).
    """
    total = grid.cols * grid.rows
    loud = {}
    for row in range(grid.rows):
        for col in range(grid.cols):
            color = grid.at(col, row)
            h, s, v = _hsv(color)
            if s * v >= config.loudness_threshold:
                loud[(col, row)] = (color.r, color.g, color.b, h, s * v)

    # Flood-fill components among loud cells of identical color.
    regions: list[dict] = []
    assigned: dict[tuple[int, int], int] = {}
    for cell in sorted(loud):
        if cell in assigned:
            continue
        rid = len(regions)
        key = loud[cell][:3]
        stack = [cell]
        members = []
        while stack:
            cur = stack.pop()
            if cur in assigned or cur not in loud or loud[cur][:3] != key:
                continue
            assigned[cur] = rid
            members.append(cur)
            c, r = cur
            stack.extend([(c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)])
        regions.append({
            "members": sorted(members),
            "hue": loud[cell][3],
            "sv": loud[cell][4],
        })

    candidates = [
        (rid, reg) for rid, reg in enumerate(regions)
        if len(reg["members"]) / total >= config.loud_area_min_fraction
    ]
    candidate_ids = {rid for rid, _ in candidates}

    def adjacent_clash(rid: int, reg: dict) -> bool:
        for c, r in reg["members"]:
            for nc, nr in ((c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)):
                other = assigned.get((nc, nr))
                if other is None or other == rid or other not in candidate_ids:
                    continue
                if _hue_gap(reg["hue"], regions[other]["hue"]) >= config.hue_gap_degrees:
                    return True
        return False

    findings = []
    for rid, reg in candidates:
        fraction = len(reg["members"]) / total
        if adjacent_clash(rid, reg) or fraction >= 2 * config.loud_area_min_fraction:
            ids = sorted({
                s for s in (grid.source_at(c, r) for c, r in reg["members"]) if s is not None
            })
            findings.append(LoudAreaFinding(
                cells=tuple(reg["members"]),
                area_fraction=fraction,
                mean_saturation_value=reg["sv"],
                hue_degrees=reg["hue"],
                element_ids=tuple(ids),
            ))
    findings.sort(key=lambda f: f.cells)
    return findings


def legible_contrast(doc: DesignDocument, config: ContrastConfig | None = None) -> ContrastResult:
    """Block-based contrast analysis of a document."""
    config = config or ContrastConfig()
    grid = rasterize_blocks(doc, config.block_resolution)
    marked = _marked_cells(grid, config.ratio_threshold)
    marked_count = sum(sum(1 for m in row if m) for row in marked)
    fraction = marked_count / (grid.cols * grid.rows)
    lines = _runs(marked, grid, config.min_run_length)
    loud = _loud_regions(grid, config)

    loud_total = sum(f.area_fraction for f in loud)
    hc_component = 1.0 - min(1.0, fraction / config.hc_norm)
    loud_component = 1.0 - min(1.0, loud_total / config.loud_norm)
    score = config.weight_hc * hc_component + config.weight_loud * loud_component
    return ContrastResult(
        high_contrast_fraction=fraction,
        line_box_findings=tuple(lines),
        loud_area_findings=tuple(loud),
        score=score,
        flagged=fraction > config.flag_fraction or bool(loud),
        grid=grid,
    )


def write_ppm(grid: BlockGrid, path) -> None:
    """Dump the block grid as a plain-text portable pixmap for inspection."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P3\n{grid.cols} {grid.rows}\n255\n")
        for row in range(grid.rows):
            fh.write(" ".join(
                f"{grid.at(col, row).r} {grid.at(col, row).g} {grid.at(col, row).b}"
                for col in range(grid.cols)
            ))
            fh.write("\n")
