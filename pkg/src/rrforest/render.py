"""Deterministic SVG rendering of a forest dump over its scenario map.

Obstacle cells are filled rectangles; edges are colored by tree kind (teal
for rooted, purple for local); the solution path is drawn on top with the
start and goal marked; live local samplers show as orange circles. Nodes are
projected onto their first two coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .cspace import ContractError, OccupancyGrid
from .forest import KIND_LOCAL

COLOR_OBSTACLE = "#3b3b3b"
COLOR_ROOTED = "#0f8a7e"
COLOR_LOCAL = "#8e44ad"
COLOR_SOLUTION = "#e63946"
COLOR_INIT = "#2bb673"
COLOR_TARGET = "#d62828"
COLOR_SAMPLER = "#f77f00"


@dataclass
class ForestDump:
    tree_kinds: dict = field(default_factory=dict)
    nodes: dict = field(default_factory=dict)  # id -> (tree, parent, cost, coords)
    samplers: list = field(default_factory=list)
    path_ids: list = field(default_factory=list)


def parse_dump(text: str) -> ForestDump:
    dump = ForestDump()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            kind = parts[0]
            if kind == "tree":
                dump.tree_kinds[int(parts[1])] = parts[2]
            elif kind == "node":
                nid = int(parts[1])
                dump.nodes[nid] = (
                    int(parts[2]),
                    int(parts[3]),
                    float(parts[4]),
                    [float(v) for v in parts[5:]],
                )
            elif kind == "sampler":
                dump.samplers.append([float(v) for v in parts[1:]])
            elif kind == "path":
                dump.path_ids.append(int(parts[1]))
            else:
                raise ValueError(f"unknown record {kind!r}")
        except (ValueError, IndexError) as exc:
            raise ContractError(f"malformed dump line {lineno}: {line!r}") from exc
    for nid, (tree, parent, _cost, _coords) in dump.nodes.items():
        if tree not in dump.tree_kinds:
            raise ContractError(f"node {nid} references unknown tree {tree}")
        if parent >= 0 and parent not in dump.nodes:
            raise ContractError(f"node {nid} references unknown parent {parent}")
    return dump


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(dump: ForestDump, grid: OccupancyGrid, scale: float = 10.0) -> str:
    """SVG text for a dump over an occupancy grid. Output is deterministic."""
    res = grid.resolution
    width = grid.width * res * scale
    height = grid.height * res * scale
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="#ffffff"/>',
    ]
    cell = res * scale
    for row in range(grid.height):
        for col in range(grid.width):
            if grid.cells[row, col]:
                parts.append(
                    f'<rect x="{_fmt(col * cell)}" y="{_fmt(row * cell)}" '
                    f'width="{_fmt(cell)}" height="{_fmt(cell)}" '
                    f'fill="{COLOR_OBSTACLE}"/>'
                )

    def xy(coords):
        return coords[0] * scale, coords[1] * scale

    for nid in sorted(dump.nodes):
        tree, parent, _cost, coords = dump.nodes[nid]
        if parent < 0:
            continue
        color = COLOR_LOCAL if dump.tree_kinds[tree] == KIND_LOCAL else COLOR_ROOTED
        x1, y1 = xy(coords)
        x2, y2 = xy(dump.nodes[parent][3])
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{_fmt(0.08 * cell)}"/>'
        )

    if dump.path_ids:
        pts = " ".join(
            f"{_fmt(dump.nodes[nid][3][0] * scale)},{_fmt(dump.nodes[nid][3][1] * scale)}"
            for nid in dump.path_ids
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{COLOR_SOLUTION}" '
            f'stroke-width="{_fmt(0.25 * cell)}"/>'
        )
        first = dump.nodes[dump.path_ids[0]][3]
        last = dump.nodes[dump.path_ids[-1]][3]
        for coords, color in ((first, COLOR_INIT), (last, COLOR_TARGET)):
            x, y = xy(coords)
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(0.5 * cell)}" '
                f'fill="{color}"/>'
            )

    for pos in dump.samplers:
        x, y = xy(pos)
        parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(0.4 * cell)}" '
            f'fill="none" stroke="{COLOR_SAMPLER}" stroke-width="{_fmt(0.1 * cell)}"/>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_render(dump_path, scenario_path, out_file) -> int:
    """Render a forest dump over its scenario map into an SVG file."""
    from .harness import build_scene, load_scenario

    scenario = load_scenario(scenario_path)
    scene = build_scene(scenario)
    dump = parse_dump(Path(dump_path).read_text())
    svg = render_svg(dump, scene.grid)
    Path(out_file).write_text(svg)
    print(f"wrote {out_file}")
    return 0
