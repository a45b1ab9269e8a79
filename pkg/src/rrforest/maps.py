"""Bundled benchmark maps and their deterministic generators.

All maps are 64x64 occupancy grids at unit resolution:

* ``empty``    -- free space only.
* ``corridor`` -- two open rooms joined by a single 2-cell-wide passage
                  through an 8-cell-thick wall.
* ``rooms``    -- four rooms separated by 4-cell walls with three 8-cell
                  doors (door cells aligned to a 4-cell coarse lattice).
* ``maze``     -- recursive-division maze, 1-cell walls, 2-cell gaps.

The files under ``data/`` are generated by these functions; a test keeps
them in sync.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .cspace import OccupancyGrid, write_pgm

MAP_SIZE = 64
MAZE_SEED = 7

CORRIDOR_WALL = (28, 36)     # occupied columns [28, 36)
CORRIDOR_PASSAGE = (31, 33)  # free rows [31, 33) through the wall

ROOMS_WALL_V = (28, 32)      # occupied columns
ROOMS_WALL_H = (28, 32)      # occupied rows
ROOMS_DOORS = (
    ("v", 8, 16),   # vertical wall cleared on rows [8, 16)
    ("h", 8, 16),   # horizontal wall cleared on cols [8, 16)
    ("h", 48, 56),  # horizontal wall cleared on cols [48, 56)
)


def empty_grid(size: int = MAP_SIZE, resolution: float = 1.0) -> OccupancyGrid:
    return OccupancyGrid(np.zeros((size, size), dtype=bool), resolution)


def corridor_grid(size: int = MAP_SIZE, resolution: float = 1.0) -> OccupancyGrid:
    cells = np.zeros((size, size), dtype=bool)
    c0, c1 = CORRIDOR_WALL
    r0, r1 = CORRIDOR_PASSAGE
    cells[:, c0:c1] = True
    cells[r0:r1, c0:c1] = False
    return OccupancyGrid(cells, resolution)


def corridor_passage_box(resolution: float = 1.0):
    """World-coordinate rectangle (xmin, ymin, xmax, ymax) of the passage."""
    c0, c1 = CORRIDOR_WALL
    r0, r1 = CORRIDOR_PASSAGE
    return (c0 * resolution, r0 * resolution, c1 * resolution, r1 * resolution)


def rooms_grid(size: int = MAP_SIZE, resolution: float = 1.0) -> OccupancyGrid:
    cells = np.zeros((size, size), dtype=bool)
    cells[:, ROOMS_WALL_V[0] : ROOMS_WALL_V[1]] = True
    cells[ROOMS_WALL_H[0] : ROOMS_WALL_H[1], :] = True
    for kind, a, b in ROOMS_DOORS:
        if kind == "v":
            cells[a:b, ROOMS_WALL_V[0] : ROOMS_WALL_V[1]] = False
        else:
            cells[ROOMS_WALL_H[0] : ROOMS_WALL_H[1], a:b] = False
    return OccupancyGrid(cells, resolution)


def maze_grid(size: int = MAP_SIZE, resolution: float = 1.0,
              seed: int = MAZE_SEED) -> OccupancyGrid:
    """Recursive-division maze with 1-cell walls and 2-cell passages."""
    cells = np.zeros((size, size), dtype=bool)
    rng = np.random.default_rng(seed)

    def divide(r0, r1, c0, c1):
        height, width = r1 - r0, c1 - c0
        if height < 7 and width < 7:
            return
        horizontal = height > width or (height == width and rng.random() < 0.5)
        if horizontal:
            # wall row keeps >= 3 rows each side so gaps stay passable
            wall = int(rng.integers(r0 + 3, r1 - 3))
            gap = int(rng.integers(c0, c1 - 1))
            cells[wall, c0:c1] = True
            cells[wall, gap : gap + 2] = False
            divide(r0, wall, c0, c1)
            divide(wall + 1, r1, c0, c1)
        else:
            wall = int(rng.integers(c0 + 3, c1 - 3))
            gap = int(rng.integers(r0, r1 - 1))
            cells[r0:r1, wall] = True
            cells[gap : gap + 2, wall] = False
            divide(r0, r1, c0, wall)
            divide(r0, r1, wall + 1, c1)

    divide(0, size, 0, size)
    return OccupancyGrid(cells, resolution)


BUILDERS = {
    "empty": empty_grid,
    "corridor": corridor_grid,
    "rooms": rooms_grid,
    "maze": maze_grid,
}


def build_map(name: str) -> OccupancyGrid:
    return BUILDERS[name]()


def grid_connected(grid: OccupancyGrid, a_cell, b_cell) -> bool:
    """4-connected BFS between two (row, col) cells; sanity for generators."""
    from collections import deque

    free = ~grid.cells
    if not (free[a_cell] and free[b_cell]):
        return False
    seen = np.zeros_like(free)
    seen[a_cell] = True
    queue = deque([a_cell])
    while queue:
        r, c = queue.popleft()
        if (r, c) == tuple(b_cell):
            return True
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < grid.height and 0 <= nc < grid.width:
                if free[nr, nc] and not seen[nr, nc]:
                    seen[nr, nc] = True
                    queue.append((nr, nc))
    return False


def data_dir() -> Path:
    """Directory of the bundled maps and scenario files."""
    return Path(resources.files("rrforest") / "data")


def bundled_map_path(name: str) -> Path:
    return data_dir() / "maps" / f"{name}.pgm"


def bundled_scenario_path(name: str) -> Path:
    return data_dir() / "scenarios" / f"{name}.json"


def write_bundled_maps(out_dir) -> list:
    """Regenerate every bundled map PGM into out_dir; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in BUILDERS.items():
        path = out_dir / f"{name}.pgm"
        write_pgm(path, builder())
        written.append(path)
    return written
