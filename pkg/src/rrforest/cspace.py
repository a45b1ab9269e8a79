"""Configuration spaces, occupancy-grid collision checking, and free-space sampling.

Supports point robots in the plane and planar n-link arms (optionally carried
by a mobile base) against 2D occupancy grids. Wrapped (angular) coordinates
use shortest-arc geodesics everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi

MAX_SAMPLE_REJECTIONS = 1_000_000


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class SpaceExhaustedError(RuntimeError):
    """Rejection sampling gave up; the space appears fully occupied."""


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be a flat vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SpaceSpec:
    """Bounded d-dimensional configuration space with optional wrapped dims.

    Wrapped dimensions are angles identified modulo their range width (always
    2*pi). ``weights`` convert each coordinate into a common metric unit so
    mixed translation/rotation spaces share one step size.
    """

    lower: np.ndarray
    upper: np.ndarray
    wrap: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        lower = _as_float_array(self.lower, "lower")
        upper = _as_float_array(self.upper, "upper")
        wrap = np.asarray(self.wrap, dtype=bool)
        weights = _as_float_array(self.weights, "weights")
        d = lower.size
        if d < 2:
            raise ContractError(f"dimension must be >= 2, got {d}")
        if not (upper.size == wrap.size == weights.size == d):
            raise ContractError("lower/upper/wrap/weights lengths disagree")
        if not np.all(lower < upper):
            raise ContractError("each lower bound must be < its upper bound")
        if not np.all(weights > 0):
            raise ContractError("weights must be positive")
        widths = upper - lower
        if not np.allclose(widths[wrap], TWO_PI, atol=1e-9):
            raise ContractError("wrapped dimensions must have range width 2*pi")
        for arr in (lower, upper, wrap, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "wrap", wrap)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def box(cls, lower, upper, wrap=None, weights=None) -> "SpaceSpec":
        lower = _as_float_array(lower, "lower")
        d = lower.size
        if wrap is None:
            wrap = np.zeros(d, dtype=bool)
        if weights is None:
            weights = np.ones(d)
        return cls(lower, np.asarray(upper, dtype=float), wrap, weights)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def has_wrap(self) -> bool:
        return bool(self.wrap.any())

    def check_config(self, q, name: str = "q") -> np.ndarray:
        q = _as_float_array(q, name)
        if q.size != self.dim:
            raise ContractError(
                f"{name} has dimension {q.size}, space expects {self.dim}"
            )
        return q

    def canonicalize(self, q) -> np.ndarray:
        """Map wrapped coordinates into [lower, upper); other dims untouched."""
        q = np.array(q, dtype=float, copy=True)
        w = self.wrap
        if w.any():
            q[w] = self.lower[w] + np.mod(q[w] - self.lower[w], self.widths[w])
        return q

    def contains(self, q) -> bool:
        """True if every non-wrapped coordinate lies inside its bounds."""
        q = np.asarray(q, dtype=float)
        free_dims = ~self.wrap
        return bool(
            np.all(q[free_dims] >= self.lower[free_dims])
            and np.all(q[free_dims] <= self.upper[free_dims])
        )

    def delta(self, a, b) -> np.ndarray:
        """Displacement from a to b along the shortest arc per wrapped dim."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        w = self.wrap
        if w.any():
            width = self.widths[w]
            d[w] = np.mod(d[w] + 0.5 * width, width) - 0.5 * width
        return d

    def delta_many(self, a, pts: np.ndarray) -> np.ndarray:
        """Shortest-arc displacements from a to each row of pts."""
        d = pts - np.asarray(a, dtype=float)
        w = self.wrap
        if w.any():
            width = self.widths[w]
            d[:, w] = np.mod(d[:, w] + 0.5 * width, width) - 0.5 * width
        return d


def distance(a, b, spec: SpaceSpec) -> float:
    """Weighted Euclidean metric with shortest-arc wrapped dimensions."""
    a = spec.check_config(a, "a")
    b = spec.check_config(b, "b")
    d = spec.delta(a, b) * spec.weights
    return float(math.sqrt(float(np.dot(d, d))))


def batch_distance(q, pts: np.ndarray, spec: SpaceSpec) -> np.ndarray:
    """Distances from q to each row of pts (no per-row validation)."""
    d = spec.delta_many(q, pts) * spec.weights
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def steer(from_q, to_q, eps: float, spec: SpaceSpec) -> np.ndarray:
    """Move from ``from_q`` toward ``to_q`` by at most ``eps`` along the geodesic."""
    if eps <= 0:
        raise ContractError("eps must be positive")
    a = spec.check_config(from_q, "from_q")
    b = spec.check_config(to_q, "to_q")
    delta = spec.delta(a, b)
    dist = float(np.linalg.norm(delta * spec.weights))
    if dist <= eps:
        return spec.canonicalize(b)
    return spec.canonicalize(a + (eps / dist) * delta)


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean obstacle raster. True cells are obstacles.

    Cell (row, col) covers world [col*res, (col+1)*res) x [row*res, (row+1)*res)
    with the top-left pixel at world (0, 0), +x right, +y down.
    """

    cells: np.ndarray
    resolution: float

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 2:
            raise ContractError("cells must be a 2D array")
        if self.resolution <= 0:
            raise ContractError("resolution must be positive")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def world_size(self) -> tuple[float, float]:
        return (self.width * self.resolution, self.height * self.resolution)

    def free_area(self) -> float:
        return float((~self.cells).sum()) * self.resolution**2

    def occupied_many(self, pts: np.ndarray) -> np.ndarray:
        """Occupancy lookups for an (n, 2) array of world points.

        Out-of-bounds points report occupied.
        """
        inv = 1.0 / self.resolution
        cols = np.floor(pts[:, 0] * inv).astype(np.int64)
        rows = np.floor(pts[:, 1] * inv).astype(np.int64)
        out = (cols < 0) | (cols >= self.width) | (rows < 0) | (rows >= self.height)
        result = np.ones(len(pts), dtype=bool)
        ok = ~out
        if ok.any():
            result[ok] = self.cells[rows[ok], cols[ok]]
        return result

    def occupied_at(self, x: float, y: float) -> bool:
        inv = 1.0 / self.resolution
        col = math.floor(x * inv)
        row = math.floor(y * inv)
        if col < 0 or col >= self.width or row < 0 or row >= self.height:
            return True
        return bool(self.cells[row, col])


def load_pgm(path, resolution: float = 1.0) -> OccupancyGrid:
    """Load a PGM occupancy map (P2 ASCII or P5 binary). Pixel < 128 = obstacle."""
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P2", b"P5"):
        raise ContractError(f"{path}: not a P2/P5 PGM file")
    magic = raw[:2].decode()

    # header tokens: magic, width, height, maxval; '#' comments run to newline
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] not in (10, 13):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ContractError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if width <= 0 or height <= 0 or maxval <= 0:
        raise ContractError(f"{path}: invalid PGM dimensions")

    if magic == "P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        count = width * height
        data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
        if data.size != count:
            raise ContractError(f"{path}: truncated PGM pixel data")
        pixels = data.astype(np.int64)
    else:
        values = raw[pos:].split()
        if len(values) < width * height:
            raise ContractError(f"{path}: truncated PGM pixel data")
        pixels = np.array(values[: width * height], dtype=np.int64)
    cells = (pixels < 128).reshape(height, width)
    return OccupancyGrid(cells, resolution)


def write_pgm(path, grid: OccupancyGrid) -> None:
    """Write an ASCII (P2) PGM: free = 255, obstacle = 0."""
    lines = [f"P2", f"{grid.width} {grid.height}", "255"]
    values = np.where(grid.cells, 0, 255)
    for row in values:
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class PointRobot:
    """Point robot: configuration is its workspace position (d = 2)."""


@dataclass(frozen=True)
class PlanarArm:
    """Planar kinematic chain, optionally carried by a mobile base.

    ``joint_dims`` name the configuration coordinates driving each joint (all
    wrapped). A fixed chain anchors at ``base``; a mobile one reads its base
    position from ``base_dims`` of the configuration instead.
    """

    link_lengths: np.ndarray
    joint_dims: tuple[int, ...]
    base: Optional[np.ndarray] = None
    base_dims: Optional[tuple[int, int]] = None

    def __post_init__(self):
        lengths = _as_float_array(self.link_lengths, "link_lengths")
        if lengths.size < 1 or not np.all(lengths > 0):
            raise ContractError("need >= 1 link, all lengths positive")
        lengths.setflags(write=False)
        object.__setattr__(self, "link_lengths", lengths)
        object.__setattr__(self, "joint_dims", tuple(int(j) for j in self.joint_dims))
        if len(self.joint_dims) != lengths.size:
            raise ContractError("one joint dimension per link required")
        if self.base_dims is not None:
            object.__setattr__(self, "base_dims", tuple(int(i) for i in self.base_dims))
            if len(self.base_dims) != 2:
                raise ContractError("base_dims must name exactly two coordinates")
        elif self.base is None:
            raise ContractError("either base or base_dims must be given")
        if self.base is not None:
            base = _as_float_array(self.base, "base")
            if base.size != 2:
                raise ContractError("base must be a 2D point")
            base.setflags(write=False)
            object.__setattr__(self, "base", base)

    @property
    def n_links(self) -> int:
        return self.link_lengths.size

    def reach_weights(self) -> np.ndarray:
        """Worst-case workspace motion per radian of each joint."""
        return np.cumsum(self.link_lengths[::-1])[::-1]


def _arm_joint_positions(arm: PlanarArm, configs: np.ndarray) -> np.ndarray:
    """Joint positions for a batch of configs: (m, n_links + 1, 2)."""
    m = configs.shape[0]
    if arm.base_dims is not None:
        base = configs[:, list(arm.base_dims)]
    else:
        base = np.broadcast_to(arm.base, (m, 2))
    angles = np.cumsum(configs[:, list(arm.joint_dims)], axis=1)
    steps = np.empty((m, arm.n_links, 2))
    steps[:, :, 0] = np.cos(angles) * arm.link_lengths
    steps[:, :, 1] = np.sin(angles) * arm.link_lengths
    pts = np.empty((m, arm.n_links + 1, 2))
    pts[:, 0, :] = base
    pts[:, 1:, :] = base[:, None, :] + np.cumsum(steps, axis=1)
    return pts


def forward_kinematics(arm: PlanarArm, q) -> list[tuple[np.ndarray, np.ndarray]]:
    """Workspace segments of each link, base outward."""
    q = np.asarray(q, dtype=float).reshape(1, -1)
    pts = _arm_joint_positions(arm, q)[0]
    return [(pts[i], pts[i + 1]) for i in range(arm.n_links)]


@dataclass(frozen=True)
class Scene:
    """A configuration space paired with its obstacle field and robot model.

    ``collision_resolution`` is the maximum workspace step between successive
    validity checks along any motion.
    """

    spec: SpaceSpec
    grid: OccupancyGrid
    robot: Union[PointRobot, PlanarArm]
    collision_resolution: float

    # cached arm-link sample offsets, filled in __post_init__
    _link_ts: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.collision_resolution <= 0:
            raise ContractError("collision_resolution must be positive")
        if isinstance(self.robot, PointRobot):
            if self.spec.dim != 2 or self.spec.has_wrap:
                raise ContractError("point robot needs a 2D unwrapped space")
        else:
            arm = self.robot
            for j in arm.joint_dims:
                if not (0 <= j < self.spec.dim) or not self.spec.wrap[j]:
                    raise ContractError("arm joint dims must be wrapped coordinates")
            if arm.base_dims is not None:
                for i in arm.base_dims:
                    if not (0 <= i < self.spec.dim) or self.spec.wrap[i]:
                        raise ContractError("arm base dims must be unwrapped")
            # per-link interpolation fractions at workspace spacing <= r
            ts = []
            for length in arm.link_lengths:
                n = max(1, int(math.ceil(length / self.collision_resolution)))
                ts.append(np.linspace(0.0, 1.0, n + 1))
            object.__setattr__(self, "_link_ts", tuple(ts))

    @classmethod
    def point_robot(cls, grid: OccupancyGrid, collision_resolution: Optional[float] = None,
                    weights=None) -> "Scene":
        w, h = grid.world_size
        spec = SpaceSpec.box([0.0, 0.0], [w, h], weights=weights)
        r = collision_resolution if collision_resolution is not None else 0.25 * grid.resolution
        return cls(spec, grid, PointRobot(), r)

    @classmethod
    def planar_arm(cls, grid: OccupancyGrid, arm: PlanarArm,
                   collision_resolution: Optional[float] = None,
                   weights=None) -> "Scene":
        """Space layout: base dims bounded by the map, joint dims wrapped [-pi, pi)."""
        dims = (2 if arm.base_dims is not None else 0) + len(arm.joint_dims)
        lower = np.empty(dims)
        upper = np.empty(dims)
        wrap = np.zeros(dims, dtype=bool)
        if arm.base_dims is not None:
            w, h = grid.world_size
            lower[list(arm.base_dims)] = 0.0
            upper[list(arm.base_dims)] = [w, h]
        lower[list(arm.joint_dims)] = -math.pi
        upper[list(arm.joint_dims)] = math.pi
        wrap[list(arm.joint_dims)] = True
        spec = SpaceSpec(lower, upper, wrap,
                         np.ones(dims) if weights is None else np.asarray(weights, float))
        r = collision_resolution if collision_resolution is not None else 0.25 * grid.resolution
        return cls(spec, grid, arm, r)

    # -- validity ---------------------------------------------------------

    def _configs_free(self, configs: np.ndarray) -> bool:
        """All configurations in the (m, d) batch collision-free and in bounds."""
        lo, hi, w = self.spec.lower, self.spec.upper, self.spec.wrap
        unwrapped = ~w
        if unwrapped.any():
            vals = configs[:, unwrapped]
            if (vals < lo[unwrapped]).any() or (vals > hi[unwrapped]).any():
                return False
        if isinstance(self.robot, PointRobot):
            return not self.grid.occupied_many(configs).any()
        pts = _arm_joint_positions(self.robot, configs)
        samples = []
        for i, ts in enumerate(self._link_ts):
            a = pts[:, i, :][:, None, :]
            b = pts[:, i + 1, :][:, None, :]
            samples.append(a + ts[None, :, None] * (b - a))
        allpts = np.concatenate(samples, axis=1).reshape(-1, 2)
        return not self.grid.occupied_many(allpts).any()

    def is_free(self, q) -> bool:
        """Collision check for one configuration; out-of-bounds is not free."""
        q = self.spec.check_config(q)
        return self._configs_free(q.reshape(1, -1))

    def _motion_steps(self, a, b) -> int:
        """Interpolation count bounding workspace steps by collision_resolution."""
        delta = self.spec.delta(a, b)
        if isinstance(self.robot, PointRobot):
            travel = float(np.linalg.norm(delta))
        else:
            arm = self.robot
            travel = float(np.dot(np.abs(delta[list(arm.joint_dims)]), arm.reach_weights()))
            if arm.base_dims is not None:
                travel += float(np.linalg.norm(delta[list(arm.base_dims)]))
        return max(1, int(math.ceil(travel / self.collision_resolution)))

    def motion_valid(self, a, b) -> bool:
        """True iff the geodesic a -> b is collision-free at the scene resolution."""
        a = self.spec.check_config(a, "a")
        b = self.spec.check_config(b, "b")
        m = self._motion_steps(a, b)
        ts = np.linspace(0.0, 1.0, m + 1)
        configs = a[None, :] + ts[:, None] * self.spec.delta(a, b)[None, :]
        return self._configs_free(configs)

    # -- sampling ---------------------------------------------------------

    def sample_free_counted(self, rng, max_rejections: int = MAX_SAMPLE_REJECTIONS):
        """Uniform free sample plus the number of in-collision draws discarded."""
        rejections = 0
        while rejections <= max_rejections:
            q = rng.uniform(self.spec.lower, self.spec.upper)
            if self._configs_free(q.reshape(1, -1)):
                return q, rejections
            rejections += 1
        raise SpaceExhaustedError(
            f"no free sample after {max_rejections} rejections; "
            "space appears fully occupied"
        )

    def sample_free(self, rng, max_rejections: int = MAX_SAMPLE_REJECTIONS) -> np.ndarray:
        q, _ = self.sample_free_counted(rng, max_rejections)
        return q
