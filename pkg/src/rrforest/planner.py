"""Planners: the multi-tree forest planner (RRF*) and its baselines.

All planners share one interface: construct with (scene, config, seed), call
``step()`` per iteration or ``run()`` for a full budget, read ``stats()`` and
``solution()``. Randomness flows exclusively from the seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import bandit as mab
from .bandit import Arm, BanditConfig, LOCAL, ROOTED
from .cspace import ContractError, Scene, batch_distance, distance, steer
from .forest import Forest, KIND_LOCAL, KIND_ROOT_INIT, KIND_ROOT_TARGET
from .proposal import (
    DEFAULT_MAX_DRAW_ATTEMPTS,
    DEFAULT_SUCCESS_KAPPA,
    KernelParams,
    LocalSamplerState,
)
from .proposer import FailureDensityMap, accept_candidate

STOP_NODES = "nodes"
STOP_FIRST_SOLUTION = "first_solution"
STOP_TIME = "time"


class StartGoalCollisionError(ContractError):
    """Start or goal configuration is not collision-free."""


@dataclass
class PlannerConfig:
    """Shared planner knobs; baselines ignore the local-tree fields."""

    start: np.ndarray
    goal: np.ndarray
    max_nodes: int = 3000
    epsilon: float = 2.0
    k: int = 4                      # max simultaneous local arms
    eta: float = 0.1                # local-arm pruning threshold
    delta_threshold: float = 0.45   # candidate acceptance threshold
    min_fail_count: int = 5
    cell_size_factor: float = 4.0   # density cell edge, in units of epsilon
    kernel: KernelParams = field(default_factory=KernelParams)
    success_kappa: float = DEFAULT_SUCCESS_KAPPA
    draw_max_attempts: int = DEFAULT_MAX_DRAW_ATTEMPTS
    bandit: Optional[BanditConfig] = None
    rewire_gamma: Optional[float] = None
    goal_bias: float = 0.05
    stop_mode: str = STOP_NODES
    time_budget_s: Optional[float] = None
    max_iter_factor: int = 50
    seed: int = 0
    seed_local_trees: tuple = ()
    debug_checks: bool = False

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if self.max_nodes < 1 or self.epsilon <= 0 or self.k < 0:
            raise ContractError("max_nodes, epsilon must be positive; k >= 0")
        if not 0.0 < self.eta < 1.0:
            raise ContractError("eta must be in (0, 1)")
        if not 0.0 < self.delta_threshold < 1.0:
            raise ContractError("delta_threshold must be in (0, 1)")
        if not 0.0 <= self.goal_bias < 1.0:
            raise ContractError("goal_bias must be in [0, 1)")
        if self.stop_mode not in (STOP_NODES, STOP_FIRST_SOLUTION, STOP_TIME):
            raise ContractError(f"unknown stop_mode {self.stop_mode!r}")
        if self.stop_mode == STOP_TIME and not self.time_budget_s:
            raise ContractError("time stop_mode needs time_budget_s")
        if self.bandit is None:
            self.bandit = BanditConfig(eta=self.eta)


@dataclass
class StatRow:
    iteration: int
    seconds: float
    nodes: int
    best_cost: float
    invalid_obstacles: int
    invalid_connections: int
    live_arms: int
    local_trees_created: int


@dataclass
class RunStats:
    """Counters plus a per-accepted-node log of the run."""

    rows: list = field(default_factory=list)
    iterations: int = 0
    attempts: int = 0
    invalid_obstacles: int = 0
    invalid_connections: int = 0
    accepted: int = 0
    local_trees_created: int = 0
    total_nodes: int = 0
    first_solution: Optional[tuple] = None  # (iteration, nodes, seconds, cost)
    wall_seconds: float = 0.0
    accepted_proposals: list = field(default_factory=list)

    def conservation_holds(self) -> bool:
        return self.attempts == (
            self.invalid_obstacles + self.invalid_connections + self.accepted
        )


@dataclass
class Solution:
    path: list
    cost: float
    found_iteration: int
    found_nodes: int
    found_seconds: float


@dataclass
class _LocalWalker:
    sampler: LocalSamplerState
    node_id: int


class _PlannerBase:
    """Machinery shared by every planner: forest, sampling, stats."""

    name = "base"

    def __init__(self, scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
        self.scene = scene
        self.cfg = cfg
        self.spec = scene.spec
        start = self.spec.canonicalize(self.spec.check_config(cfg.start, "start"))
        goal = self.spec.canonicalize(self.spec.check_config(cfg.goal, "goal"))
        if not scene.is_free(start):
            raise StartGoalCollisionError("start configuration is in collision")
        if not scene.is_free(goal):
            raise StartGoalCollisionError("goal configuration is in collision")
        self.start = start
        self.goal = goal
        self.rng = np.random.default_rng(cfg.seed if seed is None else seed)
        self.forest = Forest(self.spec, index_edge=cfg.epsilon)
        self.init_tree, self.init_root = self.forest.new_tree(KIND_ROOT_INIT, start)
        self.target_tree, self.target_root = self.forest.new_tree(
            KIND_ROOT_TARGET, goal
        )
        self._stats = RunStats(total_nodes=2)
        d = self.spec.dim
        self._gamma = (
            cfg.rewire_gamma
            if cfg.rewire_gamma is not None
            else 2.0 * cfg.epsilon * (1.0 + 1.0 / d) ** (1.0 / d)
        )
        self._t0 = time.perf_counter()

    # -- interface ---------------------------------------------------------

    def step(self) -> None:
        raise NotImplementedError

    def stats(self) -> RunStats:
        return self._stats

    def solution(self) -> Optional[Solution]:
        extracted = self.forest.extract_solution()
        if extracted is None:
            return None
        path, cost = extracted
        first = self._stats.first_solution or (0, 0, 0.0, cost)
        return Solution(path, cost, first[0], first[1], first[2])

    def run(self):
        """Step until the configured stop condition; returns (solution, stats)."""
        cfg = self.cfg
        if distance(self.start, self.goal, self.spec) < 1e-12:
            self._stats.first_solution = (0, 0, 0.0, 0.0)
            self._stats.wall_seconds = time.perf_counter() - self._t0
            return Solution([self.start], 0.0, 0, 0, 0.0), self._stats
        max_iters = cfg.max_iter_factor * cfg.max_nodes
        while True:
            if self._stats.accepted >= cfg.max_nodes:
                break
            if self._stats.iterations >= max_iters:
                break
            elapsed = time.perf_counter() - self._t0
            if cfg.stop_mode == STOP_TIME and elapsed > cfg.time_budget_s:
                break
            if (
                cfg.stop_mode == STOP_FIRST_SOLUTION
                and self.forest.best_cost < math.inf
            ):
                break
            self.step()
        self._stats.wall_seconds = time.perf_counter() - self._t0
        return self.solution(), self._stats

    # -- shared helpers ------------------------------------------------------

    def _elapsed(self) -> float:
        return time.perf_counter() - self._t0

    def _rewire_radius(self, tree_size: int) -> float:
        n = max(tree_size, 2)
        d = self.spec.dim
        return min(self.cfg.epsilon, self._gamma * (math.log(n) / n) ** (1.0 / d))

    def _sample_uniformish(self, bias_config: np.ndarray):
        """Goal-biased free sample; bias only while no solution is known."""
        if self.forest.best_cost == math.inf and self.cfg.goal_bias > 0:
            if self.rng.random() < self.cfg.goal_bias:
                return bias_config, 0
        return self.scene.sample_free_counted(self.rng)

    def _post_insert(self, node_id: int, count_node: bool) -> None:
        """Merge, rewire if the node ended up on a rooted tree, log stats."""
        st = self._stats
        self.forest.try_merge(node_id, self.cfg.epsilon, self.scene)
        tree = self.forest.trees[self.forest.tree_of(node_id)]
        if tree.is_rooted:
            self.forest.rewire(node_id, self._rewire_radius(tree.size), self.scene)
            self.forest.refresh_best_cost()
        st.total_nodes = self.forest.n_nodes
        if count_node:
            st.accepted += 1
        best = self.forest.best_cost
        if best < math.inf and st.first_solution is None:
            st.first_solution = (st.iterations, st.accepted, self._elapsed(), best)
        if count_node:
            st.rows.append(
                StatRow(
                    st.iterations,
                    self._elapsed(),
                    st.accepted,
                    best,
                    st.invalid_obstacles,
                    st.invalid_connections,
                    self._live_arms(),
                    st.local_trees_created,
                )
            )

    def _live_arms(self) -> int:
        return 1

    def _extend_rooted(self, tree_id: int, bias_config: np.ndarray) -> bool:
        """One uniform-sample extension of a rooted tree; True on success."""
        st = self._stats
        q_rand, rejections = self._sample_uniformish(bias_config)
        st.attempts += rejections
        st.invalid_obstacles += rejections
        st.attempts += 1
        closest = self.forest.nearest(q_rand, tree_id)
        q_closest = self.forest.coords(closest)
        q_new = steer(q_closest, q_rand, self.cfg.epsilon, self.spec)
        if distance(q_closest, q_new, self.spec) < 1e-12:
            st.invalid_connections += 1
            return False
        if self.scene.motion_valid(q_closest, q_new):
            nid = self.forest.insert(tree_id, closest, q_new)
            self._post_insert(nid, count_node=True)
            return True
        st.invalid_connections += 1
        if self.scene.is_free(q_new):
            self._on_connection_failure(q_rand)
        return False

    def _on_connection_failure(self, q_rand: np.ndarray) -> None:
        """Hook: free sample whose steered endpoint was free but unreachable."""

    def _check_conservation(self) -> None:
        if not self._stats.conservation_holds():
            raise AssertionError(
                "stats conservation violated: "
                f"{self._stats.attempts} attempts != "
                f"{self._stats.invalid_obstacles} + "
                f"{self._stats.invalid_connections} + {self._stats.accepted}"
            )


class RRFStarPlanner(_PlannerBase):
    """Adaptive multi-tree planner with Bayesian local sampling and a bandit.

    Each iteration optionally proposes a local tree at a connection-failure
    hotspot, picks a tree by discounted success probability, extends it (a
    rooted tree by uniform sampling, a local tree by a directional step from
    its walker), merges within the join radius, rewires rooted joins, and
    prunes unprofitable local arms.
    """

    name = "rrf"

    def __init__(self, scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
        super().__init__(scene, cfg, seed)
        self._arms: list[Arm] = []
        self._next_arm_id = 0
        self._anchors: dict[int, int] = {}   # arm id -> node id resolving its tree
        self._walkers: dict[int, _LocalWalker] = {}
        self._new_arm(ROOTED, self.init_root)
        self._new_arm(ROOTED, self.target_root)
        self.density = FailureDensityMap(
            self.spec, cfg.cell_size_factor * cfg.epsilon
        )
        for q in cfg.seed_local_trees:
            q = self.spec.canonicalize(self.spec.check_config(q, "seed_local_tree"))
            if not scene.is_free(q):
                raise ContractError("seed local tree location is in collision")
            self._place_local_root(q)

    def _new_arm(self, kind: str, anchor_node: int) -> Arm:
        arm = Arm(
            self._next_arm_id,
            self.forest.tree_of(anchor_node),
            kind,
            prob=self.cfg.bandit.initial_prob,
        )
        self._next_arm_id += 1
        self._arms.append(arm)
        self._anchors[arm.id] = anchor_node
        return arm

    def _arm_tree(self, arm: Arm) -> int:
        """Trees merge over time; resolve through the arm's anchor node."""
        tid = self.forest.tree_of(self._anchors[arm.id])
        arm.tree_id = tid
        return tid

    def _live_arms(self) -> int:
        return sum(1 for a in self._arms if a.alive)

    def _live_local_arms(self) -> int:
        return sum(1 for a in self._arms if a.alive and a.kind == LOCAL)

    # -- local tree proposal -------------------------------------------------

    def _on_connection_failure(self, q_rand: np.ndarray) -> None:
        self.density.record_failed_sample(q_rand)

    def _place_local_root(self, q: np.ndarray):
        """Join q to a nearby tree when possible, else birth a tree + arm."""
        forest = self.forest
        near = forest.near_within(q, self.cfg.epsilon)
        if near:
            ids = np.asarray(near, dtype=np.int64)
            dists = batch_distance(q, forest.all_coords()[ids], self.spec)
            for j in np.lexsort((ids, dists)):
                nid = int(ids[j])
                if self.scene.motion_valid(q, forest.coords(nid)):
                    node = forest.insert(forest.tree_of(nid), nid, q)
                    self._post_insert(node, count_node=False)
                    return "joined", node
            return "dropped", None
        if self.cfg.debug_checks and forest.n_nodes:
            gaps = batch_distance(q, forest.all_coords(), self.spec)
            assert gaps.min() > self.cfg.epsilon, (
                "local tree born within epsilon of an existing node"
            )
        tid, root = forest.new_tree(KIND_LOCAL, q)
        arm = self._new_arm(LOCAL, root)
        self._walkers[arm.id] = _LocalWalker(
            LocalSamplerState.fresh(
                q,
                self.spec.dim,
                self.cfg.kernel,
                self.cfg.success_kappa,
                self.cfg.draw_max_attempts,
            ),
            root,
        )
        self._stats.local_trees_created += 1
        return "created", root

    def _maybe_propose_local_tree(self) -> None:
        if self.cfg.k <= 0 or self._live_local_arms() >= self.cfg.k:
            return
        cand = self.density.propose(self.cfg.min_fail_count)
        if cand is None or not accept_candidate(cand, self.cfg.delta_threshold):
            return
        self._stats.accepted_proposals.append(np.array(cand.q_local, copy=True))
        self._place_local_root(cand.q_local)

    # -- extension -------------------------------------------------------------

    def _extend_local(self, arm: Arm, tree_id: int) -> bool:
        st = self._stats
        walker = self._walkers[arm.id]
        sam = walker.sampler
        direction, _fallback = sam.proposal.draw_direction(self.rng)
        st.attempts += 1
        q_new = self.spec.canonicalize(
            sam.location + self.cfg.epsilon * direction / self.spec.weights
        )
        if not self.scene.is_free(q_new):
            st.invalid_obstacles += 1
            sam.record_failure(direction)
            return False
        if not self.scene.motion_valid(sam.location, q_new):
            st.invalid_connections += 1
            sam.record_failure(direction)
            return False
        nid = self.forest.insert(tree_id, walker.node_id, q_new)
        self._post_insert(nid, count_node=True)
        sam.record_success(direction, q_new)
        walker.node_id = nid
        self._anchors[arm.id] = nid
        return True

    def step(self) -> None:
        st = self._stats
        st.iterations += 1
        self._maybe_propose_local_tree()
        arm = mab.pick_arm(self._arms, self.cfg.bandit, self.rng)
        tree_id = self._arm_tree(arm)
        if arm.kind == ROOTED:
            bias = self.goal if self._anchors[arm.id] == self.init_root else self.start
            ok = self._extend_rooted(tree_id, bias)
        else:
            ok = self._extend_local(arm, tree_id)
        mab.update_prob(arm, mab.reward(ok), self.cfg.bandit)
        if mab.prune_check(arm, self.cfg.bandit):
            arm.alive = False
            self._walkers.pop(arm.id, None)
        if self.cfg.debug_checks:
            self._check_conservation()

    def live_sampler_positions(self) -> list:
        return [
            np.array(w.sampler.location, copy=True)
            for a in self._arms
            if a.alive and a.kind == LOCAL
            for w in (self._walkers[a.id],)
        ]


class BiRRTStarPlanner(RRFStarPlanner):
    """Bidirectional RRT*: the forest engine with local trees disabled.

    Tree alternation is the same two-arm bandit draw, so this planner is
    step-for-step identical to the multi-tree planner run with k = 0.
    """

    name = "birrt_star"

    def __init__(self, scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
        super().__init__(scene, replace(cfg, k=0, seed_local_trees=()), seed)


class RRTStarPlanner(_PlannerBase):
    """Single-tree RRT*. The goal stands as a one-node tree that the growing
    tree connects to within the join radius."""

    name = "rrt_star"

    def step(self) -> None:
        st = self._stats
        st.iterations += 1
        self._extend_rooted(self.init_tree, self.goal)
        if self.cfg.debug_checks:
            self._check_conservation()


class InformedRRTStarPlanner(RRTStarPlanner):
    """RRT* with ellipsoidal informed sampling once a solution exists.

    The informed set is the Euclidean prolate hyperspheroid with foci at the
    start and goal and transverse diameter equal to the best known cost.
    Spaces with wrapped coordinates fall back to uniform sampling (the
    Euclidean ellipsoid is not meaningful there).
    """

    name = "informed_rrt_star"

    def __init__(self, scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
        super().__init__(scene, cfg, seed)
        self._informed_ok = not self.spec.has_wrap
        d = self.spec.dim
        diff = self.goal - self.start
        self._c_min = float(np.linalg.norm(diff))
        self._center = 0.5 * (self.start + self.goal)
        if self._c_min > 1e-12:
            a1 = (diff / self._c_min).reshape(-1, 1)
            m = a1 @ np.eye(d)[:, :1].T
            u, _, vt = np.linalg.svd(m)
            diag = np.ones(d)
            diag[-1] = np.linalg.det(u) * np.linalg.det(vt.T)
            self._rotation = u @ np.diag(diag) @ vt
        else:
            self._rotation = np.eye(d)

    def _sample_uniformish(self, bias_config: np.ndarray):
        c_best = self.forest.best_cost
        if not self._informed_ok or c_best == math.inf:
            return super()._sample_uniformish(bias_config)
        return self._sample_informed(c_best)

    def _sample_informed(self, c_best: float):
        """Free sample inside the current-best-cost ellipsoid."""
        d = self.spec.dim
        c_best = max(c_best, self._c_min)
        radii = np.full(d, 0.5 * math.sqrt(max(c_best**2 - self._c_min**2, 0.0)))
        radii[0] = 0.5 * c_best
        rejections = 0
        while True:
            v = self.rng.standard_normal(d)
            norm = np.linalg.norm(v)
            if norm < 1e-12:
                continue
            x_ball = (v / norm) * self.rng.random() ** (1.0 / d)
            q = self._rotation @ (radii * x_ball) + self._center
            if not self.spec.contains(q):
                continue
            assert (
                np.linalg.norm(q - self.start) + np.linalg.norm(q - self.goal)
                <= c_best + 1e-9
            ), "informed sample escaped the ellipsoid"
            if self.scene.is_free(q):
                return q, rejections
            rejections += 1


PLANNERS = {
    "rrf": RRFStarPlanner,
    "birrt_star": BiRRTStarPlanner,
    "rrt_star": RRTStarPlanner,
    "informed_rrt_star": InformedRRTStarPlanner,
}


def plan(scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
    """Run the multi-tree planner to its stop condition."""
    return RRFStarPlanner(scene, cfg, seed).run()


def plan_rrt_star(scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
    return RRTStarPlanner(scene, cfg, seed).run()


def plan_birrt(scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
    return BiRRTStarPlanner(scene, cfg, seed).run()


def plan_informed(scene: Scene, cfg: PlannerConfig, seed: Optional[int] = None):
    return InformedRRTStarPlanner(scene, cfg, seed).run()
