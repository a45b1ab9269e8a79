"""Forest of search trees: two rooted trees plus local trees.

Provides nearest/radius queries through a wrap-aware grid-bucket index,
insertion with cost-to-root bookkeeping, RRT*-style rewiring of rooted trees,
and epsilon-ball merging that absorbs whole trees while keeping parent
pointers acyclic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .cspace import ContractError, Scene, SpaceSpec, batch_distance, distance

KIND_ROOT_INIT = "rooted-init"
KIND_ROOT_TARGET = "rooted-target"
KIND_LOCAL = "local"

NO_PARENT = -1

# d > this falls back to linear scans; bucket shells grow too fast otherwise
MAX_INDEX_DIM = 6


@dataclass
class Tree:
    id: int
    kind: str
    root: int
    nodes: list

    @property
    def is_rooted(self) -> bool:
        return self.kind != KIND_LOCAL

    @property
    def size(self) -> int:
        return len(self.nodes)


class MergeEvent(NamedTuple):
    survivor: int
    absorbed: int
    edge: tuple  # (node in surviving side, node in absorbed side)


class _GridIndex:
    """Uniform bucket hash over weighted coordinates, wrap-aware."""

    def __init__(self, spec: SpaceSpec, edge: float):
        if edge <= 0:
            raise ContractError("index edge must be positive")
        self.spec = spec
        self.edge = float(edge)
        self._scale = spec.weights / self.edge
        # wrapped dims: bucket width >= edge so shell distance bounds hold
        nb = np.zeros(spec.dim, dtype=np.int64)
        w = spec.wrap
        nb[w] = np.maximum(1, np.floor(spec.widths[w] * spec.weights[w] / self.edge)).astype(np.int64)
        self._nbuckets = nb
        self._wrapped = np.flatnonzero(w)
        self.buckets: dict[tuple, list] = {}

    def key(self, q: np.ndarray) -> tuple:
        k = np.floor((q - self.spec.lower) * self._scale).astype(np.int64)
        for i in self._wrapped:
            k[i] %= self._nbuckets[i]
        return tuple(int(v) for v in k)

    def add(self, q: np.ndarray, nid: int) -> None:
        self.buckets.setdefault(self.key(q), []).append(nid)

    def _dim_offsets(self, base: int, span: int, dim: int) -> list:
        if dim in self._wrapped:
            nb = int(self._nbuckets[dim])
            return sorted({(base + o) % nb for o in range(-span, span + 1)})
        return [base + o for o in range(-span, span + 1)]

    def gather(self, q: np.ndarray, radius: float) -> list:
        """Candidate node ids within radius (superset, by bucket geometry)."""
        span = int(math.ceil(radius / self.edge)) + 1
        base = self.key(q)
        per_dim = [self._dim_offsets(base[i], span, i) for i in range(self.spec.dim)]
        out = []
        for key in itertools.product(*per_dim):
            b = self.buckets.get(key)
            if b:
                out.extend(b)
        return out

    def shell_keys(self, base: tuple, s: int) -> list:
        """Bucket keys at Chebyshev shell s around base (deduplicated)."""
        d = self.spec.dim
        if s == 0:
            return [base]
        keys = set()
        inner = [self._dim_offsets(base[i], s - 1, i) for i in range(d)]
        outer = [self._dim_offsets(base[i], s, i) for i in range(d)]
        inner_sets = [set(v) for v in inner]
        for key in itertools.product(*outer):
            if all(key[i] in inner_sets[i] for i in range(d)):
                continue
            keys.add(key)
        return sorted(keys)


class Forest:
    """Set of trees over one configuration space, with a shared node store."""

    def __init__(self, spec: SpaceSpec, index_edge: float):
        self.spec = spec
        d = spec.dim
        cap = 256
        self._coords = np.empty((cap, d))
        self._parent = np.full(cap, NO_PARENT, dtype=np.int64)
        self._cost = np.full(cap, np.nan)
        self._tree_id = np.full(cap, -1, dtype=np.int64)
        self._children: list = []
        self.n_nodes = 0
        self.trees: dict[int, Tree] = {}
        self._next_tree_id = 0
        self._use_index = d <= MAX_INDEX_DIM
        self._index = _GridIndex(spec, index_edge) if self._use_index else None
        self.init_node: Optional[int] = None
        self.target_node: Optional[int] = None
        self.best_cost = math.inf

    # -- accessors --------------------------------------------------------

    def coords(self, nid: int) -> np.ndarray:
        return self._coords[nid]

    def all_coords(self) -> np.ndarray:
        return self._coords[: self.n_nodes]

    def parent(self, nid: int) -> int:
        return int(self._parent[nid])

    def cost_to_root(self, nid: int) -> float:
        return float(self._cost[nid])

    def tree_of(self, nid: int) -> int:
        return int(self._tree_id[nid])

    def children(self, nid: int) -> list:
        return self._children[nid]

    # -- construction -----------------------------------------------------

    def _grow(self) -> None:
        cap = self._coords.shape[0]
        new_cap = cap * 2
        for name in ("_coords", "_parent", "_cost", "_tree_id"):
            old = getattr(self, name)
            grown = np.empty((new_cap, *old.shape[1:]), dtype=old.dtype)
            grown[:cap] = old
            setattr(self, name, grown)

    def _new_node(self, q: np.ndarray, tree_id: int, parent: int, cost: float) -> int:
        if self.n_nodes == self._coords.shape[0]:
            self._grow()
        nid = self.n_nodes
        self.n_nodes += 1
        self._coords[nid] = q
        self._parent[nid] = parent
        self._cost[nid] = cost
        self._tree_id[nid] = tree_id
        self._children.append([])
        if parent != NO_PARENT:
            self._children[parent].append(nid)
        if self._use_index:
            self._index.add(q, nid)
        self.trees[tree_id].nodes.append(nid)
        return nid

    def new_tree(self, kind: str, q) -> tuple[int, int]:
        """Create a tree rooted at q; returns (tree id, root node id)."""
        q = self.spec.check_config(q)
        tid = self._next_tree_id
        self._next_tree_id += 1
        self.trees[tid] = Tree(tid, kind, root=-1, nodes=[])
        cost = 0.0 if kind != KIND_LOCAL else math.nan
        root = self._new_node(q, tid, NO_PARENT, cost)
        self.trees[tid].root = root
        if kind == KIND_ROOT_INIT:
            self.init_node = root
        elif kind == KIND_ROOT_TARGET:
            self.target_node = root
        return tid, root

    def insert(self, tree_id: int, parent_id: int, q) -> int:
        """Add a node under parent_id; cost bookkeeping on rooted trees."""
        q = self.spec.check_config(q)
        if tree_id not in self.trees:
            raise ContractError(f"unknown tree {tree_id}")
        if int(self._tree_id[parent_id]) != tree_id:
            raise ContractError(f"parent {parent_id} is not in tree {tree_id}")
        if self.trees[tree_id].is_rooted:
            cost = float(self._cost[parent_id]) + distance(
                self._coords[parent_id], q, self.spec
            )
        else:
            cost = math.nan
        return self._new_node(q, tree_id, parent_id, cost)

    # -- queries ----------------------------------------------------------

    def _linear_nearest(self, q: np.ndarray, node_ids: list) -> int:
        ids = np.asarray(node_ids, dtype=np.int64)
        dists = batch_distance(q, self._coords[ids], self.spec)
        dmin = dists.min()
        return int(ids[dists <= dmin].min())

    def nearest(self, q, tree_id: int) -> int:
        """Closest node of one tree; ties broken by smallest node id."""
        q = self.spec.check_config(q)
        tree = self.trees.get(tree_id)
        if tree is None or not tree.nodes:
            raise ContractError(f"nearest() on empty or unknown tree {tree_id}")
        n = tree.size
        if not self._use_index or n <= 32:
            return self._linear_nearest(q, tree.nodes)

        idx = self._index
        base = idx.key(q)
        budget = 4 * n + 64
        examined = 0
        best_id = -1
        best_d = math.inf
        s = 0
        while True:
            keys = idx.shell_keys(base, s)
            if not keys:
                # fully wrapped dims exhausted: everything has been examined
                return best_id if best_id >= 0 else self._linear_nearest(q, tree.nodes)
            examined += len(keys)
            if examined > budget:
                return self._linear_nearest(q, tree.nodes)
            cands = []
            for key in keys:
                b = idx.buckets.get(key)
                if b:
                    cands.extend(nid for nid in b if self._tree_id[nid] == tree_id)
            if cands:
                ids = np.asarray(cands, dtype=np.int64)
                dists = batch_distance(q, self._coords[ids], self.spec)
                dmin = dists.min()
                cand_best = int(ids[dists <= dmin].min())
                if dmin < best_d or (dmin == best_d and cand_best < best_id):
                    best_d = dmin
                    best_id = cand_best
            # any node beyond shell s is > s*edge away
            if best_id >= 0 and best_d <= s * idx.edge:
                return best_id
            s += 1

    def near_within(self, q, radius: float) -> list:
        """Node ids (all trees) within radius, ascending by id."""
        q = self.spec.check_config(q)
        if radius <= 0:
            raise ContractError("radius must be positive")
        if self.n_nodes == 0:
            return []
        if self._use_index:
            cands = self._index.gather(q, radius)
            if not cands:
                return []
            ids = np.asarray(sorted(cands), dtype=np.int64)
        else:
            ids = np.arange(self.n_nodes, dtype=np.int64)
        dists = batch_distance(q, self._coords[ids], self.spec)
        return [int(i) for i in ids[dists <= radius]]

    # -- structure edits ---------------------------------------------------

    def _reparent(self, nid: int, new_parent: int, new_cost: float) -> None:
        """Move nid under new_parent and shift its subtree's costs."""
        old = int(self._parent[nid])
        if old != NO_PARENT:
            self._children[old].remove(nid)
        self._parent[nid] = new_parent
        self._children[new_parent].append(nid)
        delta = new_cost - float(self._cost[nid])
        stack = [nid]
        while stack:
            cur = stack.pop()
            self._cost[cur] += delta
            stack.extend(self._children[cur])

    def rewire(self, node_id: int, radius: float, scene: Scene) -> int:
        """RRT* rewiring around a freshly placed rooted-tree node.

        First reconnects node_id to the cheapest collision-valid neighbor,
        then reparents neighbors through node_id when that strictly lowers
        their cost. Returns the number of reparent operations.
        """
        tree_id = int(self._tree_id[node_id])
        tree = self.trees[tree_id]
        if not tree.is_rooted:
            raise ContractError("rewire applies to rooted trees only")
        q = self._coords[node_id]
        near = [
            nid for nid in self.near_within(q, radius)
            if nid != node_id and self._tree_id[nid] == tree_id
        ]
        if not near:
            return 0
        ops = 0
        ids = np.asarray(near, dtype=np.int64)
        dists = batch_distance(q, self._coords[ids], self.spec)

        # (a) best parent for node_id
        through = self._cost[ids] + dists
        order = np.argsort(through, kind="stable")
        cur_cost = float(self._cost[node_id])
        for j in order:
            cand = int(ids[j])
            new_cost = float(through[j])
            if new_cost >= cur_cost - 1e-12:
                break
            if scene.motion_valid(self._coords[cand], q):
                self._reparent(node_id, cand, new_cost)
                ops += 1
                break

        # (b) route neighbors through node_id on strict improvement
        base = float(self._cost[node_id])
        for j in range(len(ids)):
            cand = int(ids[j])
            new_cost = base + float(dists[j])
            if new_cost < float(self._cost[cand]) - 1e-12:
                if scene.motion_valid(q, self._coords[cand]):
                    self._reparent(cand, node_id, new_cost)
                    ops += 1
        return ops

    def _reroot(self, tree: Tree, at: int) -> None:
        """Reverse parent pointers along at -> old root."""
        path = [at]
        while int(self._parent[path[-1]]) != NO_PARENT:
            path.append(int(self._parent[path[-1]]))
        for child, par in zip(path, path[1:]):
            self._children[par].remove(child)
        for child, par in zip(path, path[1:]):
            self._parent[par] = child
            self._children[child].append(par)
        self._parent[at] = NO_PARENT
        tree.root = at

    def _absorb(self, absorbed: Tree, at: int, attach_under: int) -> None:
        """Re-root `absorbed` at node `at` and hang it below `attach_under`."""
        survivor = self.trees[int(self._tree_id[attach_under])]
        self._reroot(absorbed, at)
        self._parent[at] = attach_under
        self._children[attach_under].append(at)
        for nid in absorbed.nodes:
            self._tree_id[nid] = survivor.id
        survivor.nodes.extend(absorbed.nodes)
        if survivor.is_rooted:
            # recompute costs over the whole attached subtree
            stack = [at]
            while stack:
                cur = stack.pop()
                par = int(self._parent[cur])
                self._cost[cur] = self._cost[par] + distance(
                    self._coords[par], self._coords[cur], self.spec
                )
                stack.extend(self._children[cur])
        else:
            for nid in absorbed.nodes:
                self._cost[nid] = math.nan
        del self.trees[absorbed.id]

    def try_merge(self, node_id: int, radius: float, scene: Scene) -> list:
        """Join node_id to every foreign tree within radius via valid edges.

        Rooted trees keep their identity when touching local trees; between
        trees of equal standing the larger absorbs the smaller. Returns the
        merge events applied.
        """
        q = self._coords[node_id]
        near = self.near_within(q, radius)
        if not near:
            return []
        ids = np.asarray(near, dtype=np.int64)
        dists = batch_distance(q, self._coords[ids], self.spec)
        order = np.lexsort((ids, dists))
        events = []
        for j in order:
            other = int(ids[j])
            my_tree = self.trees[int(self._tree_id[node_id])]
            other_tree_id = int(self._tree_id[other])
            if other_tree_id == my_tree.id:
                continue
            other_tree = self.trees[other_tree_id]
            if not scene.motion_valid(q, self._coords[other]):
                continue
            if my_tree.is_rooted == other_tree.is_rooted:
                mine_survives = (my_tree.size, -my_tree.id) >= (other_tree.size, -other_tree.id)
            else:
                mine_survives = my_tree.is_rooted
            if mine_survives:
                self._absorb(other_tree, other, node_id)
                events.append(MergeEvent(my_tree.id, other_tree_id, (node_id, other)))
            else:
                self._absorb(my_tree, node_id, other)
                events.append(MergeEvent(other_tree_id, my_tree.id, (other, node_id)))
        if events:
            self.refresh_best_cost()
        return events

    # -- solutions ----------------------------------------------------------

    def _connected(self) -> bool:
        return (
            self.init_node is not None
            and self.target_node is not None
            and self._tree_id[self.init_node] == self._tree_id[self.target_node]
        )

    def solution_cost(self) -> float:
        """Current path cost between the two roots, inf when disconnected."""
        if not self._connected():
            return math.inf
        tree = self.trees[int(self._tree_id[self.init_node])]
        endpoint = self.target_node if tree.root == self.init_node else self.init_node
        return float(self._cost[endpoint])

    def refresh_best_cost(self) -> float:
        c = self.solution_cost()
        if c < self.best_cost:
            self.best_cost = c
        return self.best_cost

    def extract_solution(self):
        """Tree path init -> target as (configs, cost), or None."""
        if not self._connected():
            return None
        tree = self.trees[int(self._tree_id[self.init_node])]
        if tree.root == self.init_node:
            walk_from, reverse = self.target_node, True
        else:
            walk_from, reverse = self.init_node, False
        ids = [walk_from]
        while int(self._parent[ids[-1]]) != NO_PARENT:
            ids.append(int(self._parent[ids[-1]]))
        cost = float(self._cost[walk_from])
        if reverse:
            ids.reverse()
        return [self._coords[i].copy() for i in ids], cost

    # -- diagnostics ---------------------------------------------------------

    def recompute_costs(self) -> np.ndarray:
        """Costs recomputed from scratch (NaN on local trees); for checks."""
        out = np.full(self.n_nodes, np.nan)
        for tree in self.trees.values():
            if not tree.is_rooted:
                continue
            out[tree.root] = 0.0
            stack = [tree.root]
            while stack:
                cur = stack.pop()
                for ch in self._children[cur]:
                    out[ch] = out[cur] + distance(
                        self._coords[cur], self._coords[ch], self.spec
                    )
                    stack.append(ch)
        return out

    def validate(self, scene: Optional[Scene] = None) -> None:
        """Assert structural invariants; used by tests and debug runs."""
        seen = np.zeros(self.n_nodes, dtype=bool)
        for tree in self.trees.values():
            assert int(self._parent[tree.root]) == NO_PARENT
            for nid in tree.nodes:
                assert not seen[nid], f"node {nid} in two trees"
                seen[nid] = True
                assert int(self._tree_id[nid]) == tree.id
                steps = 0
                cur = nid
                while int(self._parent[cur]) != NO_PARENT:
                    cur = int(self._parent[cur])
                    steps += 1
                    assert steps <= self.n_nodes, "cycle in parent pointers"
                assert cur == tree.root
        assert seen.all(), "orphan nodes outside every tree"
        ref = self.recompute_costs()
        stored = self._cost[: self.n_nodes]
        both = ~np.isnan(ref)
        assert np.isnan(stored[~both]).all(), "cost sentinel lost on local tree"
        assert np.allclose(ref[both], stored[both], atol=1e-6), "cost drift"
        if scene is not None:
            for nid in range(self.n_nodes):
                par = int(self._parent[nid])
                if par != NO_PARENT:
                    assert scene.motion_valid(self._coords[par], self._coords[nid])

    # -- serialization --------------------------------------------------------

    def dump_text(self, samplers=(), solution_ids=()) -> str:
        """Line-based dump: trees, nodes, live sampler positions, solution ids.

        Format (one record per line):
            tree <id> <kind>
            node <id> <tree_id> <parent_id|-1> <cost|nan> <c0> <c1> ...
            sampler <c0> <c1> ...
            path <node_id>
        """
        lines = ["# rrforest dump v1"]
        for tid in sorted(self.trees):
            lines.append(f"tree {tid} {self.trees[tid].kind}")
        for nid in range(self.n_nodes):
            coords = " ".join(repr(float(v)) for v in self._coords[nid])
            lines.append(
                f"node {nid} {int(self._tree_id[nid])} {int(self._parent[nid])} "
                f"{repr(float(self._cost[nid]))} {coords}"
            )
        for pos in samplers:
            lines.append("sampler " + " ".join(repr(float(v)) for v in pos))
        for nid in solution_ids:
            lines.append(f"path {int(nid)}")
        return "\n".join(lines) + "\n"

    def solution_node_ids(self) -> list:
        if not self._connected():
            return []
        tree = self.trees[int(self._tree_id[self.init_node])]
        walk_from = self.target_node if tree.root == self.init_node else self.init_node
        ids = [walk_from]
        while int(self._parent[ids[-1]]) != NO_PARENT:
            ids.append(int(self._parent[ids[-1]]))
        if tree.root == self.init_node:
            ids.reverse()
        return ids
