"""Local-tree location proposals from connection-failure density.

Free samples whose extension failed on motion validity are binned into
coarse cells; the densest cell (above a count threshold) is proposed as a
new local-tree root at its most recent failed configuration. A proposed
cell's count is consumed so consecutive proposals move on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cspace import ContractError, SpaceSpec


@dataclass(frozen=True)
class ProposalCandidate:
    q_local: np.ndarray
    p_potential: float


class FailureDensityMap:
    """Counts of connection failures over a coarse hash of the space."""

    def __init__(self, spec: SpaceSpec, cell_size: float):
        if cell_size <= 0:
            raise ContractError("cell_size must be positive")
        self.spec = spec
        self.cell_size = float(cell_size)
        self._scale = spec.weights / self.cell_size
        nb = np.zeros(spec.dim, dtype=np.int64)
        w = spec.wrap
        nb[w] = np.maximum(
            1, np.floor(spec.widths[w] * spec.weights[w] / self.cell_size)
        ).astype(np.int64)
        self._nbuckets = nb
        self._wrapped = np.flatnonzero(w)
        self.counts: dict[tuple, int] = {}
        self.last_failed: dict[tuple, np.ndarray] = {}
        self.total_failures = 0

    def _key(self, q: np.ndarray) -> tuple:
        k = np.floor((q - self.spec.lower) * self._scale).astype(np.int64)
        for i in self._wrapped:
            k[i] %= self._nbuckets[i]
        return tuple(int(v) for v in k)

    def record_failed_sample(self, q) -> None:
        """Register a free sample whose connection attempt was blocked."""
        q = self.spec.check_config(q)
        key = self._key(q)
        self.counts[key] = self.counts.get(key, 0) + 1
        self.last_failed[key] = np.array(q, copy=True)
        self.total_failures += 1

    def propose(self, min_count: int):
        """Densest cell's last failure as a candidate, or None below threshold.

        p_potential ramps as count / (count + min_count) and the chosen cell's
        count resets to zero (consumed).
        """
        if not self.counts:
            return None
        best_key = None
        best_count = 0
        for key, count in self.counts.items():
            if count > best_count or (count == best_count and best_key is not None
                                      and key < best_key):
                best_key, best_count = key, count
        if best_count < min_count:
            return None
        q = self.last_failed[best_key]
        p = best_count / (best_count + min_count)
        self.counts[best_key] = 0
        return ProposalCandidate(np.array(q, copy=True), float(p))


def accept_candidate(candidate: ProposalCandidate, delta_threshold: float) -> bool:
    """Strict threshold on the candidate's potential."""
    return candidate.p_potential > delta_threshold
