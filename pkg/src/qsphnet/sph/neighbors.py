"""Fixed-radius neighbor search on a uniform cell grid.

Cells have side length equal to the cutoff, so every pair within the cutoff
lies in the same or an adjacent cell and the search is exact (identical to
the O(N^2) scan). Lists are stored in compressed form; the displacement of
pair (i, j) is x_i - x_j so lists are symmetric with opposite displacements.
Self pairs are excluded.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .particles import ParticleSet


@dataclass
class NeighborList:
    indptr: np.ndarray  # (n + 1,)
    indices: np.ndarray  # (pairs,) neighbor index j
    disp: np.ndarray  # (pairs, 2) x_i - x_j
    dist: np.ndarray  # (pairs,)
    cutoff: float

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def n_pairs(self) -> int:
        return self.indices.size

    def pair_sources(self) -> np.ndarray:
        """Particle index i of every stored pair."""
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def neighbors_of(self, i: int):
        """(indices, displacements, distances) slice for particle i."""
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.disp[a:b], self.dist[a:b]


def build_neighbors(particles: ParticleSet, cutoff: float | None = None) -> NeighborList:
    """Exact fixed-radius neighbor lists, default cutoff 2h."""
    if cutoff is None:
        cutoff = 2.0 * particles.h
    pos = particles.positions
    n = pos.shape[0]
    keys = np.floor(pos / cutoff).astype(np.int64)
    cells = defaultdict(list)
    for k in range(n):
        cells[(keys[k, 0], keys[k, 1])].append(k)
    cell_arrays = {key: np.array(members) for key, members in cells.items()}

    counts = np.zeros(n, dtype=np.int64)
    index_chunks = [None] * n
    disp_chunks = [None] * n
    dist_chunks = [None] * n
    for i in range(n):
        cx, cy = keys[i]
        candidates = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                members = cell_arrays.get((cx + dx, cy + dy))
                if members is not None:
                    candidates.append(members)
        cand = np.concatenate(candidates)
        cand = cand[cand != i]
        d = pos[i] - pos[cand]
        r = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2)
        keep = r < cutoff
        cand, d, r = cand[keep], d[keep], r[keep]
        order = np.argsort(cand)
        index_chunks[i] = cand[order]
        disp_chunks[i] = d[order]
        dist_chunks[i] = r[order]
        counts[i] = cand.size

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return NeighborList(
        indptr=indptr,
        indices=np.concatenate(index_chunks) if n else np.empty(0, np.int64),
        disp=np.concatenate(disp_chunks) if n else np.empty((0, 2)),
        dist=np.concatenate(dist_chunks) if n else np.empty(0),
        cutoff=float(cutoff),
    )
