"""Particle containers, lattice initialization, and CSV round-tripping."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ShapeError


@dataclass
class ParticleSet:
    """Positions, volumes, and a scalar field carried on 2-D particles.

    ``interior_mask`` is False on ghost padding layers added to remove
    kernel-support truncation at the domain boundary.
    """

    positions: np.ndarray
    volumes: np.ndarray
    values: np.ndarray
    h: float
    spacing: float
    interior_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        n = self.positions.shape[0]
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ShapeError("positions must have shape (n, 2)")
        if self.volumes.shape != (n,) or self.values.shape != (n,):
            raise ShapeError("volumes and values must match the particle count")
        if self.interior_mask is None:
            self.interior_mask = np.ones(n, dtype=bool)
        self.interior_mask = np.asarray(self.interior_mask, dtype=bool)
        if self.interior_mask.shape != (n,):
            raise ShapeError("interior_mask must match the particle count")
        if not np.all(np.isfinite(self.positions)):
            raise ShapeError("positions must be finite")
        if np.any(self.volumes <= 0):
            raise ShapeError("volumes must be positive")
        if self.h <= 0 or self.spacing <= 0:
            raise ShapeError("h and spacing must be positive")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "ParticleSet":
        return ParticleSet(
            self.positions.copy(),
            self.volumes.copy(),
            self.values.copy(),
            self.h,
            self.spacing,
            self.interior_mask.copy(),
        )


def lattice_particles(
    spacing: float,
    xlim=(0.0, 1.0),
    ylim=(0.0, 1.0),
    ghost_layers: int = 3,
    h_factor: float = 1.2,
    jitter: float = 0.0,
    seed: int = 0,
    values=None,
) -> ParticleSet:
    """Regular lattice over a rectangle plus ghost padding layers.

    ``jitter`` displaces every particle uniformly within
    [-jitter * spacing, +jitter * spacing] per axis (fixed seed), producing
    the irregular distributions; volumes stay at spacing**2.
    ``values`` is an optional callable f(x, y) evaluated at the (possibly
    jittered) positions.
    """
    nx = int(round((xlim[1] - xlim[0]) / spacing)) + 1
    ny = int(round((ylim[1] - ylim[0]) / spacing)) + 1
    ks = np.arange(-ghost_layers, nx + ghost_layers)
    ls = np.arange(-ghost_layers, ny + ghost_layers)
    gx, gy = np.meshgrid(xlim[0] + ks * spacing, ylim[0] + ls * spacing, indexing="ij")
    pos = np.stack([gx.ravel(), gy.ravel()], axis=1)
    if jitter > 0.0:
        rng = np.random.default_rng(seed)
        pos = pos + rng.uniform(-jitter * spacing, jitter * spacing, pos.shape)
    tol = 1e-9 * spacing
    interior = (
        (pos[:, 0] >= xlim[0] - tol)
        & (pos[:, 0] <= xlim[1] + tol)
        & (pos[:, 1] >= ylim[0] - tol)
        & (pos[:, 1] <= ylim[1] + tol)
    )
    if jitter > 0.0:
        # the interior flag follows the lattice site, not the jittered point
        on_grid = (
            (gx.ravel() >= xlim[0] - tol)
            & (gx.ravel() <= xlim[1] + tol)
            & (gy.ravel() >= ylim[0] - tol)
            & (gy.ravel() <= ylim[1] + tol)
        )
        interior = on_grid
    vol = np.full(pos.shape[0], spacing**2)
    vals = np.zeros(pos.shape[0])
    if values is not None:
        vals = np.asarray(values(pos[:, 0], pos[:, 1]), dtype=float)
    return ParticleSet(pos, vol, vals, h_factor * spacing, spacing, interior)


CSV_HEADER = ["x", "y", "volume", "value", "interior_flag"]


def save_particles(path, particles: ParticleSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for k in range(particles.n):
            writer.writerow(
                [
                    repr(float(particles.positions[k, 0])),
                    repr(float(particles.positions[k, 1])),
                    repr(float(particles.volumes[k])),
                    repr(float(particles.values[k])),
                    int(particles.interior_mask[k]),
                ]
            )


def load_particles(path, h: float, spacing: float) -> ParticleSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ShapeError(f"unexpected particle CSV header {header}")
        rows = [row for row in reader]
    data = np.array([[float(v) for v in row] for row in rows])
    return ParticleSet(
        data[:, :2], data[:, 2], data[:, 3], h, spacing, data[:, 4].astype(bool)
    )
