"""Transient scalar advection in a rotating, periodically reversing swirl.

The transported scalar obeys the conservative-flux equation

    d psi / dt = -d(u psi)/dx - d(v psi)/dy

on [0, 1] x [0, 1] with the prescribed divergence-free velocity

    u =  u_t(r, t) sin(theta),  v = -u_t(r, t) cos(theta),
    u_t = (4 pi r / T) [1 - cos(2 pi t / T) (1 - (4 r)^6) / (1 + (4 r)^6)]

about (0.5, 0.5). The cosine bump initial scalar sits at (0.3, 0.5); one
period of the flow stretches it into a crescent and carries it back toward
its starting position. Time stepping is explicit forward Euler on a fixed
quasi-uniform particle set; flux derivatives come from whichever gradient
stencil (classical or learned) the caller supplies, and ghost-layer values
are re-extrapolated from the nearest interior particle every step.

The default smoothing length here is 1.8 spacings rather than the global
1.2 default: with the explicit step and this spacing, narrower kernels let
a late-period boundary mode grow past unity, while h >= 1.6 spacings keeps
the full period overshoot-free (verified over one period at spacings 0.02
and 0.04).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigurationError, IntegrationError
from ..sph.operators import GradientStencil
from ..sph.particles import ParticleSet, lattice_particles

SNAPSHOT_TIMES = (0.0, 0.15, 0.35, 0.60, 1.0)


@dataclass
class AdvectionSpec:
    period: float = 1.0
    dt: float = 1e-4
    spacing: float = 0.02
    scalar_center: tuple = (0.3, 0.5)
    velocity_center: tuple = (0.5, 0.5)
    ghost_layers: int = 3
    h_factor: float = 1.8
    jitter: float = 0.0
    jitter_seed: int = 0
    snapshot_times: tuple = SNAPSHOT_TIMES

    def __post_init__(self):
        if self.dt <= 0 or self.period <= 0:
            raise ConfigurationError("period and dt must be positive")
        steps = self.period / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ConfigurationError("period must be an integral number of steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.period / self.dt))


def advection_velocity(spec: AdvectionSpec, x, y, t: float):
    """Prescribed velocity components (u, v) at (x, y, t)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cx, cy = spec.velocity_center
    dx, dy = x - cx, y - cy
    r = np.sqrt(dx * dx + dy * dy)
    theta = np.arctan2(dy, dx)
    r6 = (4.0 * r) ** 6
    u_t = (4.0 * np.pi * r / spec.period) * (
        1.0 - np.cos(2.0 * np.pi * t / spec.period) * (1.0 - r6) / (1.0 + r6)
    )
    return u_t * np.sin(theta), -u_t * np.cos(theta)


def initial_scalar(spec: AdvectionSpec, x, y):
    """Cosine bump of unit height with compact support radius 0.2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cx, cy = spec.scalar_center
    r_hat = 5.0 * np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
    bump = 0.5 + 0.5 * np.cos(np.pi * np.minimum(r_hat, 1.0))
    return np.where(r_hat <= 1.0, bump, 0.0)


def advection_particles(spec: AdvectionSpec) -> ParticleSet:
    """Quasi-uniform particle set carrying the initial scalar."""
    return lattice_particles(
        spec.spacing,
        (0.0, 1.0),
        (0.0, 1.0),
        ghost_layers=spec.ghost_layers,
        h_factor=spec.h_factor,
        jitter=spec.jitter,
        seed=spec.jitter_seed,
        values=lambda x, y: initial_scalar(spec, x, y),
    )


def ghost_donors(particles: ParticleSet) -> np.ndarray:
    """Nearest interior particle for each ghost (zero-order extrapolation)."""
    interior = np.flatnonzero(particles.interior_mask)
    ghosts = np.flatnonzero(~particles.interior_mask)
    donors = np.arange(particles.n)
    for g in ghosts:
        d2 = np.sum((particles.positions[interior] - particles.positions[g]) ** 2, axis=1)
        donors[g] = interior[np.argmin(d2)]
    return donors


def advect_step(
    particles: ParticleSet,
    stencil: GradientStencil,
    spec: AdvectionSpec,
    t: float,
    values: np.ndarray | None = None,
    donors: np.ndarray | None = None,
    step: int | None = None,
) -> np.ndarray:
    """One forward-Euler update of the scalar; returns the new values."""
    psi = particles.values if values is None else values
    u, v = advection_velocity(spec, particles.positions[:, 0], particles.positions[:, 1], t)
    div = stencil.gradients(u * psi)[:, 0] + stencil.gradients(v * psi)[:, 1]
    out = psi - spec.dt * div
    if donors is None:
        donors = ghost_donors(particles)
    out[~particles.interior_mask] = out[donors[~particles.interior_mask]]
    if not np.all(np.isfinite(out)):
        raise IntegrationError(
            f"non-finite scalar after step at t={t:.6f}", step=step
        )
    return out


@dataclass
class AdvectionRun:
    snapshots: dict  # time -> scalar values over all particles
    final_values: np.ndarray
    initial_values: np.ndarray
    l2_final_vs_initial: float
    linf_final_vs_initial: float
    max_abs: float
    nan_steps: int
    clamp_count: int = 0
    snapshot_l2_vs_initial: dict = field(default_factory=dict)


def run_period(
    spec: AdvectionSpec,
    stencil: GradientStencil,
    particles: ParticleSet | None = None,
    t_end: float | None = None,
) -> AdvectionRun:
    """Integrate the transport equation and capture the requested snapshots.

    The final-versus-initial error is reported, not asserted small: the
    explicit scheme does not return the bump to its exact starting state.
    """
    if particles is None:
        particles = advection_particles(spec)
    if t_end is None:
        t_end = spec.period
    n_steps = int(round(t_end / spec.dt))
    donors = ghost_donors(particles)
    interior = particles.interior_mask

    psi = particles.values.copy()
    psi0 = psi.copy()
    snapshots = {}
    snapshot_l2 = {}

    def l2_rel(a, b):
        denom = float(np.linalg.norm(b[interior]))
        return float(np.linalg.norm((a - b)[interior])) / denom if denom else float("nan")

    def maybe_snapshot(t_now):
        for ts in spec.snapshot_times:
            if abs(t_now - ts) < 0.5 * spec.dt and ts not in snapshots:
                snapshots[ts] = psi.copy()
                snapshot_l2[ts] = l2_rel(psi, psi0)

    max_abs = float(np.max(np.abs(psi)))
    maybe_snapshot(0.0)
    for step in range(n_steps):
        t = step * spec.dt
        psi = advect_step(particles, stencil, spec, t, psi, donors, step)
        max_abs = max(max_abs, float(np.max(np.abs(psi))))
        maybe_snapshot((step + 1) * spec.dt)

    diff = (psi - psi0)[interior]
    return AdvectionRun(
        snapshots=snapshots,
        final_values=psi,
        initial_values=psi0,
        l2_final_vs_initial=float(np.linalg.norm(diff)) / float(np.linalg.norm(psi0[interior])),
        linf_final_vs_initial=float(np.max(np.abs(diff))) / float(np.max(np.abs(psi0[interior]))),
        max_abs=max_abs,
        nan_steps=0,
        snapshot_l2_vs_initial=snapshot_l2,
    )
