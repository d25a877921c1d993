"""Closed-form multi-vortex interference field.

One vortex component is

    A exp(-r^2 / 2 sigma^2) sin(omega t + k r + m theta)
      [1 + alpha cos(beta theta)] tanh(r / sigma)

with r, theta polar coordinates about the vortex center (theta from atan2,
zero at the center by convention; the tanh radial modulation kills the value
there regardless). The total field superposes three such vortices, five
high-frequency fine-structure waves sin(kx_j x + ky_j y + phi_j + t) with
kx_j = 20 + 5 j, ky_j = 15 + 3 j and seeded random phases, and a slow
background sin/cos pattern, then compresses through tanh(1.5 * sum), which
bounds the result strictly inside (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class VortexParams:
    center_x: float
    center_y: float
    amplitude: float
    sigma: float
    omega: float
    wavenumber: float
    azimuthal_mode: int
    modulation_depth: float
    modulation_freq: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("vortex size sigma must be positive")


DEFAULT_VORTICES = (
    VortexParams(0.4, 0.6, 1.2, 0.25, 1.5, 15.0, 5, 0.3, 2.0),
    VortexParams(0.6, 0.4, 1.0, 0.20, 2.0, 12.0, 3, 0.4, 2.5),
    VortexParams(0.5, 0.5, 0.8, 0.35, 0.8, 8.0, 7, 0.2, 1.5),
)


def vortex_component(p: VortexParams, x, y, t: float):
    """Evaluate one vortex component (vectorized over x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - p.center_x
    dy = y - p.center_y
    r = np.sqrt(dx * dx + dy * dy)
    theta = np.arctan2(dy, dx)
    envelope = p.amplitude * np.exp(-(r * r) / (2 * p.sigma**2))
    wave = np.sin(p.omega * t + p.wavenumber * r + p.azimuthal_mode * theta)
    modulation = 1.0 + p.modulation_depth * np.cos(p.modulation_freq * theta)
    radial = np.tanh(r / p.sigma)
    return envelope * wave * modulation * radial


@dataclass
class VortexFieldSpec:
    vortices: tuple = DEFAULT_VORTICES
    fine_amp: float = 0.1
    fine_count: int = 5
    bg_amp: float = 0.15
    tanh_gain: float = 1.5
    phase_seed: int = 0
    t: float = 0.0
    fine_phases: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.fine_phases is None:
            rng = np.random.default_rng(self.phase_seed)
            self.fine_phases = rng.uniform(0.0, 2 * np.pi, self.fine_count)
        self.fine_phases = np.asarray(self.fine_phases, dtype=float)

    def fine_wavenumbers(self):
        j = np.arange(1, self.fine_count + 1)
        return 20.0 + 5.0 * j, 15.0 + 3.0 * j


def default_vortex_field(seed: int = 0, t: float = 0.0) -> VortexFieldSpec:
    return VortexFieldSpec(phase_seed=seed, t=t)


def total_field(spec: VortexFieldSpec, x, y, t: float | None = None):
    """Superposed, tanh-compressed field value at (x, y)."""
    if t is None:
        t = spec.t
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.zeros(np.broadcast(x, y).shape)
    for p in spec.vortices:
        z = z + vortex_component(p, x, y, t)
    kx, ky = spec.fine_wavenumbers()
    for j in range(spec.fine_count):
        z = z + spec.fine_amp * np.sin(kx[j] * x + ky[j] * y + spec.fine_phases[j] + t)
    z = z + spec.bg_amp * (
        np.sin(3 * np.pi * x) * np.cos(2 * np.pi * y) * np.cos(0.3 * t)
        + np.sin(2 * np.pi * (x + y)) * np.cos(0.5 * t)
    )
    return np.tanh(spec.tanh_gain * z)


def field_grid(spec: VortexFieldSpec, n: int, domain=((0.0, 1.0), (0.0, 1.0)), t=None):
    """n x n sampling of the field; returns (X of shape (n*n, 2), values)."""
    xs = np.linspace(domain[0][0], domain[0][1], n)
    ys = np.linspace(domain[1][0], domain[1][1], n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    X = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return X, total_field(spec, X[:, 0], X[:, 1], t)
