"""Quintic smoothing kernel with compact support 2h.

.. math::

    w(q) = alpha_D (1 - q/2)^4 (2 q + 1),  0 <= q <= 2,  q = r / h

with the normalizing factor ``alpha_D = 7 / (4 pi h^2)`` in 2-D and
``21 / (16 pi h^3)`` in 3-D, so that the kernel integrates to one over its
support. The radial derivative simplifies to

    dw/dq = -5 alpha_D q (1 - q/2)^3,

which vanishes at both q = 0 and the support boundary q = 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigurationError


@dataclass(frozen=True)
class KernelSpec:
    h: float
    dim: int = 2
    kind: str = "quintic"

    def __post_init__(self):
        if self.h <= 0:
            raise ConfigurationError("smoothing length must be positive")
        if self.dim not in (2, 3):
            raise ConfigurationError("kernel is defined for dim 2 or 3")
        if self.kind != "quintic":
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")

    @property
    def alpha_d(self) -> float:
        if self.dim == 2:
            return 7.0 / (4.0 * np.pi * self.h**2)
        return 21.0 / (16.0 * np.pi * self.h**3)

    @property
    def support_radius(self) -> float:
        return 2.0 * self.h


def quintic_w(q, spec: KernelSpec):
    """Kernel value at normalized distance q = r / h (vectorized)."""
    q = np.asarray(q, dtype=float)
    inside = q < 2.0
    t = np.where(inside, 1.0 - 0.5 * q, 0.0)
    w = spec.alpha_d * t**4 * (2.0 * q + 1.0)
    return np.where(inside, w, 0.0) if w.ndim else (float(w) if inside else 0.0)


def quintic_dwdq(q, spec: KernelSpec):
    """Radial derivative dw/dq at q = r / h (vectorized)."""
    q = np.asarray(q, dtype=float)
    inside = q < 2.0
    t = np.where(inside, 1.0 - 0.5 * q, 0.0)
    d = -5.0 * spec.alpha_d * q * t**3
    return np.where(inside, d, 0.0) if d.ndim else (float(d) if inside else 0.0)


def quintic_grad(displacement, spec: KernelSpec) -> np.ndarray:
    """Gradient of w(|d| / h) with respect to the displacement d.

    Rows of a (P, 2) displacement array are handled at once. A zero
    displacement has no direction; callers must exclude self pairs.
    """
    d = np.asarray(displacement, dtype=float)
    single = d.ndim == 1
    d = np.atleast_2d(d)
    r = np.linalg.norm(d, axis=1)
    if np.any(r == 0.0):
        raise ValueError("kernel gradient direction is undefined at zero displacement")
    q = r / spec.h
    coeff = quintic_dwdq(q, spec) / (spec.h * r)
    out = coeff[:, None] * d
    return out[0] if single else out
