"""Kernel-weighted summation operators and gradient correction.

Discrete forms over neighbor pairs (dx_ij = x_j - x_i, dV_j the particle
volume):

    value(i)     = sum_j f_j w_ij dV_j                (self pair included)
    gradient(i)  = sum_{j != i} (f_j - f_i) grad_w_ij dV_j
    L_i          = sum_{j != i} grad_w_ij (x_j - x_i)^T dV_j
    corrected(i) = L_i^{-1} gradient(i)

where grad_w_ij is the kernel gradient with respect to x_i. The correction
matrix restores first-order consistency: corrected gradients of linear
fields are exact on arbitrary (including irregular) particle stencils. On a
uniform interior lattice L_i is close to the identity, so plain and
corrected gradients nearly agree there.

``GradientStencil`` freezes the pairwise weights of either operator (or of
a learned weight model) so repeated applications during time stepping cost
one weighted scatter-add per component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateStencilError
from .kernel import KernelSpec, quintic_grad, quintic_w
from .neighbors import NeighborList
from .particles import ParticleSet


def _pair_kernel_grads(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList):
    return quintic_grad(nbrs.disp, kernel)


def sph_value_all(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList) -> np.ndarray:
    """Kernel interpolants of the particle field at every particle."""
    pair_i = nbrs.pair_sources()
    w = quintic_w(nbrs.dist / kernel.h, kernel)
    contrib = particles.values[nbrs.indices] * w * particles.volumes[nbrs.indices]
    out = np.bincount(pair_i, weights=contrib, minlength=particles.n)
    self_w = quintic_w(0.0, kernel)
    return out + particles.values * self_w * particles.volumes


def sph_value(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList, i: int) -> float:
    """Kernel interpolant at particle i (self term included)."""
    idx, _disp, dist = nbrs.neighbors_of(i)
    w = quintic_w(dist / kernel.h, kernel)
    total = float(np.sum(particles.values[idx] * w * particles.volumes[idx]))
    return total + float(particles.values[i] * quintic_w(0.0, kernel) * particles.volumes[i])


def sph_gradient_all(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList) -> np.ndarray:
    pair_i = nbrs.pair_sources()
    grads = _pair_kernel_grads(particles, kernel, nbrs)
    diff = particles.values[nbrs.indices] - particles.values[pair_i]
    scale = diff * particles.volumes[nbrs.indices]
    gx = np.bincount(pair_i, weights=scale * grads[:, 0], minlength=particles.n)
    gy = np.bincount(pair_i, weights=scale * grads[:, 1], minlength=particles.n)
    return np.stack([gx, gy], axis=1)


def sph_gradient(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList, i: int) -> np.ndarray:
    """Pairwise-difference gradient estimate at particle i."""
    idx, disp, _dist = nbrs.neighbors_of(i)
    if idx.size == 0:
        return np.zeros(2)
    grads = quintic_grad(disp, kernel)
    diff = particles.values[idx] - particles.values[i]
    return (grads * (diff * particles.volumes[idx])[:, None]).sum(axis=0)


@dataclass
class CorrectionMatrix:
    matrix: np.ndarray  # (2, 2)
    inverse: np.ndarray  # (2, 2)
    cond: float


def _invert_2x2(L: np.ndarray):
    """Vectorized inverse, determinant, and condition number of (n,2,2)."""
    det = L[:, 0, 0] * L[:, 1, 1] - L[:, 0, 1] * L[:, 1, 0]
    fro2 = np.sum(L * L, axis=(1, 2))
    disc = np.sqrt(np.maximum(fro2**2 - 4.0 * det**2, 0.0))
    s_max2 = 0.5 * (fro2 + disc)
    s_min2 = 0.5 * (fro2 - disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.sqrt(np.where(s_min2 > 0, s_max2 / s_min2, np.inf))
    singular = np.abs(det) < 1e-10 * np.maximum(fro2, 1e-300)
    inv = np.empty_like(L)
    safe_det = np.where(singular, 1.0, det)
    inv[:, 0, 0] = L[:, 1, 1] / safe_det
    inv[:, 1, 1] = L[:, 0, 0] / safe_det
    inv[:, 0, 1] = -L[:, 0, 1] / safe_det
    inv[:, 1, 0] = -L[:, 1, 0] / safe_det
    return inv, det, cond, singular


def correction_matrices(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList):
    """First-moment matrices and inverses for all particles.

    Returns (L, L_inv, cond, singular_mask); singular entries hold an
    identity inverse and are flagged rather than raised so batch callers can
    decide per particle.
    """
    pair_i = nbrs.pair_sources()
    grads = _pair_kernel_grads(particles, kernel, nbrs)
    dx = -nbrs.disp  # x_j - x_i
    vol = particles.volumes[nbrs.indices]
    L = np.zeros((particles.n, 2, 2))
    for a in range(2):
        for b in range(2):
            L[:, a, b] = np.bincount(
                pair_i, weights=grads[:, a] * dx[:, b] * vol, minlength=particles.n
            )
    inv, _det, cond, singular = _invert_2x2(L)
    inv[singular] = np.eye(2)
    return L, inv, cond, singular


def correction_matrix(
    particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList, i: int
) -> CorrectionMatrix:
    """Correction matrix of one particle; raises on a degenerate stencil."""
    idx, disp, _dist = nbrs.neighbors_of(i)
    grads = quintic_grad(disp, kernel) if idx.size else np.zeros((0, 2))
    dx = -disp
    vol = particles.volumes[idx]
    L = np.einsum("pa,pb,p->ab", grads, dx, vol) if idx.size else np.zeros((2, 2))
    inv, det, cond, singular = _invert_2x2(L[None])
    if singular[0]:
        raise DegenerateStencilError(
            f"correction matrix is singular for particle {i} (det={det[0]:.3e})",
            particle=i,
        )
    return CorrectionMatrix(matrix=L, inverse=inv[0], cond=float(cond[0]))


def corrected_gradient(
    particles: ParticleSet,
    kernel: KernelSpec,
    nbrs: NeighborList,
    corrections,
    i: int,
) -> np.ndarray:
    """First-order consistent gradient at particle i.

    ``corrections`` is either the tuple from ``correction_matrices`` or a
    single ``CorrectionMatrix`` for particle i.
    """
    raw = sph_gradient(particles, kernel, nbrs, i)
    if isinstance(corrections, CorrectionMatrix):
        return corrections.inverse @ raw
    _L, inv, _cond, singular = corrections
    if singular[i]:
        raise DegenerateStencilError(f"singular correction matrix at particle {i}", particle=i)
    return inv[i] @ raw


def corrected_gradient_all(
    particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList, corrections=None
) -> np.ndarray:
    if corrections is None:
        corrections = correction_matrices(particles, kernel, nbrs)
    _L, inv, _cond, _singular = corrections
    raw = sph_gradient_all(particles, kernel, nbrs)
    return np.einsum("nab,nb->na", inv, raw)


def resolved_value_and_gradient(
    particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList, i: int
):
    """Simultaneous value and gradient from the full resolved moment system.

    Validation-oracle form: solves the 3x3 system built from zeroth and
    first kernel moments, recovering linear fields exactly in both value
    and slope. The production path uses the separate interpolant and
    corrected gradient instead.
    """
    idx, disp, dist = nbrs.neighbors_of(i)
    vol = particles.volumes[idx]
    f = particles.values[idx]
    w = quintic_w(dist / kernel.h, kernel)
    grads = quintic_grad(disp, kernel) if idx.size else np.zeros((0, 2))
    dx = -disp

    w_self = quintic_w(0.0, kernel) * particles.volumes[i]
    A = np.zeros((3, 3))
    A[0, 0] = np.sum(w * vol) + w_self
    A[0, 1:] = (dx * (w * vol)[:, None]).sum(axis=0)
    A[1:, 0] = (grads * vol[:, None]).sum(axis=0)
    A[1:, 1:] = np.einsum("pa,pb,p->ab", grads, dx, vol)
    b = np.zeros(3)
    b[0] = np.sum(f * w * vol) + particles.values[i] * w_self
    b[1:] = (grads * (f * vol)[:, None]).sum(axis=0)
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise DegenerateStencilError(f"resolved moment system singular at particle {i}", particle=i)
    return float(sol[0]), sol[1:]


@dataclass
class GradientStencil:
    """Frozen pairwise gradient weights for repeated operator application.

    gradient_x(i) = sum_j wx[pair] * (f_j - f_i), likewise for y.
    """

    indptr: np.ndarray
    indices: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    n: int

    def __post_init__(self):
        self._pair_i = np.repeat(np.arange(self.n), np.diff(self.indptr))

    def gradients(self, values: np.ndarray) -> np.ndarray:
        diff = values[self.indices] - values[self._pair_i]
        gx = np.bincount(self._pair_i, weights=self.wx * diff, minlength=self.n)
        gy = np.bincount(self._pair_i, weights=self.wy * diff, minlength=self.n)
        return np.stack([gx, gy], axis=1)


def plain_stencil(particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList) -> GradientStencil:
    grads = _pair_kernel_grads(particles, kernel, nbrs)
    vol = particles.volumes[nbrs.indices]
    return GradientStencil(
        indptr=nbrs.indptr,
        indices=nbrs.indices,
        wx=grads[:, 0] * vol,
        wy=grads[:, 1] * vol,
        n=particles.n,
    )


def corrected_stencil(
    particles: ParticleSet, kernel: KernelSpec, nbrs: NeighborList, corrections=None
) -> GradientStencil:
    if corrections is None:
        corrections = correction_matrices(particles, kernel, nbrs)
    _L, inv, _cond, _singular = corrections
    pair_i = nbrs.pair_sources()
    grads = _pair_kernel_grads(particles, kernel, nbrs)
    vol = particles.volumes[nbrs.indices]
    w = np.einsum("pab,pb->pa", inv[pair_i], grads) * vol[:, None]
    return GradientStencil(
        indptr=nbrs.indptr, indices=nbrs.indices, wx=w[:, 0], wy=w[:, 1], n=particles.n
    )
