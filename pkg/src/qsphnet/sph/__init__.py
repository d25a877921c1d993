from .kernel import KernelSpec, quintic_dwdq, quintic_grad, quintic_w
from .neighbors import NeighborList, build_neighbors
from .operators import (
    CorrectionMatrix,
    GradientStencil,
    corrected_gradient,
    corrected_gradient_all,
    corrected_stencil,
    correction_matrices,
    correction_matrix,
    plain_stencil,
    resolved_value_and_gradient,
    sph_gradient,
    sph_gradient_all,
    sph_value,
    sph_value_all,
)
from .particles import ParticleSet, lattice_particles, load_particles, save_particles

__all__ = [
    "KernelSpec",
    "quintic_w",
    "quintic_dwdq",
    "quintic_grad",
    "ParticleSet",
    "lattice_particles",
    "save_particles",
    "load_particles",
    "NeighborList",
    "build_neighbors",
    "CorrectionMatrix",
    "GradientStencil",
    "sph_value",
    "sph_value_all",
    "sph_gradient",
    "sph_gradient_all",
    "correction_matrix",
    "correction_matrices",
    "corrected_gradient",
    "corrected_gradient_all",
    "corrected_stencil",
    "plain_stencil",
    "resolved_value_and_gradient",
]
