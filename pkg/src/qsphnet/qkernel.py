"""Learned kernel weights substituted into the particle summation operators.

A value model maps pair geometry (r_ij, dV_j) to the scalar weight taking
the role of w_ij dV_j; a gradient model maps (r_ij^x, r_ij^y, dV_j), or a
pre-mapped variant of it, to the 2-D weight taking the role of
grad_w_ij dV_j (optionally correction-multiplied). The substitution sums

    f_i       ~= sum_j  value(r_ij, dV_j) f_j          (self pair included)
    grad f_i  ~= sum_{j != i} grad(r_ij, dV_j) (f_j - f_i)
    dv_i/dt   ~= sum_{j != i} grad(eta(r_ij), dV_j) eta(v_j - v_i) + f_ext

mirror the classical operators exactly when the models reproduce the
classical weights, which makes the plumbing testable independently of any
learning. Model inputs outside the recorded training bounds are clamped and
counted, never extrapolated silently.

Models are anything with ``predict(features) -> weights`` (for instance a
fitted ``HybridRegressor``); ``ClassicalKernelWeights`` wraps the exact
closed-form weights for identity checks and baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, EmptyDatasetError
from .sph.kernel import KernelSpec, quintic_grad, quintic_w
from .sph.neighbors import NeighborList
from .sph.operators import GradientStencil, correction_matrices
from .sph.particles import ParticleSet

PRE_MAPS = ("identity", "norm_distance", "inner_distance")


def premap_features(disp: np.ndarray, volumes: np.ndarray, pre_map: str) -> np.ndarray:
    """Geometry features for the gradient/momentum models.

    identity -> (r_x, r_y, dV); norm_distance -> (|r|, dV);
    inner_distance -> (r . r, dV).
    """
    if pre_map == "identity":
        return np.column_stack([disp, volumes])
    r2 = disp[:, 0] ** 2 + disp[:, 1] ** 2
    if pre_map == "norm_distance":
        return np.column_stack([np.sqrt(r2), volumes])
    if pre_map == "inner_distance":
        return np.column_stack([r2, volumes])
    raise ConfigurationError(f"unknown pre-map {pre_map!r}")


def premap_velocity(v_diff: np.ndarray, pre_map: str):
    """Velocity-difference factor entering the momentum sum."""
    if pre_map == "identity":
        return v_diff
    n2 = v_diff[:, 0] ** 2 + v_diff[:, 1] ** 2
    if pre_map == "norm_distance":
        return np.sqrt(n2)[:, None]
    if pre_map == "inner_distance":
        return n2[:, None]
    raise ConfigurationError(f"unknown pre-map {pre_map!r}")


class ClassicalKernelWeights:
    """Exact closed-form kernel weights behind the model interface.

    ``role`` selects the value weight w(q) dV or the gradient weight
    grad_w dV (identity pre-map features).
    """

    def __init__(self, kernel: KernelSpec, role: str = "value"):
        if role not in ("value", "grad"):
            raise ConfigurationError("role must be 'value' or 'grad'")
        self.kernel = kernel
        self.role = role

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.role == "value":
            r, vol = X[:, 0], X[:, 1]
            return quintic_w(r / self.kernel.h, self.kernel) * vol
        disp, vol = X[:, :2], X[:, 2]
        out = np.zeros((X.shape[0], 2))
        nz = np.linalg.norm(disp, axis=1) > 0
        if np.any(nz):
            out[nz] = quintic_grad(disp[nz], self.kernel) * vol[nz, None]
        return out


@dataclass
class KernelDataset:
    """Pair-geometry samples with classical weight targets.

    ``provenance`` records which operator produced the gradient targets
    (plain kernel gradient or the corrected one).
    """

    value_features: np.ndarray  # (P, 2) = (r, dV)
    value_targets: np.ndarray  # (P,)
    grad_features: np.ndarray  # (P, k) per pre_map
    grad_targets: np.ndarray  # (P, 2)
    provenance: str
    pre_map: str = "identity"
    h: float = 0.0
    split_seed: int = 0

    @property
    def value_bounds(self) -> np.ndarray:
        return np.stack(
            [self.value_features.min(axis=0), self.value_features.max(axis=0)], axis=1
        )

    @property
    def grad_bounds(self) -> np.ndarray:
        return np.stack(
            [self.grad_features.min(axis=0), self.grad_features.max(axis=0)], axis=1
        )


def generate_kernel_dataset(
    particles: ParticleSet,
    kernel: KernelSpec,
    nbrs: NeighborList,
    corrected: bool = False,
    pre_map: str = "identity",
    dedupe: bool = True,
) -> KernelDataset:
    """One sample per neighbor pair plus a zero-distance self sample per
    particle for the value role; gradient targets are the plain or the
    correction-multiplied kernel gradient weights.

    ``dedupe`` drops the mirrored value sample of each (i, j)/(j, i) pair
    when both particles share a volume (the two rows are then identical);
    gradient rows carry signed displacements, so mirrored pairs stay.
    """
    if nbrs.n_pairs == 0:
        raise EmptyDatasetError("no neighbor pairs; cannot build a kernel dataset")
    pair_i = nbrs.pair_sources()
    vol_j = particles.volumes[nbrs.indices]

    keep = np.ones(nbrs.n_pairs, dtype=bool)
    if dedupe:
        vol_i = particles.volumes[pair_i]
        keep = (pair_i < nbrs.indices) | (vol_i != vol_j)
    value_feats = np.column_stack([nbrs.dist[keep], vol_j[keep]])
    value_targets = quintic_w(nbrs.dist[keep] / kernel.h, kernel) * vol_j[keep]
    self_feats = np.column_stack([np.zeros(particles.n), particles.volumes])
    self_targets = quintic_w(0.0, kernel) * particles.volumes
    value_feats = np.vstack([value_feats, self_feats])
    value_targets = np.concatenate([value_targets, self_targets])

    grads = quintic_grad(nbrs.disp, kernel)
    if corrected:
        _L, inv, _cond, _singular = correction_matrices(particles, kernel, nbrs)
        grads = np.einsum("pab,pb->pa", inv[pair_i], grads)
    grad_targets = grads * vol_j[:, None]
    grad_feats = premap_features(nbrs.disp, vol_j, pre_map)

    return KernelDataset(
        value_features=value_feats,
        value_targets=value_targets,
        grad_features=grad_feats,
        grad_targets=grad_targets,
        provenance="corrected" if corrected else "plain",
        pre_map=pre_map,
        h=kernel.h,
    )


@dataclass
class QuantumKernelModel:
    """Trained (or wrapped) weight models plus their input bounds."""

    value_model: object = None
    grad_model: object = None
    value_bounds: np.ndarray | None = None
    grad_bounds: np.ndarray | None = None
    pre_map: str = "identity"
    clamp_count: int = 0

    def __post_init__(self):
        if self.pre_map not in PRE_MAPS:
            raise ConfigurationError(f"unknown pre-map {self.pre_map!r}")

    def _clamped(self, X: np.ndarray, bounds) -> np.ndarray:
        if bounds is None:
            return X
        lo, hi = bounds[:, 0], bounds[:, 1]
        clipped = np.clip(X, lo, hi)
        self.clamp_count += int(np.sum(np.any(clipped != X, axis=1)))
        return clipped

    def value_weights(self, features: np.ndarray) -> np.ndarray:
        if self.value_model is None:
            raise ConfigurationError("no value model attached")
        out = self.value_model.predict(self._clamped(features, self.value_bounds))
        return np.asarray(out, dtype=float).reshape(-1)

    def grad_weights(self, features: np.ndarray) -> np.ndarray:
        if self.grad_model is None:
            raise ConfigurationError("no gradient model attached")
        out = np.asarray(self.grad_model.predict(self._clamped(features, self.grad_bounds)))
        return out.reshape(features.shape[0], 2)


def quantum_value_all(
    model: QuantumKernelModel, particles: ParticleSet, nbrs: NeighborList
) -> np.ndarray:
    """Learned-weight interpolant at every particle (self pair included)."""
    pair_i = nbrs.pair_sources()
    vol_j = particles.volumes[nbrs.indices]
    w = model.value_weights(np.column_stack([nbrs.dist, vol_j]))
    out = np.bincount(pair_i, weights=w * particles.values[nbrs.indices], minlength=particles.n)
    w_self = model.value_weights(np.column_stack([np.zeros(particles.n), particles.volumes]))
    return out + w_self * particles.values


def quantum_sph_value(
    model: QuantumKernelModel, particles: ParticleSet, nbrs: NeighborList, i: int
) -> float:
    idx, _disp, dist = nbrs.neighbors_of(i)
    feats = np.column_stack([dist, particles.volumes[idx]])
    total = float(np.sum(model.value_weights(feats) * particles.values[idx])) if idx.size else 0.0
    w_self = model.value_weights(np.array([[0.0, particles.volumes[i]]]))[0]
    return total + float(w_self * particles.values[i])


def quantum_gradient_all(
    model: QuantumKernelModel, particles: ParticleSet, nbrs: NeighborList
) -> np.ndarray:
    pair_i = nbrs.pair_sources()
    vol_j = particles.volumes[nbrs.indices]
    W = model.grad_weights(premap_features(nbrs.disp, vol_j, model.pre_map))
    diff = particles.values[nbrs.indices] - particles.values[pair_i]
    gx = np.bincount(pair_i, weights=W[:, 0] * diff, minlength=particles.n)
    gy = np.bincount(pair_i, weights=W[:, 1] * diff, minlength=particles.n)
    return np.stack([gx, gy], axis=1)


def quantum_sph_gradient(
    model: QuantumKernelModel, particles: ParticleSet, nbrs: NeighborList, i: int
) -> np.ndarray:
    idx, disp, _dist = nbrs.neighbors_of(i)
    if idx.size == 0:
        return np.zeros(2)
    W = model.grad_weights(premap_features(disp, particles.volumes[idx], model.pre_map))
    diff = particles.values[idx] - particles.values[i]
    return (W * diff[:, None]).sum(axis=0)


def quantum_momentum_rhs(
    model: QuantumKernelModel,
    particles: ParticleSet,
    nbrs: NeighborList,
    velocities: np.ndarray,
    f_ext=None,
    i: int = 0,
) -> np.ndarray:
    """Learned-weight acceleration from pre-mapped velocity differences plus
    an external-force callback (zero by default)."""
    idx, disp, _dist = nbrs.neighbors_of(i)
    acc = np.zeros(2)
    if idx.size:
        W = model.grad_weights(premap_features(disp, particles.volumes[idx], model.pre_map))
        v_diff = velocities[idx] - velocities[i]
        acc = (W * premap_velocity(v_diff, model.pre_map)).sum(axis=0)
    if f_ext is not None:
        acc = acc + np.asarray(f_ext(i), dtype=float)
    return acc


def model_stencil(
    model: QuantumKernelModel, particles: ParticleSet, nbrs: NeighborList
) -> GradientStencil:
    """Freeze the learned gradient weights of a static particle set."""
    vol_j = particles.volumes[nbrs.indices]
    W = model.grad_weights(premap_features(nbrs.disp, vol_j, model.pre_map))
    return GradientStencil(
        indptr=nbrs.indptr, indices=nbrs.indices, wx=W[:, 0], wy=W[:, 1], n=particles.n
    )


def kernel_model_to_dict(model: QuantumKernelModel, meta: dict | None = None) -> dict:
    """Serializable form; predictors must expose ``to_dict`` (trained models)."""
    out = {"pre_map": model.pre_map}
    if model.value_model is not None:
        out["value_model"] = model.value_model.to_dict()
    if model.grad_model is not None:
        out["grad_model"] = model.grad_model.to_dict()
    if model.value_bounds is not None:
        out["value_bounds"] = np.asarray(model.value_bounds).tolist()
    if model.grad_bounds is not None:
        out["grad_bounds"] = np.asarray(model.grad_bounds).tolist()
    if meta:
        out["meta"] = meta
    return out


def kernel_model_from_dict(data: dict) -> QuantumKernelModel:
    from .estimator import FittedPredictor

    return QuantumKernelModel(
        value_model=FittedPredictor.from_dict(data["value_model"])
        if "value_model" in data
        else None,
        grad_model=FittedPredictor.from_dict(data["grad_model"])
        if "grad_model" in data
        else None,
        value_bounds=np.asarray(data["value_bounds"], dtype=float)
        if "value_bounds" in data
        else None,
        grad_bounds=np.asarray(data["grad_bounds"], dtype=float)
        if "grad_bounds" in data
        else None,
        pre_map=data.get("pre_map", "identity"),
    )


def extract_kernel_space(
    model: QuantumKernelModel,
    kernel: KernelSpec,
    distance_grid: np.ndarray,
    dV: float,
) -> dict:
    """Learned vs classical weights over a distance grid.

    Returns tables of shape (len(grid), 4) with columns
    (r, learned, classical, residual): one ``value`` table when a value
    model is attached, and ``grad_x`` / ``grad_y`` directional tables (the
    grid laid along each axis) when a gradient model is attached.
    """
    r = np.asarray(distance_grid, dtype=float).reshape(-1)
    tables = {}
    if model.value_model is not None:
        feats = np.column_stack([r, np.full(r.size, dV)])
        learned = model.value_weights(feats)
        classical = quintic_w(r / kernel.h, kernel) * dV
        tables["value"] = np.column_stack([r, learned, classical, learned - classical])
    if model.grad_model is not None:
        for axis, name in ((0, "grad_x"), (1, "grad_y")):
            disp = np.zeros((r.size, 2))
            disp[:, axis] = r
            learned = model.grad_weights(
                premap_features(disp, np.full(r.size, dV), model.pre_map)
            )[:, axis]
            classical = np.zeros(r.size)
            nz = r > 0
            if np.any(nz):
                classical[nz] = quintic_grad(disp[nz], kernel)[:, axis] * dV
            tables[name] = np.column_stack([r, learned, classical, learned - classical])
    return tables
