"""Queue mirroring the acceptance configs exactly.

Order: criterion 9 (grad models + advection), criterion 7 (kernel space),
criterion 5/6 (hierarchy + heads at n_qubits=2).
"""
import json
import time

import numpy as np

from qsphnet.benchmarks import AdvectionSpec, advection_particles, default_vortex_field, run_period, total_field
from qsphnet.estimator import FittedPredictor, HybridRegressor
from qsphnet.qkernel import (
    QuantumKernelModel,
    extract_kernel_space,
    generate_kernel_dataset,
    model_stencil,
)
from qsphnet.sph import KernelSpec, build_neighbors, lattice_particles, plain_stencil, quintic_w

PIN = dict(lr=0.001, batch_size=256, epochs=300)
LOG = open("exp_queue2.out", "a")


def emit(tag, obj):
    line = json.dumps({"tag": tag, **obj})
    print(line, flush=True)
    LOG.write(line + "\n")
    LOG.flush()


# --- criterion 9 -----------------------------------------------------------
t0 = time.perf_counter()
train_ps = lattice_particles(0.04, (0, 0.24), (0, 0.24), ghost_layers=3, h_factor=1.8)
train_kernel = KernelSpec(h=train_ps.h)
train_nl = build_neighbors(train_ps)
train_ds = generate_kernel_dataset(train_ps, train_kernel, train_nl, corrected=False)
emit("c9_dataset", {"grad_samples": int(train_ds.grad_features.shape[0])})

grad_models = {}
for level in ("crossed", "single"):
    t1 = time.perf_counter()
    est = HybridRegressor(level=level, family="qmlp", head="pauliz", n_qubits=4,
                          n_layers=1, front_hidden=(16,), back_hidden=(8,),
                          random_state=0, **PIN)
    est.fit(train_ds.grad_features, train_ds.grad_targets)
    grad_models[level] = QuantumKernelModel(
        grad_model=FittedPredictor.from_estimator(est),
        grad_bounds=train_ds.grad_bounds,
    )
    emit("c9_train", {"level": level, "final": est.final_train_loss(),
                      "y_scale": est.y_scale_, "secs": round(time.perf_counter() - t1, 1)})

spec = AdvectionSpec(spacing=0.04, dt=1e-4, snapshot_times=(0.15, 0.35, 0.6))
ps = advection_particles(spec)
kernel = KernelSpec(h=ps.h)
nl = build_neighbors(ps)
interior = ps.interior_mask
classical = run_period(spec, plain_stencil(ps, kernel, nl), ps.copy(), t_end=0.6)


def l2(a, b):
    return float(np.linalg.norm((a - b)[interior]) / np.linalg.norm(b[interior]))


for level in ("crossed", "single"):
    run = run_period(spec, model_stencil(grad_models[level], ps, nl), ps.copy(), t_end=0.6)
    emit("c9_advect", {
        "level": level,
        "l2": {str(ts): l2(run.snapshots[ts], classical.snapshots[ts]) for ts in (0.15, 0.35, 0.6)},
        "max_abs": run.max_abs,
        "clamps": grad_models[level].clamp_count,
    })
emit("c9_done", {"secs": round(time.perf_counter() - t0, 1)})

# --- criterion 7 -----------------------------------------------------------
t0 = time.perf_counter()
ps7 = lattice_particles(0.02, (0, 0.2), (0, 0.2), ghost_layers=3, h_factor=2.0,
                        jitter=0.2, seed=0)
kernel7 = KernelSpec(h=ps7.h)
nl7 = build_neighbors(ps7)
ds7 = generate_kernel_dataset(ps7, kernel7, nl7)
grid = np.linspace(0.0, 2 * kernel7.h, 41)
dV = 0.02**2
threshold = 0.05 * float(quintic_w(0.0, kernel7)) * dV
for epochs in (300, 1000):
    t1 = time.perf_counter()
    est = HybridRegressor(level="crossed", family="qmlp", head="pauliz", n_qubits=4,
                          n_layers=1, front_hidden=(32, 32), back_hidden=(16,),
                          lr=0.001, batch_size=256, epochs=epochs, random_state=0)
    est.fit(ds7.value_features, ds7.value_targets)
    model = QuantumKernelModel(value_model=FittedPredictor.from_estimator(est),
                               value_bounds=ds7.value_bounds)
    tables = extract_kernel_space(model, kernel7, grid, dV)
    resid = float(np.max(np.abs(tables["value"][:, 3])))
    emit("c7", {"epochs": epochs, "residual": resid, "threshold": threshold,
                "ok": resid < threshold, "final_loss": est.final_train_loss(),
                "secs": round(time.perf_counter() - t1, 1)})
    if resid < threshold:
        break
emit("c7_done", {"secs": round(time.perf_counter() - t0, 1)})

# --- criteria 5 and 6 ------------------------------------------------------
spec0 = default_vortex_field(seed=0)
ps5 = lattice_particles(1.0 / 31, (0, 1), (0, 1), ghost_layers=3, h_factor=1.2,
                        jitter=0.2, seed=0,
                        values=lambda x, y: total_field(spec0, x, y))
kernel5 = KernelSpec(h=ps5.h)
nl5 = build_neighbors(ps5)
ds5 = generate_kernel_dataset(ps5, kernel5, nl5)
emit("c5_dataset", {"value_samples": int(ds5.value_features.shape[0])})

for level, head, seed in (
    ("single", "pauliz", 0),
    ("forward", "pauliz", 0),
    ("crossed", "pauliz", 0),
    ("crossed", "prob", 0),
    ("crossed", "pauliz", 1),
    ("crossed", "prob", 1),
    ("crossed", "pauliz", 2),
    ("crossed", "prob", 2),
):
    t1 = time.perf_counter()
    est = HybridRegressor(level=level, family="qmlp", head=head, n_qubits=2,
                          n_layers=1, front_hidden=(16,), back_hidden=(8,),
                          random_state=seed, **PIN)
    est.fit(ds5.value_features, ds5.value_targets)
    emit("c56", {"level": level, "head": head, "seed": seed,
                 "final": est.final_train_loss(),
                 "secs": round(time.perf_counter() - t1, 1)})
emit("all_done", {})
