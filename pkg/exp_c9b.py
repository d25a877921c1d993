"""Criterion-9 grad-model retune: push the crossed fit below 0.05 field L2."""
import json
import sys
import time

import numpy as np

from qsphnet.benchmarks import AdvectionSpec, advection_particles, run_period
from qsphnet.estimator import FittedPredictor, HybridRegressor
from qsphnet.qkernel import QuantumKernelModel, generate_kernel_dataset, model_stencil
from qsphnet.sph import KernelSpec, build_neighbors, lattice_particles, plain_stencil

name = sys.argv[1]
configs = {
    "lr01_400": dict(front_hidden=(32, 32), back_hidden=(16,), lr=0.01, epochs=400, n_qubits=4),
    "lr01_300_small": dict(front_hidden=(16,), back_hidden=(8,), lr=0.01, epochs=300, n_qubits=4),
    "lr01_800": dict(front_hidden=(32, 32), back_hidden=(16,), lr=0.01, epochs=800, n_qubits=4),
}
cfg = configs[name]

train_ps = lattice_particles(0.04, (0, 0.24), (0, 0.24), ghost_layers=3, h_factor=1.8)
train_kernel = KernelSpec(h=train_ps.h)
train_nl = build_neighbors(train_ps)
ds = generate_kernel_dataset(train_ps, train_kernel, train_nl, corrected=False)

t0 = time.perf_counter()
est = HybridRegressor(level="crossed", family="qmlp", head="pauliz",
                      n_layers=1, batch_size=256, random_state=0,
                      **{k: v for k, v in cfg.items() if k != "n_qubits"},
                      n_qubits=cfg["n_qubits"])
est.fit(ds.grad_features, ds.grad_targets)
model = QuantumKernelModel(grad_model=FittedPredictor.from_estimator(est),
                           grad_bounds=ds.grad_bounds)

pred = model.grad_weights(ds.grad_features)
rel = float(np.max(np.abs(pred - ds.grad_targets)) / np.max(np.abs(ds.grad_targets)))

spec = AdvectionSpec(spacing=0.04, dt=1e-4, snapshot_times=(0.15, 0.35, 0.6))
ps = advection_particles(spec)
kernel = KernelSpec(h=ps.h)
nl = build_neighbors(ps)
interior = ps.interior_mask
classical = run_period(spec, plain_stencil(ps, kernel, nl), ps.copy(), t_end=0.6)
run = run_period(spec, model_stencil(model, ps, nl), ps.copy(), t_end=0.6)
l2 = {
    str(ts): float(np.linalg.norm((run.snapshots[ts] - classical.snapshots[ts])[interior])
                   / np.linalg.norm(classical.snapshots[ts][interior]))
    for ts in (0.15, 0.35, 0.6)
}
out = {"name": name, "final": est.final_train_loss(), "weight_rel_err": rel,
       "l2": l2, "secs": round(time.perf_counter() - t0, 1)}
print(json.dumps(out), flush=True)
json.dump(out, open(f"exp_c9b_{name}.json", "w"))
