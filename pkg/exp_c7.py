"""Kernel value-model fidelity probe at the criterion budget."""
import json
import sys
import time

import numpy as np

from qsphnet.estimator import HybridRegressor, FittedPredictor
from qsphnet.qkernel import QuantumKernelModel, extract_kernel_space, generate_kernel_dataset
from qsphnet.sph import KernelSpec, build_neighbors, lattice_particles

name = sys.argv[1]
configs = {
    "reg20": dict(distribution="regular", h_factor=2.0, front=(16,), back=(8,), epochs=300),
    "irr20": dict(distribution="irregular", h_factor=2.0, front=(16,), back=(8,), epochs=300),
    "irr20_deep": dict(distribution="irregular", h_factor=2.0, front=(32, 32), back=(16,), epochs=300),
    "irr12_deep": dict(distribution="irregular", h_factor=1.2, front=(32, 32), back=(16,), epochs=300),
}
cfg = configs[name]
jitter = 0.2 if cfg["distribution"] == "irregular" else 0.0
ps = lattice_particles(0.02, (0, 0.2), (0, 0.2), ghost_layers=3,
                       h_factor=cfg["h_factor"], jitter=jitter, seed=0)
kernel = KernelSpec(h=ps.h)
nl = build_neighbors(ps)
ds = generate_kernel_dataset(ps, kernel, nl)
print("value samples:", ds.value_features.shape[0])

t0 = time.perf_counter()
est = HybridRegressor(level="crossed", family="qmlp", head="pauliz",
                      n_qubits=4, n_layers=2, front_hidden=cfg["front"],
                      back_hidden=cfg["back"], lr=0.001, batch_size=256,
                      epochs=cfg["epochs"], random_state=0)
est.fit(ds.value_features, ds.value_targets)
model = QuantumKernelModel(value_model=FittedPredictor.from_estimator(est),
                           value_bounds=ds.value_bounds)
grid = np.linspace(0, 2 * kernel.h, 41)
tables = extract_kernel_space(model, kernel, grid, dV=0.02**2)
resid = float(np.max(np.abs(tables["value"][:, 3])))
peak = float(tables["value"][0, 2])
out = {
    "name": name,
    "secs": round(time.perf_counter() - t0, 1),
    "final_loss": est.final_train_loss(),
    "max_residual": resid,
    "threshold": 0.05 * peak,
    "ok": resid < 0.05 * peak,
    "n_samples": int(ds.value_features.shape[0]),
}
print(json.dumps(out))
with open(f"exp_c7_{name}.json", "w") as fh:
    json.dump(out, fh)
