"""Criterion-5 validation: hierarchy ordering on kernel-weight learning."""
import json
import sys
import time

import numpy as np

from qsphnet.benchmarks import default_vortex_field, total_field
from qsphnet.estimator import FittedPredictor, HybridRegressor
from qsphnet.qkernel import QuantumKernelModel, generate_kernel_dataset, quantum_value_all
from qsphnet.sph import KernelSpec, build_neighbors, lattice_particles, sph_value_all

level = sys.argv[1]
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
head = sys.argv[3] if len(sys.argv) > 3 else "pauliz"
epochs = int(sys.argv[4]) if len(sys.argv) > 4 else 300

spec = default_vortex_field(seed=0)
spacing = 1.0 / 31
ps = lattice_particles(spacing, (0, 1), (0, 1), ghost_layers=3, h_factor=1.2,
                       values=lambda x, y: total_field(spec, x, y))
kernel = KernelSpec(h=ps.h)
nl = build_neighbors(ps)
ds = generate_kernel_dataset(ps, kernel, nl)
print("value samples:", ds.value_features.shape[0], flush=True)

t0 = time.perf_counter()
est = HybridRegressor(level=level, family="qmlp", head=head, n_qubits=4, n_layers=1,
                      front_hidden=(16,), back_hidden=(8,), lr=0.001, batch_size=256,
                      epochs=epochs, random_state=seed)
est.fit(ds.value_features, ds.value_targets)
model = QuantumKernelModel(value_model=FittedPredictor.from_estimator(est),
                           value_bounds=ds.value_bounds)
recon = quantum_value_all(model, ps, nl)
classical = sph_value_all(ps, kernel, nl)
mask = ps.interior_mask
l2 = float(np.linalg.norm((recon - classical)[mask]) / np.linalg.norm(classical[mask]))
tl = [r.train_loss for r in est.trace_]
out = {"level": level, "seed": seed, "head": head,
       "secs": round(time.perf_counter() - t0, 1),
       "losses": [round(tl[i], 6) for i in (0, 49, 149, 299) if i < len(tl)],
       "final": tl[-1], "recon_l2_vs_classical": l2, "n_params": est.n_params_}
print(json.dumps(out), flush=True)
json.dump(out, open(f"exp_c5k_{level}_{head}_{seed}.json", "w"))
