"""Architecture sweep for the vortex-field fit at the pinned budget."""
import json
import sys
import time

import numpy as np

from qsphnet.benchmarks import default_vortex_field, field_grid
from qsphnet.estimator import HybridRegressor

X, y = field_grid(default_vortex_field(seed=0), 32)

configs = {
    "A_base": dict(front_hidden=(16,), back_hidden=(8,), n_qubits=4, n_layers=2),
    "B_wide": dict(front_hidden=(32, 32), back_hidden=(16,), n_qubits=4, n_layers=2),
    "C_deep3": dict(front_hidden=(32, 32, 32), back_hidden=(16,), n_qubits=4, n_layers=2),
    "D_deep4": dict(front_hidden=(48, 48, 48, 24), back_hidden=(16,), n_qubits=4, n_layers=1),
    "E_deep5": dict(front_hidden=(40, 40, 40, 40, 40), back_hidden=(16,), n_qubits=4, n_layers=1),
}
name = sys.argv[1]
cfg = configs[name]
t0 = time.perf_counter()
est = HybridRegressor(level="crossed", family="qmlp", head="pauliz",
                      lr=0.001, batch_size=256, epochs=300, random_state=0, **cfg)
est.fit(X, y)
tl = [r.train_loss for r in est.trace_]
out = {
    "name": name,
    "secs": round(time.perf_counter() - t0, 1),
    "losses": [round(tl[i], 5) for i in (0, 49, 99, 199, 299)],
    "final": tl[-1],
    "n_params": est.n_params_,
}
print(json.dumps(out))
with open(f"exp_c5_{name}.json", "w") as fh:
    json.dump(out, fh)
