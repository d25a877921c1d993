"""Second sweep: wider fronts, relu hidden units, longer diagnostics."""
import json
import sys
import time

import numpy as np

from qsphnet.benchmarks import default_vortex_field, field_grid
from qsphnet.estimator import HybridRegressor

X, y = field_grid(default_vortex_field(seed=0), 32)
print("var(y):", float(np.var(y)))

configs = {
    "F_wide3_tanh": dict(front_hidden=(64, 64, 64), back_hidden=(16,), n_qubits=4,
                         n_layers=1, hidden_activation="tanh", epochs=300),
    "G_wide3_relu": dict(front_hidden=(64, 64, 64), back_hidden=(16,), n_qubits=4,
                         n_layers=1, hidden_activation="relu", epochs=300),
    "H_wide2_relu": dict(front_hidden=(96, 96), back_hidden=(16,), n_qubits=4,
                         n_layers=1, hidden_activation="relu", epochs=300),
    "I_deep4_relu": dict(front_hidden=(48, 48, 48, 24), back_hidden=(16,), n_qubits=2,
                         n_layers=1, hidden_activation="relu", epochs=300),
    "J_deep4_tanh_1000": dict(front_hidden=(48, 48, 48, 24), back_hidden=(16,), n_qubits=4,
                              n_layers=1, hidden_activation="tanh", epochs=1000),
}
name = sys.argv[1]
cfg = configs[name]
t0 = time.perf_counter()
est = HybridRegressor(level="crossed", family="qmlp", head="pauliz",
                      lr=0.001, batch_size=256, random_state=0, **cfg)
est.fit(X, y)
tl = [r.train_loss for r in est.trace_]
marks = [0, 49, 99, 199, 299] + ([499, 699, 999] if len(tl) > 300 else [])
out = {
    "name": name,
    "secs": round(time.perf_counter() - t0, 1),
    "losses": [round(tl[i], 5) for i in marks if i < len(tl)],
    "final": tl[-1],
    "n_params": est.n_params_,
}
print(json.dumps(out))
with open(f"exp_c5b_{name}.json", "w") as fh:
    json.dump(out, fh)
