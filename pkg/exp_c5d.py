"""Fourth sweep: widen the quantum channel (qubit count)."""
import json, sys, time
import numpy as np
from qsphnet.benchmarks import default_vortex_field, field_grid
from qsphnet.estimator import HybridRegressor

X, y = field_grid(default_vortex_field(seed=0), 32)
configs = {
    "N_n6": dict(n_qubits=6, front_hidden=(128, 128, 128), back_hidden=(32,)),
    "O_n8": dict(n_qubits=8, front_hidden=(128, 128, 128), back_hidden=(32,)),
    "P_n8_wide": dict(n_qubits=8, front_hidden=(256, 256, 128), back_hidden=(32,)),
    "Q_n10": dict(n_qubits=10, front_hidden=(128, 128, 128), back_hidden=(32,)),
}
name = sys.argv[1]
cfg = configs[name]
t0 = time.perf_counter()
est = HybridRegressor(level="crossed", family="qmlp", head="pauliz",
                      n_layers=1, hidden_activation="relu",
                      lr=0.001, batch_size=256, epochs=300, random_state=0, **cfg)
est.fit(X, y)
tl = [r.train_loss for r in est.trace_]
out = {"name": name, "secs": round(time.perf_counter()-t0, 1),
       "losses": [round(tl[i], 5) for i in (0, 49, 99, 199, 299)],
       "final": tl[-1], "n_params": est.n_params_}
print(json.dumps(out))
json.dump(out, open(f"exp_c5d_{name}.json", "w"))
