"""Command-line entry point: field fitting, kernel training, advection, and
architecture comparison.

Every command writes a ``run.json`` whose ``config`` section reproduces the
run bit-exactly when passed back through ``--config``; explicit flags win
over config-file entries. CSV floats are written with ``repr`` so identical
runs produce identical bytes (the per-epoch ``wall_ms`` column is the one
timing-dependent quantity). Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .benchmarks import (
    AdvectionSpec,
    advection_particles,
    default_vortex_field,
    error_metrics,
    field_grid,
    run_period,
    total_field,
)
from .estimator import FittedPredictor, HybridRegressor
from .exceptions import (
    CapacityError,
    ConfigurationError,
    DegenerateStencilError,
    EncodingError,
    EmptyDatasetError,
    IntegrationError,
    ShapeError,
    TrainingDivergenceError,
    UndefinedLossError,
)
from .qkernel import (
    QuantumKernelModel,
    extract_kernel_space,
    generate_kernel_dataset,
    kernel_model_from_dict,
    kernel_model_to_dict,
    model_stencil,
    quantum_value_all,
)
from .sph import (
    KernelSpec,
    build_neighbors,
    corrected_stencil,
    lattice_particles,
    plain_stencil,
    sph_value_all,
)

CONFIG_ERRORS = (
    ConfigurationError,
    CapacityError,
    ShapeError,
    EncodingError,
    FileNotFoundError,
    json.JSONDecodeError,
    KeyError,
)
NUMERICAL_ERRORS = (
    TrainingDivergenceError,
    IntegrationError,
    UndefinedLossError,
    DegenerateStencilError,
    EmptyDatasetError,
)

FIT_FIELD_DEFAULTS = {
    "model": "crossed",
    "family": "qmlp",
    "head": "pauliz",
    "n_qubits": 4,
    "n_layers": 2,
    "front_hidden": [16],
    "back_hidden": [8],
    "activation": "tanh",
    "lr": 0.001,
    "bs": 256,
    "epochs": 300,
    "noise_sigma": 0.0,
    "seed": 0,
    "grid": 32,
    "field_seed": 0,
    "field_time": 0.0,
    "h_factor": 1.2,
    "distribution": "regular",
    "kernel": "plain",
    "jitter_seed": 0,
}

TRAIN_KERNEL_DEFAULTS = {
    "model": "crossed",
    "family": "qmlp",
    "head": "pauliz",
    "n_qubits": 4,
    "n_layers": 2,
    "front_hidden": [16],
    "back_hidden": [8],
    "activation": "tanh",
    "lr": 0.001,
    "bs": 256,
    "epochs": 300,
    "noise_sigma": 0.0,
    "seed": 0,
    "distribution": "regular",
    "kernel": "plain",
    "spacing": 0.02,
    "h_factor": 2.0,
    "domain_size": 0.2,
    "jitter_seed": 0,
    "pre_map": "identity",
    "export_kernel_space": False,
    "kernel_grid": 41,
}

ADVECT_DEFAULTS = {
    "operator": "classical",
    "model_file": None,
    "kernel": "corrected",
    "spacing": 0.02,
    "dt": 1e-4,
    "t_end": 1.0,
    "h_factor": 1.8,
    "jitter": 0.0,
    "jitter_seed": 0,
    "seed": 0,
    "snapshot_times": [0.0, 0.15, 0.35, 0.6, 1.0],
    "reference": None,
}

COMPARE_DEFAULTS = {
    "levels": ["crossed"],
    "families": ["qnn", "qmlp", "qcnn"],
    "heads": ["pauliz", "prob"],
    "lrs": [0.001],
    "n_qubits": 4,
    "n_layers": 2,
    "front_hidden": [16],
    "back_hidden": [8],
    "activation": "tanh",
    "bs": 256,
    "epochs": 300,
    "noise_sigma": 0.0,
    "seed": 0,
    "grid": 32,
    "field_seed": 0,
    "field_time": 0.0,
}


# ---------------------------------------------------------------------------
# Artifact helpers
# ---------------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_trace_csv(path, trace) -> None:
    write_csv(
        path,
        ["epoch", "train_loss", "test_loss", "wall_ms"],
        [(row.epoch, row.train_loss, row.test_loss, row.wall_ms) for row in trace],
    )


def _regressor(config, seed=None) -> HybridRegressor:
    return HybridRegressor(
        level=config["model"],
        family=config["family"],
        head=config["head"],
        n_qubits=config["n_qubits"],
        n_layers=config["n_layers"],
        front_hidden=tuple(config["front_hidden"]),
        back_hidden=tuple(config["back_hidden"]),
        hidden_activation=config.get("activation", "tanh"),
        lr=config["lr"],
        batch_size=config["bs"],
        epochs=config["epochs"],
        noise_sigma=config["noise_sigma"],
        random_state=config["seed"] if seed is None else seed,
    )


def _maybe_plot_heatmap(path, x, y, values, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = int(round(np.sqrt(x.size)))
    fig, ax = plt.subplots(figsize=(5, 4))
    shaped = values.reshape(n, n) if n * n == x.size else None
    if shaped is not None:
        im = ax.imshow(shaped.T, origin="lower", extent=(x.min(), x.max(), y.min(), y.max()))
    else:
        im = ax.scatter(x, y, c=values, s=4)
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fit_field(config: dict, out: Path, plot: bool = False) -> dict:
    """Static kernel substitution on the vortex benchmark field.

    Samples the field onto a particle lattice, learns the interpolation
    weight model from the pair geometry under the selected hierarchy, and
    reconstructs the field through the learned-weight summation; the error
    map compares the reconstruction against the classical kernel sum on the
    same particles.
    """
    t0 = time.perf_counter()
    spec = default_vortex_field(seed=config["field_seed"], t=config["field_time"])
    spacing = 1.0 / (config["grid"] - 1)
    particles = lattice_particles(
        spacing,
        (0.0, 1.0),
        (0.0, 1.0),
        ghost_layers=3,
        h_factor=config["h_factor"],
        jitter=0.2 if config["distribution"] == "irregular" else 0.0,
        seed=config["jitter_seed"],
        values=lambda x, y: total_field(spec, x, y),
    )
    kernel = KernelSpec(h=particles.h)
    nbrs = build_neighbors(particles)
    dataset = generate_kernel_dataset(
        particles, kernel, nbrs, corrected=config["kernel"] == "corrected"
    )

    est = _regressor(config).fit(dataset.value_features, dataset.value_targets)
    model = QuantumKernelModel(
        value_model=FittedPredictor.from_estimator(est),
        value_bounds=dataset.value_bounds,
    )
    reconstruction = quantum_value_all(model, particles, nbrs)
    classical = sph_value_all(particles, kernel, nbrs)
    interior = particles.interior_mask
    metrics = error_metrics(reconstruction[interior], classical[interior])
    x, y = particles.positions[interior, 0], particles.positions[interior, 1]

    write_trace_csv(out / "loss.csv", est.trace_)
    write_csv(
        out / "predictions.csv",
        ["x", "y", "f_pred", "f_ref", "err"],
        zip(x, y, reconstruction[interior], classical[interior],
            (reconstruction - classical)[interior]),
    )
    write_csv(
        out / "error_map.csv",
        ["x", "y", "abs_err"],
        zip(x, y, np.abs(reconstruction - classical)[interior]),
    )
    origin = particles.values[interior]
    results = {
        "final_train_loss": est.final_train_loss(),
        "final_test_loss": est.final_test_loss(),
        "l2_rel_vs_classical": metrics["l2_rel"],
        "linf_rel_vs_classical": metrics["linf_rel"],
        "l2_rel_classical_vs_origin": float(
            np.linalg.norm(classical[interior] - origin) / np.linalg.norm(origin)
        ),
        "clamp_count": model.clamp_count,
        "n_params": est.n_params_,
        "value_samples": int(dataset.value_features.shape[0]),
        "wall_s": round(time.perf_counter() - t0, 3),
    }
    write_json(out / "run.json", {"command": "fit-field", "config": config, "results": results})
    if plot:
        _maybe_plot_heatmap(out / "field_pred.png", x, y, reconstruction[interior], "learned-kernel sum")
        _maybe_plot_heatmap(out / "field_ref.png", x, y, classical[interior], "classical kernel sum")
    return results


def _kernel_training_particles(config):
    jitter = 0.2 if config["distribution"] == "irregular" else 0.0
    if config["distribution"] not in ("regular", "irregular"):
        raise ConfigurationError(f"unknown distribution {config['distribution']!r}")
    dom = config["domain_size"]
    return lattice_particles(
        config["spacing"],
        (0.0, dom),
        (0.0, dom),
        ghost_layers=3,
        h_factor=config["h_factor"],
        jitter=jitter,
        seed=config["jitter_seed"],
    )


def cmd_train_kernel(config: dict, out: Path, plot: bool = False) -> dict:
    """Fit value and gradient weight models to classical kernel targets."""
    t0 = time.perf_counter()
    if config["kernel"] not in ("plain", "corrected"):
        raise ConfigurationError(f"unknown kernel choice {config['kernel']!r}")
    particles = _kernel_training_particles(config)
    kernel = KernelSpec(h=particles.h)
    nbrs = build_neighbors(particles)
    dataset = generate_kernel_dataset(
        particles,
        kernel,
        nbrs,
        corrected=config["kernel"] == "corrected",
        pre_map=config["pre_map"],
    )

    value_est = _regressor(config).fit(dataset.value_features, dataset.value_targets)
    grad_est = _regressor(config).fit(dataset.grad_features, dataset.grad_targets)
    model = QuantumKernelModel(
        value_model=FittedPredictor.from_estimator(value_est),
        grad_model=FittedPredictor.from_estimator(grad_est),
        value_bounds=dataset.value_bounds,
        grad_bounds=dataset.grad_bounds,
        pre_map=config["pre_map"],
    )
    meta = {
        "h": kernel.h,
        "spacing": config["spacing"],
        "h_factor": config["h_factor"],
        "distribution": config["distribution"],
        "kernel": config["kernel"],
        "value_samples": int(dataset.value_features.shape[0]),
        "grad_samples": int(dataset.grad_features.shape[0]),
    }
    write_json(out / "kernel_model.json", kernel_model_to_dict(model, meta))
    write_trace_csv(out / "value_loss.csv", value_est.trace_)
    write_trace_csv(out / "grad_loss.csv", grad_est.trace_)

    results = {
        "value_final_train_loss": value_est.final_train_loss(),
        "grad_final_train_loss": grad_est.final_train_loss(),
        "value_samples": meta["value_samples"],
        "grad_samples": meta["grad_samples"],
        "wall_s": round(time.perf_counter() - t0, 3),
    }
    if config["export_kernel_space"]:
        grid = np.linspace(0.0, 2 * kernel.h, config["kernel_grid"])
        tables = extract_kernel_space(model, kernel, grid, dV=config["spacing"] ** 2)
        for name, table in tables.items():
            write_csv(
                out / f"kernel_space_{name}.csv",
                ["r", "learned", "classical", "residual"],
                table,
            )
            results[f"max_residual_{name}"] = float(np.max(np.abs(table[:, 3])))
        if plot:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            fig, ax = plt.subplots(figsize=(5, 4))
            for name, table in tables.items():
                ax.plot(table[:, 0], table[:, 1], label=f"{name} learned")
                ax.plot(table[:, 0], table[:, 2], "--", label=f"{name} classical")
            ax.legend(fontsize=7)
            ax.set_xlabel("r")
            fig.tight_layout()
            fig.savefig(out / "kernel_space.png", dpi=110)
            plt.close(fig)
    write_json(out / "run.json", {"command": "train-kernel", "config": config, "results": results})
    return results


def load_kernel_model(path) -> QuantumKernelModel:
    with open(path) as fh:
        return kernel_model_from_dict(json.load(fh))


def cmd_advect(config: dict, out: Path, plot: bool = False) -> dict:
    """Run the transport benchmark with a classical or learned operator."""
    t0 = time.perf_counter()
    times = tuple(float(ts) for ts in config["snapshot_times"] if ts <= config["t_end"] + 1e-12)
    spec = AdvectionSpec(
        spacing=config["spacing"],
        dt=config["dt"],
        h_factor=config["h_factor"],
        jitter=config["jitter"],
        jitter_seed=config["jitter_seed"],
        snapshot_times=times,
    )
    particles = advection_particles(spec)
    kernel = KernelSpec(h=particles.h)
    nbrs = build_neighbors(particles)

    clamp_count = 0
    if config["operator"] == "classical":
        if config["kernel"] == "plain":
            stencil = plain_stencil(particles, kernel, nbrs)
        elif config["kernel"] == "corrected":
            stencil = corrected_stencil(particles, kernel, nbrs)
        else:
            raise ConfigurationError(f"unknown kernel choice {config['kernel']!r}")
    elif config["operator"] == "quantum":
        if not config.get("model_file"):
            raise ConfigurationError("quantum operator needs --model-file")
        model = load_kernel_model(config["model_file"])
        stencil = model_stencil(model, particles, nbrs)
        clamp_count = model.clamp_count
    else:
        raise ConfigurationError(f"unknown operator {config['operator']!r}")

    run = run_period(spec, stencil, particles, t_end=config["t_end"])

    reference = {}
    if config.get("reference"):
        for ts in run.snapshots:
            ref_path = Path(config["reference"]) / _snapshot_name(ts)
            if ref_path.exists():
                with open(ref_path) as fh:
                    rows = list(csv.DictReader(fh))
                reference[ts] = np.array([float(r["psi_pred"]) for r in rows])

    snapshot_l2 = {}
    interior = particles.interior_mask
    for ts, values in sorted(run.snapshots.items()):
        ref = reference.get(ts, run.initial_values)
        err = values - ref
        write_csv(
            out / _snapshot_name(ts),
            ["x", "y", "psi_pred", "psi_ref", "err"],
            zip(particles.positions[:, 0], particles.positions[:, 1], values, ref, err),
        )
        denom = float(np.linalg.norm(ref[interior]))
        snapshot_l2[f"{ts:.4f}"] = (
            float(np.linalg.norm(err[interior])) / denom if denom > 0 else float("nan")
        )
        if plot:
            _maybe_plot_heatmap(
                out / f"snapshot_t{ts:.4f}.png",
                particles.positions[interior, 0],
                particles.positions[interior, 1],
                values[interior],
                f"t={ts:.2f}",
            )

    results = {
        "snapshot_l2_vs_reference": snapshot_l2,
        "l2_final_vs_initial": run.l2_final_vs_initial,
        "linf_final_vs_initial": run.linf_final_vs_initial,
        "max_abs": run.max_abs,
        "nan_count": run.nan_steps,
        "clamp_count": clamp_count,
        "n_steps": int(round(config["t_end"] / config["dt"])),
        "wall_s": round(time.perf_counter() - t0, 3),
    }
    write_json(out / "run.json", {"command": "advect", "config": config, "results": results})
    return results


def _snapshot_name(ts: float) -> str:
    return f"snapshot_t{ts:.4f}.csv"


def cmd_compare(config: dict, out: Path, plot: bool = False) -> dict:
    """Train every (level, family, head, lr) combination on one budget."""
    t0 = time.perf_counter()
    spec = default_vortex_field(seed=config["field_seed"], t=config["field_time"])
    X, y = field_grid(spec, config["grid"])
    loss_rows = []
    final_rows = []
    for level in config["levels"]:
        for family in config["families"]:
            for head in config["heads"]:
                for lr in config["lrs"]:
                    run_cfg = dict(config, model=level, family=family, head=head, lr=lr)
                    est = _regressor(run_cfg).fit(X, y)
                    for row in est.trace_:
                        loss_rows.append(
                            (level, family, head, lr, row.epoch, row.train_loss, row.test_loss)
                        )
                    final_rows.append(
                        (
                            level,
                            family,
                            head,
                            lr,
                            est.final_train_loss(),
                            est.final_test_loss(),
                            est.n_params_,
                        )
                    )
    write_csv(
        out / "compare_losses.csv",
        ["level", "family", "head", "lr", "epoch", "train_loss", "test_loss"],
        loss_rows,
    )
    write_csv(
        out / "compare_final.csv",
        ["level", "family", "head", "lr", "final_train_loss", "final_test_loss", "n_params"],
        final_rows,
    )
    results = {
        "n_runs": len(final_rows),
        "wall_s": round(time.perf_counter() - t0, 3),
    }
    write_json(out / "run.json", {"command": "compare", "config": config, "results": results})
    return results


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", type=str, default=None, help="JSON config (or a run.json)")
    sub.add_argument("--out", type=str, default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--lr", type=float, default=None)
    sub.add_argument("--bs", type=int, default=None)
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=None)
    sub.add_argument("--plot", action="store_true")


def _add_model_flags(sub):
    sub.add_argument("--model", choices=("single", "forward", "crossed", "parallel"), default=None)
    sub.add_argument("--family", choices=("qnn", "qmlp", "qcnn"), default=None)
    sub.add_argument("--head", choices=("pauliz", "prob"), default=None)
    sub.add_argument("--n-qubits", dest="n_qubits", type=int, default=None)
    sub.add_argument("--n-layers", dest="n_layers", type=int, default=None)
    sub.add_argument("--front-hidden", dest="front_hidden", type=_int_list, default=None)
    sub.add_argument("--back-hidden", dest="back_hidden", type=_int_list, default=None)
    sub.add_argument("--activation", choices=("tanh", "relu"), default=None)


def _int_list(text):
    return [int(v) for v in text.split(",") if v != ""]


def _float_list(text):
    return [float(v) for v in text.split(",") if v != ""]


def _str_list(text):
    return [v for v in text.split(",") if v != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsphnet",
        description="Hybrid quantum kernel networks on particle hydrodynamics",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit-field", help="fit a model to the vortex benchmark field")
    _add_common(fit)
    _add_model_flags(fit)
    fit.add_argument("--grid", type=int, default=None)
    fit.add_argument("--field-seed", dest="field_seed", type=int, default=None)
    fit.add_argument("--field-time", dest="field_time", type=float, default=None)
    fit.add_argument("--h-factor", dest="h_factor", type=float, default=None)
    fit.add_argument("--distribution", choices=("regular", "irregular"), default=None)
    fit.add_argument("--kernel", choices=("plain", "corrected"), default=None)
    fit.add_argument("--jitter-seed", dest="jitter_seed", type=int, default=None)

    tk = subs.add_parser("train-kernel", help="learn kernel weights from particle geometry")
    _add_common(tk)
    _add_model_flags(tk)
    tk.add_argument("--distribution", choices=("regular", "irregular"), default=None)
    tk.add_argument("--kernel", choices=("plain", "corrected"), default=None)
    tk.add_argument("--spacing", type=float, default=None)
    tk.add_argument("--h-factor", dest="h_factor", type=float, default=None)
    tk.add_argument("--domain-size", dest="domain_size", type=float, default=None)
    tk.add_argument("--jitter-seed", dest="jitter_seed", type=int, default=None)
    tk.add_argument("--pre-map", dest="pre_map",
                    choices=("identity", "norm_distance", "inner_distance"), default=None)
    tk.add_argument("--export-kernel-space", dest="export_kernel_space",
                    action="store_const", const=True, default=None)
    tk.add_argument("--kernel-grid", dest="kernel_grid", type=int, default=None)

    adv = subs.add_parser("advect", help="run the transient transport benchmark")
    _add_common(adv)
    adv.add_argument("--operator", choices=("classical", "quantum"), default=None)
    adv.add_argument("--model-file", dest="model_file", type=str, default=None)
    adv.add_argument("--kernel", choices=("plain", "corrected"), default=None)
    adv.add_argument("--spacing", type=float, default=None)
    adv.add_argument("--dt", type=float, default=None)
    adv.add_argument("--t-end", dest="t_end", type=float, default=None)
    adv.add_argument("--h-factor", dest="h_factor", type=float, default=None)
    adv.add_argument("--jitter", type=float, default=None)
    adv.add_argument("--jitter-seed", dest="jitter_seed", type=int, default=None)
    adv.add_argument("--snapshot-times", dest="snapshot_times", type=_float_list, default=None)
    adv.add_argument("--reference", type=str, default=None)

    cmp_ = subs.add_parser("compare", help="train families x heads under one budget")
    _add_common(cmp_)
    cmp_.add_argument("--levels", type=_str_list, default=None)
    cmp_.add_argument("--families", type=_str_list, default=None)
    cmp_.add_argument("--heads", type=_str_list, default=None)
    cmp_.add_argument("--lrs", type=_float_list, default=None)
    cmp_.add_argument("--grid", type=int, default=None)
    cmp_.add_argument("--field-seed", dest="field_seed", type=int, default=None)
    cmp_.add_argument("--field-time", dest="field_time", type=float, default=None)
    cmp_.add_argument("--n-qubits", dest="n_qubits", type=int, default=None)
    cmp_.add_argument("--n-layers", dest="n_layers", type=int, default=None)
    cmp_.add_argument("--front-hidden", dest="front_hidden", type=_int_list, default=None)
    cmp_.add_argument("--back-hidden", dest="back_hidden", type=_int_list, default=None)
    cmp_.add_argument("--activation", choices=("tanh", "relu"), default=None)

    return parser


_DEFAULTS = {
    "fit-field": FIT_FIELD_DEFAULTS,
    "train-kernel": TRAIN_KERNEL_DEFAULTS,
    "advect": ADVECT_DEFAULTS,
    "compare": COMPARE_DEFAULTS,
}
_COMMANDS = {
    "fit-field": cmd_fit_field,
    "train-kernel": cmd_train_kernel,
    "advect": cmd_advect,
    "compare": cmd_compare,
}


def merged_config(args: argparse.Namespace) -> dict:
    """defaults <- config file <- explicit flags."""
    config = dict(_DEFAULTS[args.command])
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # accept a previous run.json
        unknown = set(loaded) - set(config)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = merged_config(args)
    out = Path(args.out) if args.out else Path(f"runs/{args.command}")
    out.mkdir(parents=True, exist_ok=True)
    if args.plot:
        try:
            import matplotlib  # noqa: F401
        except ImportError:
            raise ConfigurationError("--plot needs matplotlib (install the 'plot' extra)")
    results = _COMMANDS[args.command](config, out, plot=args.plot)
    summary = {
        k: v for k, v in results.items() if isinstance(v, (int, float, str))
    }
    print(json.dumps({"out": str(out), **summary}, sort_keys=True))
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except CONFIG_ERRORS as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
