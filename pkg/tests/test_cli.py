import csv
import json

import numpy as np
import pytest

from qsphnet.cli import main

FAST_FIT = [
    "--grid", "8", "--epochs", "2", "--bs", "16", "--n-qubits", "2",
    "--n-layers", "1", "--front-hidden", "4", "--back-hidden", "3",
]
FAST_KERNEL = [
    "--epochs", "2", "--bs", "32", "--n-qubits", "2", "--n-layers", "1",
    "--front-hidden", "4", "--back-hidden", "3", "--spacing", "0.05",
    "--domain-size", "0.2",
]
FAST_ADVECT = [
    "--spacing", "0.05", "--dt", "1e-3", "--t-end", "0.01",
    "--snapshot-times", "0,0.01",
]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def strip_wall_ms(rows):
    return [row[:3] for row in rows]


class TestFitField:
    def test_emits_artifact_files(self, tmp_path):
        out = tmp_path / "run"
        code = main(["fit-field", "--model", "single", "--head", "pauliz",
                     "--out", str(out), *FAST_FIT])
        assert code == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["error_map.csv", "loss.csv", "predictions.csv", "run.json"]

    def test_zero_epochs_emits_untrained_baseline(self, tmp_path):
        out = tmp_path / "run"
        code = main(["fit-field", "--out", str(out), *FAST_FIT, "--epochs", "0"])
        assert code == 0
        rows = read_csv(out / "loss.csv")
        assert rows == [["epoch", "train_loss", "test_loss", "wall_ms"]]
        assert (out / "predictions.csv").exists()

    def test_artifact_headers(self, tmp_path):
        out = tmp_path / "run"
        main(["fit-field", "--out", str(out), *FAST_FIT])
        assert read_csv(out / "loss.csv")[0] == ["epoch", "train_loss", "test_loss", "wall_ms"]
        assert read_csv(out / "predictions.csv")[0] == ["x", "y", "f_pred", "f_ref", "err"]
        assert read_csv(out / "error_map.csv")[0] == ["x", "y", "abs_err"]
        run = json.loads((out / "run.json").read_text())
        assert set(run) == {"command", "config", "results"}
        assert {"final_train_loss", "final_test_loss", "l2_rel_vs_classical",
                "linf_rel_vs_classical", "n_params", "wall_s"} <= set(run["results"])

    def test_rerun_from_echoed_config_is_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["fit-field", "--out", str(a), *FAST_FIT, "--seed", "3"])
        main(["fit-field", "--out", str(b), "--config", str(a / "run.json")])
        assert (a / "predictions.csv").read_bytes() == (b / "predictions.csv").read_bytes()
        assert (a / "error_map.csv").read_bytes() == (b / "error_map.csv").read_bytes()
        assert strip_wall_ms(read_csv(a / "loss.csv")) == strip_wall_ms(read_csv(b / "loss.csv"))
        ra = json.loads((a / "run.json").read_text())
        rb = json.loads((b / "run.json").read_text())
        assert ra["config"] == rb["config"]

    def test_different_seeds_differ(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["fit-field", "--out", str(a), *FAST_FIT, "--seed", "1"])
        main(["fit-field", "--out", str(b), *FAST_FIT, "--seed", "2"])
        assert (a / "predictions.csv").read_bytes() != (b / "predictions.csv").read_bytes()

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"grdi": 8}))
        code = main(["fit-field", "--config", str(bad), "--out", str(tmp_path / "x")])
        assert code == 2


class TestTrainKernel:
    @pytest.mark.parametrize("distribution,kernel", [
        ("regular", "plain"), ("irregular", "corrected"),
    ])
    def test_case_pairings_complete(self, tmp_path, distribution, kernel):
        out = tmp_path / f"{distribution}-{kernel}"
        code = main(["train-kernel", "--distribution", distribution,
                     "--kernel", kernel, "--out", str(out), *FAST_KERNEL])
        assert code == 0
        model = json.loads((out / "kernel_model.json").read_text())
        assert {"value_model", "grad_model", "value_bounds", "grad_bounds"} <= set(model)
        assert model["meta"]["distribution"] == distribution
        assert model["meta"]["kernel"] == kernel

    def test_export_kernel_space_grid(self, tmp_path):
        out = tmp_path / "run"
        main(["train-kernel", "--export-kernel-space", "--kernel-grid", "11",
              "--out", str(out), *FAST_KERNEL])
        rows = read_csv(out / "kernel_space_value.csv")
        assert rows[0] == ["r", "learned", "classical", "residual"]
        assert len(rows) == 12
        rs = [float(r[0]) for r in rows[1:]]
        h = json.loads((out / "kernel_model.json").read_text())["meta"]["h"]
        assert rs[0] == 0.0
        assert rs[-1] == pytest.approx(2 * h)
        assert (out / "kernel_space_grad_x.csv").exists()
        assert (out / "kernel_space_grad_y.csv").exists()

    def test_deterministic_under_fixed_seed(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["train-kernel", "--out", str(a), *FAST_KERNEL, "--seed", "7"])
        main(["train-kernel", "--out", str(b), *FAST_KERNEL, "--seed", "7"])
        assert (a / "kernel_model.json").read_bytes() == (b / "kernel_model.json").read_bytes()


class TestAdvect:
    def test_classical_run_reports_snapshots(self, tmp_path):
        out = tmp_path / "run"
        code = main(["advect", "--operator", "classical", "--out", str(out), *FAST_ADVECT])
        assert code == 0
        run = json.loads((out / "run.json").read_text())
        assert "0.0100" in run["results"]["snapshot_l2_vs_reference"]
        assert run["results"]["max_abs"] <= 1.2
        assert run["results"]["nan_count"] == 0
        rows = read_csv(out / "snapshot_t0.0100.csv")
        assert rows[0] == ["x", "y", "psi_pred", "psi_ref", "err"]

    def test_quantum_needs_model_file(self, tmp_path):
        code = main(["advect", "--operator", "quantum", "--out", str(tmp_path / "x"),
                     *FAST_ADVECT])
        assert code == 2

    def test_quantum_run_with_trained_model(self, tmp_path):
        kdir = tmp_path / "kernel"
        main(["train-kernel", "--out", str(kdir), *FAST_KERNEL, "--h-factor", "1.8"])
        out = tmp_path / "adv"
        code = main(["advect", "--operator", "quantum", "--model-file",
                     str(kdir / "kernel_model.json"), "--out", str(out), *FAST_ADVECT])
        assert code == 0
        run = json.loads((out / "run.json").read_text())
        assert "clamp_count" in run["results"]

    def test_reference_comparison(self, tmp_path):
        ref = tmp_path / "ref"
        main(["advect", "--operator", "classical", "--out", str(ref), *FAST_ADVECT])
        out = tmp_path / "cmp"
        code = main(["advect", "--operator", "classical", "--reference", str(ref),
                     "--out", str(out), *FAST_ADVECT])
        assert code == 0
        run = json.loads((out / "run.json").read_text())
        # identical runs: zero error against the reference snapshots
        assert run["results"]["snapshot_l2_vs_reference"]["0.0100"] == 0.0


class TestCompare:
    def test_families_times_heads_rows(self, tmp_path):
        out = tmp_path / "run"
        code = main(["compare", "--grid", "6", "--epochs", "1", "--bs", "16",
                     "--n-qubits", "2", "--n-layers", "1", "--front-hidden", "3",
                     "--back-hidden", "2", "--families", "qnn,qmlp,qcnn",
                     "--heads", "pauliz,prob", "--out", str(out)])
        assert code == 0
        finals = read_csv(out / "compare_final.csv")
        assert finals[0] == ["level", "family", "head", "lr",
                             "final_train_loss", "final_test_loss", "n_params"]
        assert len(finals) == 1 + 6
        heads = {row[2] for row in finals[1:]}
        assert heads == {"pauliz", "prob"}

    def test_identical_seeds_identical_tables(self, tmp_path):
        args = ["compare", "--grid", "6", "--epochs", "1", "--bs", "16",
                "--n-qubits", "2", "--n-layers", "1", "--front-hidden", "3",
                "--back-hidden", "2", "--families", "qmlp", "--heads", "pauliz",
                "--seed", "5"]
        a, b = tmp_path / "a", tmp_path / "b"
        main(args + ["--out", str(a)])
        main(args + ["--out", str(b)])
        assert (a / "compare_final.csv").read_bytes() == (b / "compare_final.csv").read_bytes()
        assert (a / "compare_losses.csv").read_bytes() == (b / "compare_losses.csv").read_bytes()


class TestPlot:
    def test_plot_flag_renders_images(self, tmp_path):
        pytest.importorskip("matplotlib")
        out = tmp_path / "run"
        code = main(["fit-field", "--out", str(out), *FAST_FIT, "--plot"])
        assert code == 0
        assert (out / "field_pred.png").exists()
