"""Secondary-component tests: figures from real experiment outputs.

These exercise the published CSV/JSON schemas end to end (the convergence
sweep and the finite-part fit), without recomputing any mathematics.
"""

import json

import pytest

from cutofflab import config_from_dict, run_experiment

from render import RenderError, plot_convergence, plot_finite_part
import render as render_module


@pytest.fixture(scope="module")
def convergence_outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("conv")
    cfg = config_from_dict(
        {
            "experiment": "cutoff-convergence",
            "model": {"kind": "fourier_circle"},
            "family": {
                "terms": [
                    {"operator": "laplacian", "coefficient": "const", "amplitude": 1.0},
                    {"operator": "cos_x", "coefficient": "sin_2pi", "amplitude": 1.0},
                ],
                "period": 1.0,
                "loss_order": 2.0,
            },
            "params": {
                "Ns": [10, 20, 40, 80],
                "N_ref": 400,
                "t": 1.0,
                "tol": 1e-10,
                "initial_mode_label": 0,
            },
            "criteria": {
                "max_final_error": 1e-6,
                "strictly_decreasing": True,
                "max_oracle_delta": 1e-8,
            },
            "seed": 0,
        }
    )
    report = run_experiment(cfg, out_dir=out)
    assert report.summary["pass"] is True
    return out


@pytest.fixture(scope="module")
def traces_outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("traces")
    cfg = config_from_dict(
        {
            "experiment": "traces",
            "model": {"kind": "explicit_diagonal", "eigenvalues": "linear"},
            "family": {"terms": []},
            "params": {"eps_start": 0.0125, "eps_count": 5},
            "criteria": {"finite_part_target": -0.5, "finite_part_tol": 1e-3},
            "seed": 0,
        }
    )
    report = run_experiment(cfg, out_dir=out)
    assert report.summary["pass"] is True
    return out


@pytest.fixture(scope="module")
def slicing_outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("slicing")
    cfg = config_from_dict(
        {
            "experiment": "slicing-order",
            "model": {"kind": "fourier_circle"},
            "family": {
                "terms": [
                    {"operator": "laplacian", "coefficient": "const", "amplitude": 1.0},
                    {"operator": "cos_x", "coefficient": "sin_2pi", "amplitude": 1.0},
                ],
                "period": 1.0,
            },
            "params": {"N": 20, "Ms": [32, 64, 128, 256], "t": 1.0},
            "seed": 0,
        }
    )
    run_experiment(cfg, out_dir=out)
    return out


class TestConvergenceFigure:
    def test_renders_from_sweep_outputs(self, convergence_outputs, tmp_path):
        out_png = tmp_path / "convergence.png"
        meta = plot_convergence(
            convergence_outputs / "results.csv",
            convergence_outputs / "summary.json",
            out_png,
        )
        assert out_png.exists() and out_png.stat().st_size > 0
        assert meta["x"] == "N" and meta["y"] == "error"
        assert meta["warning"] == ""

    def test_slope_annotation_equals_summary(self, slicing_outputs, tmp_path):
        out_png = tmp_path / "slicing.png"
        meta = plot_convergence(
            slicing_outputs / "results.csv",
            slicing_outputs / "summary.json",
            out_png,
        )
        summary = json.loads((slicing_outputs / "summary.json").read_text())
        slope = summary["slopes"]["order"]["value"]
        assert f"slope = {slope:.4f}" in meta["annotation"]

    def test_empty_csv_rejected_and_no_file_written(self, tmp_path):
        csv_path = tmp_path / "empty.csv"
        csv_path.write_text("N,error\n")
        summary = tmp_path / "summary.json"
        summary.write_text("{}")
        out_png = tmp_path / "fig.png"
        with pytest.raises(RenderError):
            plot_convergence(csv_path, summary, out_png)
        assert not out_png.exists()

    def test_missing_columns_rejected(self, tmp_path):
        csv_path = tmp_path / "odd.csv"
        csv_path.write_text("alpha,beta\n1,2\n")
        summary = tmp_path / "summary.json"
        summary.write_text("{}")
        with pytest.raises(RenderError):
            plot_convergence(csv_path, summary, tmp_path / "fig.png")


class TestFinitePartFigure:
    def test_renders_with_finite_part_line(self, traces_outputs, tmp_path):
        out_png = tmp_path / "fp.png"
        meta = plot_finite_part(
            traces_outputs / "results.csv",
            traces_outputs / "summary.json",
            out_png,
        )
        assert out_png.exists() and out_png.stat().st_size > 0
        summary = json.loads((traces_outputs / "summary.json").read_text())
        assert meta["finite_part"] == summary["constants"]["finite_part"]
        assert abs(meta["finite_part"] + 0.5) <= 1e-3

    def test_hash_mismatch_warns_but_renders(self, traces_outputs, tmp_path):
        out_png = tmp_path / "fp_warn.png"
        meta = plot_finite_part(
            traces_outputs / "results.csv",
            traces_outputs / "summary.json",
            out_png,
            expect_hash="deadbeef",
        )
        assert out_png.exists()
        assert "WARNING" in meta["warning"]

    def test_cli_entry(self, traces_outputs, tmp_path, capsys):
        out_png = tmp_path / "cli.png"
        code = render_module.main(
            [
                "--csv", str(traces_outputs / "results.csv"),
                "--summary", str(traces_outputs / "summary.json"),
                "--out", str(out_png),
                "--kind", "finite-part",
            ]
        )
        assert code == 0
        assert out_png.exists()
        meta = json.loads(capsys.readouterr().out)
        assert "finite_part" in meta

    def test_reproducible_bytes(self, traces_outputs, tmp_path):
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        for target in (a, b):
            plot_finite_part(
                traces_outputs / "results.csv",
                traces_outputs / "summary.json",
                target,
            )
        assert a.read_bytes() == b.read_bytes()
