import json
from pathlib import Path

import pytest

from spectrafuse import cli, prep1d, search
from spectrafuse.core import load_dataset


def write_json(path: Path, obj) -> str:
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    """Synthetic dataset written through the CLI itself."""
    root = tmp_path_factory.mktemp("cli_data")
    spec = {
        "n_breast": 6, "n_colon": 6, "n_control": 6, "replicate_count": 2,
        "seed": 7, "delta": 0.8, "ftir_step": 16.0, "raman_step": 8.0,
        "eem_ex_step": 15.0, "eem_em_step": 15.0,
    }
    spec_path = write_json(root / "spec.json", spec)
    assert cli.main(["synth", "--spec", spec_path, "--out", str(root / "data")]) == 0
    return root / "data"


FAST_GBDT = {"n_rounds": 6, "max_depth": 3}


class TestSynthAndValidate:
    def test_written_dataset_loads(self, dataset_dir):
        tables = load_dataset(dataset_dir / "dataset.json")
        assert len(tables["FTIR"]) == 36
        assert len(tables["Raman"]) == 18

    def test_validate_accepts_good_dataset(self, dataset_dir, capsys):
        assert cli.main(["validate", "--dataset", str(dataset_dir / "dataset.json")]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ok"] is True
        assert out["records"]["FTIR"] == 36

    def test_validate_rejects_corrupt_dataset(self, dataset_dir, tmp_path, capsys):
        manifest = json.loads((dataset_dir / "dataset.json").read_text())
        manifest["modalities"]["FTIR"][0]["file"] = "missing.csv"
        bad = write_json(tmp_path / "bad.json", manifest)
        assert cli.main(["validate", "--dataset", bad]) == 1
        out = json.loads(capsys.readouterr().out)
        assert out["ok"] is False


class TestRun:
    def test_single_cell_outputs(self, dataset_dir, tmp_path):
        cfg = write_json(tmp_path / "run.json", {
            "dataset": str(dataset_dir / "dataset.json"),
            "scenario": "breast",
            "modalities": ["FTIR", "Raman"],
            "gbdt": FAST_GBDT,
            "cv": {"k": 3, "seed": 0},
        })
        out = tmp_path / "reports"
        assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
        cell = out / "breast_FTIR+Raman"
        metrics = json.loads((cell / "metrics.json").read_text())
        assert metrics["configuration"] == "FTIR+Raman"
        assert len(metrics["folds"]) == 3
        assert (cell / "roc_breast_FTIR+Raman.csv").exists()
        assert (cell / "pca_FTIR.csv").exists()
        assert (cell / "pca_Raman.csv").exists()
        names = json.loads((cell / "feature_names.json").read_text())
        assert names[0].startswith("FTIR:")
        assert names[-1].startswith("Raman:")

    def test_suite_produces_14_directories(self, dataset_dir, tmp_path):
        cfg = write_json(tmp_path / "suite.json", {
            "dataset": str(dataset_dir / "dataset.json"),
            "suite": True,
            "gbdt": FAST_GBDT,
            "cv": {"k": 3, "seed": 0},
        })
        out = tmp_path / "reports"
        assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
        dirs = [d for d in out.iterdir() if d.is_dir()]
        assert len(dirs) == 14
        assert all((d / "metrics.json").exists() for d in dirs)

    def test_failure_writes_error_json_and_nonzero_exit(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "broken.json", {
            "dataset": str(tmp_path / "nope.json"),
            "scenario": "breast",
            "modalities": ["FTIR"],
        })
        out = tmp_path / "reports"
        assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 1
        err = json.loads((out / "error.json").read_text())
        assert "error" in err and "kind" in err

    def test_reruns_are_byte_identical(self, dataset_dir, tmp_path):
        cfg = write_json(tmp_path / "repro.json", {
            "dataset": str(dataset_dir / "dataset.json"),
            "scenario": "colon",
            "modalities": ["FTIR", "EEM"],
            "gbdt": FAST_GBDT,
            "cv": {"k": 3, "seed": 5},
        })
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", "--config", cfg, "--out", str(out_a)]) == 0
        assert cli.main(["run", "--config", cfg, "--out", str(out_b)]) == 0
        rel = "colon_FTIR+EEM/metrics.json"
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()


class TestGridSearch:
    def test_full_sweep_rows_winner_and_cache(self, dataset_dir, tmp_path, capsys,
                                              monkeypatch):
        monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path / "cache"))
        cfg = write_json(tmp_path / "grid.json", {
            "dataset": str(dataset_dir / "dataset.json"),
            "scenarios": ["breast", "colon"],
            "gbdt": {"n_rounds": 2, "max_depth": 2},
            "cv": {"k": 2, "seed": 0},
        })
        out = tmp_path / "grid"
        assert cli.main(["grid-search", "--config", cfg, "--out", str(out)]) == 0
        first_log = capsys.readouterr().out
        assert "evaluated 2880 candidates" in first_log

        rows = (out / "grid_results.csv").read_text().strip().splitlines()
        assert len(rows) == 2881  # header + one row per candidate

        # winner.json must match an offline min-max recomputation of the CSV
        import csv as _csv
        with open(out / "grid_results.csv", newline="") as fh:
            table = list(_csv.DictReader(fh))
        results = []
        for row in table:
            aucs = {s: (None if row[f"auc_{s}"] == "" else float(row[f"auc_{s}"]))
                    for s in ("breast", "colon")}
            cfg_obj = prep1d.PipelineConfig.from_dict(
                {k: row[k] for k in prep1d.PipelineConfig().to_dict()})
            results.append(search.SearchResult(
                config=cfg_obj, scenario_aucs=aucs,
                worst_case=float(row["worst_case"]), flagged=row["flagged"] == "1"))
        offline = search.select_minmax(results)
        winner = json.loads((out / "winner.json").read_text())
        assert winner["config"] == offline.config.to_dict()
        assert winner["worst_case"] == offline.worst_case

        # warm rerun touches nothing
        assert cli.main(["grid-search", "--config", cfg, "--out", str(out)]) == 0
        assert "evaluated 0 candidates" in capsys.readouterr().out


class TestPlots:
    def test_svg_structure(self, dataset_dir, tmp_path):
        cfg = write_json(tmp_path / "plot_run.json", {
            "dataset": str(dataset_dir / "dataset.json"),
            "suite": True,
            "gbdt": FAST_GBDT,
            "cv": {"k": 3, "seed": 0},
            "learning_curve": [0.5, 1.0],
        })
        reports = tmp_path / "reports"
        assert cli.main(["run", "--config", cfg, "--out", str(reports)]) == 0
        figs = tmp_path / "figs"
        assert cli.main(["plots", "--report", str(reports), "--out", str(figs)]) == 0

        roc = (figs / "roc_breast.svg").read_text()
        for mods in ("FTIR", "Raman", "EEM", "FTIR+Raman", "FTIR+EEM",
                     "Raman+EEM", "FTIR+Raman+EEM"):
            assert f'id="roc-mean-{mods}"' in roc
            assert f'id="roc-band-{mods}"' in roc

        pca = next(figs.glob("pca_breast_FTIR_FTIR.svg")).read_text()
        assert "explained variance" in pca
        assert (figs / "learning_curve_breast_FTIR.svg").exists()

    def test_empty_report_dir_errors(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert cli.main(["plots", "--report", str(empty)]) == 1
