import json

import mock
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from infrastructure.plotting import SvgPlotRenderer
from infrastructure.repositories import FileArtifactRepository


def write_config(tmp_path, data):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


SIMULATE = {
    "experiment": "simulate",
    "model": {"k": 1, "alpha": 0.0, "kappa": 2.0, "na": 6, "nb": 3},
    "integrator": {"dt": 0.01, "t_max": 0.5, "record_every": 10},
    "initial_state": {"kind": "fock", "n": 1},
}


class TestFileArtifactRepository:
    def test_json_is_sorted_and_handles_numpy(self, tmp_path):
        import numpy as np

        repo = FileArtifactRepository(str(tmp_path))
        repo.write_json("report.json", {"b": np.float64(1.5), "a": [np.int64(2)], "z": 1 + 2j})
        text = (tmp_path / "report.json").read_text()
        assert json.loads(text) == {"a": [2], "b": 1.5, "z": {"im": 2.0, "re": 1.0}}
        assert text.index('"a"') < text.index('"b"')

    def test_rows_and_merge(self, tmp_path):
        repo = FileArtifactRepository(str(tmp_path))
        repo.write_rows("points/kappa_4.csv", ["kappa", "error"], [["4.0", "0.1"]])
        repo.write_rows("points/kappa_8.csv", ["kappa", "error"], [["8.0", "0.05"]])
        repo.merge_rows(["points/kappa_4.csv", "points/kappa_8.csv"], "series.csv")
        assert (tmp_path / "series.csv").read_text() == "kappa,error\n4.0,0.1\n8.0,0.05\n"

    def test_merge_rejects_different_headers(self, tmp_path):
        repo = FileArtifactRepository(str(tmp_path))
        repo.write_rows("a.csv", ["x"], [["1"]])
        repo.write_rows("b.csv", ["y"], [["2"]])
        with pytest.raises(ValueError):
            repo.merge_rows(["a.csv", "b.csv"], "merged.csv")

    def test_paths_stay_inside_base_dir(self, tmp_path):
        repo = FileArtifactRepository(str(tmp_path / "run"))
        with pytest.raises(ValueError):
            repo.path("../outside.json")


class TestSvgPlotRenderer:
    def test_line_plot_is_reproducible(self, tmp_path):
        renderer = SvgPlotRenderer()
        first = renderer.line_plot(str(tmp_path / "a.svg"), [0, 1, 2], {"mass": [0.1, 0.5, 0.9]}, "t", "m", "Mass")
        second = renderer.line_plot(str(tmp_path / "b.svg"), [0, 1, 2], {"mass": [0.1, 0.5, 0.9]}, "t", "m", "Mass")
        a, b = open(first).read(), open(second).read()
        assert a == b
        assert a.lstrip().startswith("<?xml")
        assert "0.9" in a

    def test_bar_plot_with_threshold_and_log_axis(self, tmp_path):
        path = SvgPlotRenderer().bar_plot(str(tmp_path / "s.svg"), [1.0, 1e-3, 0.0], "i", "s", "Spectrum",
                                          log_y=True, threshold=1e-8)
        assert "<svg" in open(path).read()


class TestCatflowCommand:
    def test_simulate_writes_artifacts(self, tmp_path):
        out = tmp_path / "out"
        call_command("catflow", "simulate", config=write_config(tmp_path, SIMULATE), out=str(out))

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "succeeded"
        assert manifest["experiment"] == "simulate"
        assert manifest["config"]["integrator"]["dt"] == 0.01
        assert manifest["version"]
        for name in ("series.csv", "report.json", "mass.svg", "energy.svg"):
            assert (out / name).exists(), name
        header = (out / "series.csv").read_text().splitlines()[0]
        assert header.startswith("t,mass_HL_re,mass_HL_im")

    def test_set_flags_override_the_file(self, tmp_path):
        out = tmp_path / "out"
        call_command("catflow", "simulate", config=write_config(tmp_path, SIMULATE), out=str(out),
                     overrides=["integrator.t_max=0.2"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["integrator"]["t_max"] == 0.2

    def test_invalid_config_exits_with_code_2(self, tmp_path):
        out = tmp_path / "out"
        bad = dict(SIMULATE, model=dict(SIMULATE["model"], k=0))
        with pytest.raises(CommandError) as exc:
            call_command("catflow", "simulate", config=write_config(tmp_path, bad), out=str(out))
        assert exc.value.returncode == 2
        failure = json.loads((out / "failure.json").read_text())
        assert failure["error"] == "config_invalid"
        assert "model.k: k must be ≥ 1" in failure["errors"]

    def test_missing_config_file_exits_with_code_2(self, tmp_path):
        with pytest.raises(CommandError) as exc:
            call_command("catflow", "simulate", config=str(tmp_path / "nope.json"), out=str(tmp_path / "out"))
        assert exc.value.returncode == 2

    def test_truncation_breach_exits_with_code_3(self, tmp_path):
        out = tmp_path / "out"
        breach = dict(SIMULATE, initial_state={"kind": "fock", "n": 5})
        with pytest.raises(CommandError) as exc:
            call_command("catflow", "simulate", config=write_config(tmp_path, breach), out=str(out))
        assert exc.value.returncode == 3
        failure = json.loads((out / "failure.json").read_text())
        assert failure["error"] == "truncation_breach"
        assert json.loads((out / "manifest.json").read_text())["status"] == "failed"

    def test_workers_flag_reaches_the_use_case(self, tmp_path):
        with mock.patch("infrastructure.management.commands.catflow.RunExperimentUseCase") as use_case:
            use_case.return_value.execute.return_value = 0
            call_command("catflow", "simulate", config=write_config(tmp_path, SIMULATE),
                         out=str(tmp_path / "out"), workers=3)
        assert use_case.call_args.kwargs["workers"] == 3
        use_case.return_value.execute.assert_called_once()
