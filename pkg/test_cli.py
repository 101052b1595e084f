#!/usr/bin/env python3
"""
Tests for the glu command line.
"""

import json

import pytest

from app import main
from core.census import disjoint_union
from core.error_handler import EXIT_INCONCLUSIVE, EXIT_INVALID, EXIT_OK


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


class TestValidateCommand:
    """Test validate and the error surface"""

    def test_validate(self, double, write_doc, capsys):
        path = write_doc("double.json", double.to_dict())
        assert main(["validate", path]) == EXIT_OK
        report = _stdout_json(capsys)
        assert report["command"] == "validate"
        assert report["skeleton"]["T"] == 2
        assert "threads" not in report["config"]

    def test_self_glued_face(self, write_doc, capsys):
        doc = {"format": "glu3/1", "tetrahedra": 1, "gluings": [[[0, [0, 1, 2, 3]]] * 4]}
        assert main(["validate", write_doc("bad.json", doc)]) == EXIT_INVALID
        captured = capsys.readouterr()
        assert captured.out == ""
        error = json.loads(captured.err.strip().splitlines()[-1])
        assert error["format"] == "err/1"
        assert error["error"] == "SelfGluedFace"
        assert error["details"] == {"face": 0, "tet": 0}

    def test_missing_file(self, tmp_path, capsys):
        assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_INVALID
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "BadFormat"

    def test_markdown_on_stdout(self, lens31, write_doc, capsys):
        path = write_doc("lens.json", lens31.to_dict())
        assert main(["validate", path, "--markdown"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("# glu validate")
        assert "| tetrahedra | 3 |" in out

    def test_report_file_with_markdown(self, double, write_doc, tmp_path):
        path = write_doc("double.json", double.to_dict())
        target = tmp_path / "out" / "report.json"
        assert main(["validate", path, "--report", str(target), "--markdown"]) == EXIT_OK
        assert json.loads(target.read_text(encoding="utf-8"))["status"] == "completed"
        assert (tmp_path / "out" / "report.md").read_text(encoding="utf-8").startswith("# glu validate")


class TestPipelineCommands:
    """Test commands that run pipeline stages"""

    def test_disconnected_input(self, double, write_doc, capsys):
        path = write_doc("two.json", disjoint_union(double, double).to_dict())
        assert main(["quotients", path]) == EXIT_INVALID
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "DisconnectedGraph"

    def test_pi1(self, lens31, write_doc, capsys):
        assert main(["pi1", write_doc("lens.json", lens31.to_dict())]) == EXIT_OK
        assert _stdout_json(capsys)["abelianization"] == [3]

    def test_subdivide_saves_sequence(self, double, write_doc, tmp_path, capsys):
        path = write_doc("double.json", double.to_dict())
        target = tmp_path / "coned.mvs.json"
        assert main(["subdivide", path, "--save-sequence", str(target), "--shelling-budget", "500"]) == EXIT_OK
        report = _stdout_json(capsys)
        assert report["size"] == 24
        assert report["elementary"] == 10
        assert report["config"]["shelling_budget"] == 500
        assert json.loads(target.read_text(encoding="utf-8"))["format"] == "mvs/1"

    def test_compare_witness(self, double, s4, write_doc, capsys):
        a = write_doc("a.json", double.to_dict())
        b = write_doc("b.json", s4.to_dict())
        assert main(["compare", a, b, "--no-geometry", "--cap", "1", "--threads", "1"]) == EXIT_OK
        report = _stdout_json(capsys)
        assert report["verdict"] == "homeomorphic-witness"
        assert report["config"]["move_cap"] == 1

    def test_compare_inconclusive(self, double, lens31, write_doc, capsys):
        a = write_doc("a.json", double.to_dict())
        b = write_doc("b.json", lens31.to_dict())
        assert main(["compare", a, b, "--no-geometry", "--cap", "1", "--threads", "1"]) == EXIT_INCONCLUSIVE
        report = _stdout_json(capsys)
        assert report["status"] == "inconclusive"
        assert report["witness"] is None


class TestStandaloneCommands:
    """Test bound and census"""

    def test_bound(self, capsys):
        assert main(["bound", "2", "2", "--L", "1", "--inj", "1"]) == EXIT_OK
        report = _stdout_json(capsys)
        assert report["m"] == 0
        assert report["f"] == "169869312"

    def test_bound_with_deep_subdivision(self, capsys):
        assert main(["bound", "2", "2", "--L", "3.5", "--inj", "0.05"]) == EXIT_OK
        report = _stdout_json(capsys)
        assert report["m"] > 1000
        assert report["f"] is None
        assert report["f_exponent"] == 4 + 3 * report["m"]

    def test_bound_rejects_zero_radius(self, capsys):
        assert main(["bound", "1", "1", "--L", "1", "--inj", "0"]) == EXIT_INVALID
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "ConfigError"

    def test_census_writes_gluing(self, tmp_path):
        target = tmp_path / "lens.json"
        assert main(["census", "lens", "5", "2", "--report", str(target)]) == EXIT_OK
        doc = json.loads(target.read_text(encoding="utf-8"))
        assert doc["format"] == "glu3/1"
        assert doc["tetrahedra"] == 5

    def test_census_rejects_bad_lens(self, capsys):
        assert main(["census", "lens", "4", "2"]) == EXIT_INVALID
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "ConfigError"

    def test_bad_config_value(self, capsys):
        assert main(["bound", "1", "1", "--L", "1", "--inj", "1", "--threads", "0"]) == EXIT_INVALID


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
