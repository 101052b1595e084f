#!/usr/bin/env python3
"""
Tests for document IO and Markdown rendering.
"""

import json

import pytest

from core.error_handler import BadFormat
from core.pachner import Move, MoveSequence
from core.pipeline import Pipeline
from core.tricore import iso_signature
from utils.file_manager import FileManager, dumps
from utils.templates import FALLBACK, TemplateManager


class TestFileManager:
    """Test reading and storing documents"""

    @pytest.fixture(autouse=True)
    def _files(self, tmp_path):
        self.files = FileManager(str(tmp_path / "runs"))

    def test_dumps_is_canonical(self):
        assert dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}'

    def test_load_triangulation(self, double, write_doc):
        assert self.files.load_triangulation(write_doc("d.json", double.to_dict())) == double

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(BadFormat):
            self.files.read_document(str(path))

    def test_malformed_sequence(self, write_doc):
        with pytest.raises(BadFormat):
            self.files.load_sequence(write_doc("s.json", {"format": "mvs/1", "initial": "x"}))

    def test_save_and_list(self, double):
        sig = iso_signature(double)
        sequence = MoveSequence(sig, (Move.make("1-4", tet=0),), sig)
        stored = self.files.save_sequence("one", sequence)
        assert self.files.load_sequence(stored) == sequence
        report_path = self.files.save_report("double", {"command": "validate", "status": "completed"})
        listing = self.files.list_outputs()
        assert listing["sequences"] == [stored]
        assert listing["reports"] == [report_path]
        assert "_validate_double" in report_path

    def test_save_poly_system(self, double, small_config):
        system = Pipeline(small_config).poly_system(double)
        stored = self.files.save_poly_system("double", system)
        assert stored.endswith("double.psy.json")
        document = self.files.read_document(stored)
        assert document["format"] == "psy/1"
        assert document["mode"] == small_config.mode
        assert len(document["vars"]) == len(system.variables)
        assert stored in self.files.list_outputs()["structures"]

    def test_file_info(self, double, write_doc):
        info = self.files.get_file_info(write_doc("d.json", double.to_dict()))
        assert info["format"] == "glu3/1"
        assert info["size"] > 0
        assert "error" in self.files.get_file_info("/nonexistent/file.json")

    def test_write_to_stdout(self, capsys):
        assert self.files.write_document({"format": "rep/1"}) is None
        assert json.loads(capsys.readouterr().out) == {"format": "rep/1"}


class TestTemplates:
    """Test Markdown rendering of reports"""

    def setup_method(self):
        self.templates = TemplateManager()

    def test_available(self):
        names = self.templates.get_available_templates()
        assert FALLBACK in names
        assert "validate.md.j2" in names

    def test_fallback_for_unknown_command(self):
        assert self.templates.template_for("bound") == FALLBACK
        text = self.templates.render_report({"command": "bound", "status": "completed", "m": 0})
        assert text.startswith("# glu bound")
        assert '"m": 0' in text

    def test_pi1_report(self, lens31, small_config):
        text = self.templates.render_report(Pipeline(small_config).pi1(lens31))
        assert "abelianization: Z/3" in text

    def test_inconclusive_reason(self):
        text = self.templates.render_report({"command": "geometrize", "status": "inconclusive",
                                             "reason": "no structure found in 2 starts", "mode": "direct"})
        assert "- reason: no structure found in 2 starts" in text
        assert "- mode: direct" in text


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
