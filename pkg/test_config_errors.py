#!/usr/bin/env python3
"""
Tests for configuration loading and structured error handling.
"""

import json

import pytest

from core.config import PipelineConfig, Tolerances
from core.error_handler import (
    EXIT_INCONCLUSIVE,
    EXIT_INVALID,
    BudgetExceeded,
    ConfigError,
    ErrorHandler,
    NonInvolutive,
    NotFound,
)


class TestPipelineConfig:
    """Test PipelineConfig sources and validation"""

    def test_defaults(self):
        config = PipelineConfig(threads=1)
        assert config.move_cap == 6
        assert config.c == 2
        assert config.tolerances == Tolerances()
        assert "threads" not in config.to_dict()

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("GLU_RESTARTS", "7")
        monkeypatch.setenv("GLU_THREADS", "2")
        config = PipelineConfig.from_env()
        assert config.restarts == 7
        assert config.threads == 2

    def test_environment_must_be_integer(self, monkeypatch):
        monkeypatch.setenv("GLU_SEED", "seven")
        with pytest.raises(ConfigError):
            PipelineConfig.from_env()

    def test_yaml(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GLU_THREADS", "1")
        path = tmp_path / "glu.yaml"
        path.write_text("restarts: 3\nmode: box\ntolerances:\n  solver: 1.0e-9\n", encoding="utf-8")
        config = PipelineConfig.from_yaml(str(path))
        assert config.restarts == 3
        assert config.mode == "box"
        assert config.tolerances.solver == pytest.approx(1e-9)
        assert config.tolerances.angle == Tolerances().angle

    def test_updated_ignores_none(self, small_config):
        assert small_config.updated(seed=None, restarts=None) == small_config

    @pytest.mark.parametrize("overrides", [
        {"restarts": 0},
        {"move_cap": -1},
        {"mode": "grid"},
        {"colour": "red"},
        {"tolerances": {"solver": 0.0}},
        {"tolerances": {"wobble": 1.0}},
    ])
    def test_rejected_overrides(self, small_config, overrides):
        with pytest.raises(ConfigError):
            small_config.updated(**overrides)


class TestErrorHandler:
    """Test error records and document checks"""

    def setup_method(self):
        self.handler = ErrorHandler()

    def test_error_codes(self):
        assert NotFound.code == EXIT_INCONCLUSIVE
        assert BudgetExceeded("over", budget=3).to_dict()["details"] == {"budget": 3}
        assert NonInvolutive.code == EXIT_INVALID

    def test_handle_error_and_public_view(self):
        info = self.handler.handle_error(NonInvolutive("faces disagree", tet=0, face=1), "validate")
        view = ErrorHandler.public_view(info)
        assert view == {
            "format": "err/1",
            "error": "NonInvolutive",
            "message": "faces disagree",
            "context": "validate",
            "details": {"face": 1, "tet": 0},
            "suggestion": self.handler.recovery_strategies["noninvolutive"],
        }
        json.dumps(view)

    def test_summary(self):
        self.handler.handle_error(NotFound("nothing"), "compare")
        self.handler.handle_error(ValueError("plain"), "cli")
        summary = self.handler.get_error_summary()
        assert summary["total_errors"] == 2
        assert summary["inconclusive"] == 1
        assert summary["error_types"] == {"NotFound": 1, "ValueError": 1}
        self.handler.clear_error_log()
        assert self.handler.get_error_summary() == {"total_errors": 0, "inconclusive": 0}

    def test_export(self, tmp_path):
        self.handler.handle_error(NotFound("nothing"), "compare")
        path = self.handler.export_error_log(str(tmp_path / "errors.json"))
        with open(path, encoding="utf-8") as f:
            assert json.load(f)[0]["error_type"] == "NotFound"

    def test_validate_gluing_document(self, double):
        assert self.handler.validate_gluing_document(double.to_dict())["valid"]
        missing = self.handler.validate_gluing_document({"format": "glu3/1"})
        assert not missing["valid"]
        broken = double.to_dict()
        broken["gluings"][0][0] = [1, [1, 0, 2, 3]]
        result = self.handler.validate_gluing_document(broken)
        assert not result["valid"]
        assert result["suggestions"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
