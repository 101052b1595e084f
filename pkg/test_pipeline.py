#!/usr/bin/env python3
"""
Tests for the pipeline stages and their reports.
"""

import json
import math

import pytest

from core.error_handler import ConfigError
from core.pachner import Move, MoveSequence, apply_move
from core.pipeline import COMPLETED, INCONCLUSIVE, REPORT_FORMAT, CompareReport, Pipeline, kalelkar_phanse_bound
from core.tricore import iso_signature


class TestBound:
    """Test the reference Pachner bound"""

    def test_no_subdivision_needed(self):
        bound = kalelkar_phanse_bound(2, 2, 1.0, 1.0)
        assert bound.m == 0
        assert bound.f == 169869312
        assert bound.to_dict()["f"] == "169869312"

    def test_subdivision_depth(self):
        bound = kalelkar_phanse_bound(3, 5, 1.0, 0.5)
        assert bound.m == 4
        assert bound.f == 32 * 24 ** 16 * 3 * 5 * 8
        assert bound.cap(6) == 6

    def test_large_depth_stays_symbolic(self):
        bound = kalelkar_phanse_bound(2, 2, 3.5, 0.05)
        assert bound.m > 1000
        assert bound.exponent == 4 + 3 * bound.m
        assert bound.f is None
        assert bound.cap(6) == 6
        document = bound.to_dict()
        assert document["f"] is None
        assert document["f_coefficient"] == 32 * 2 * 2 * 4
        assert document["f_log10"] == pytest.approx(math.log10(512) + bound.exponent * math.log10(24), rel=1e-9)
        json.dumps(document)

    def test_long_edges_do_not_expand_f(self):
        bound = kalelkar_phanse_bound(5, 5, 20.0, 0.01)
        assert bound.m > 10 ** 16
        assert bound.f is None
        assert bound.log10_f > 10 ** 16

    def test_compare_report_with_symbolic_bound(self):
        bound = kalelkar_phanse_bound(2, 2, 3.5, 0.05)
        report = CompareReport("inconclusive", ("a", "b"), bound.cap(3), bound.m, bound, reason="cap").to_dict()
        assert report["bounds"]["m"] == bound.m
        assert report["bounds"]["f"] is None
        assert report["bounds"]["cap"] == 3
        json.dumps(report)

    @pytest.mark.parametrize("args", [(1, 1, 0.0, 1.0), (1, 1, 1.0, 0.0), (1, 1, math.inf, 1.0), (-1, 1, 1.0, 1.0),
                                      (1, 1, 400.0, 0.1)])
    def test_rejected_inputs(self, args):
        with pytest.raises(ConfigError):
            kalelkar_phanse_bound(*args)


class TestStages:
    """Test the single-stage reports"""

    @pytest.fixture(autouse=True)
    def _pipeline(self, small_config):
        self.pipeline = Pipeline(small_config)

    def test_validate(self, double):
        report = self.pipeline.validate(double)
        assert report["format"] == REPORT_FORMAT
        assert report["status"] == COMPLETED
        assert report["skeleton"] == {"V": 4, "E": 6, "F": 4, "T": 2, "chi": 0}
        assert report["connected"] and report["orientable"] and report["closed_manifold"]
        assert len(report["links"]) == 4

    def test_reports_are_reproducible(self, lens31):
        assert self.pipeline.validate(lens31) == self.pipeline.validate(lens31)

    def test_moves(self, double, s4):
        listed = self.pipeline.moves(double)
        assert listed["count"] == len(listed["moves"])
        move = Move.make("1-4", tet=0)
        result = apply_move(double, move)
        sequence = MoveSequence(iso_signature(double), (move,), iso_signature(result))
        applied = self.pipeline.moves(double, sequence)
        assert applied["applied"] == 1
        assert applied["signature"] == iso_signature(s4).canonical_string

    def test_subdivide(self, lens31):
        sequence, report = self.pipeline.subdivide(lens31, "barycentric")
        assert report["status"] == COMPLETED
        assert report["size"] == 72
        assert report["elementary"] == 17 * 3
        assert report["elementary"] <= report["bound"]
        assert report["signature"] == sequence.final.canonical_string

    def test_subdivide_rejects_unknown_kind(self, double):
        with pytest.raises(ConfigError):
            self.pipeline.subdivide(double, "stellar")

    def test_quotients(self, double):
        report = self.pipeline.quotients(double)
        assert report["status"] == COMPLETED
        assert report["candidates"] == 13
        assert report["scanned"] == 13
        assert len(report["quotients"]) == 1
        assert sum(report["rejected"].values()) == 12

    def test_quotient_budget(self, double):
        report = self.pipeline.quotients(double, budget=5)
        assert report["status"] == INCONCLUSIVE
        assert not report["complete"]

    def test_pi1(self, lens31, double):
        assert self.pipeline.pi1(lens31)["abelianization"] == [3]
        report = self.pipeline.pi1(double, words=True)
        assert report["status"] == COMPLETED
        assert len(report["face_pairing_words"]["pairings"]) == 3

    def test_geometrize_sphere_is_inconclusive(self, double):
        structure, report = self.pipeline.geometrize(double)
        assert structure is None
        assert report["status"] == INCONCLUSIVE
        assert set(report["stats"]) == {"kappa", "N", "d", "M"}
        assert "reason" in report


class TestCompare:
    """Test the bounded comparison"""

    @pytest.fixture(autouse=True)
    def _pipeline(self, small_config):
        self.pipeline = Pipeline(small_config)

    def test_same_gluing(self, double):
        result = self.pipeline.compare(double, double, geometry=False)
        assert result.verdict == "homeomorphic-witness"
        assert len(result.witness) == 0

    def test_one_move_apart(self, double, s4):
        result = self.pipeline.compare(double, s4, geometry=False)
        report = result.to_dict()
        assert report["status"] == COMPLETED
        assert len(report["witness"]["moves"]) == 1
        assert report["bounds"]["m"] is None
        assert report["bounds"]["cap"] == 2
        assert report["gates"] == {"a": None, "b": None}

    def test_different_spaces_stay_inconclusive(self, double, lens31):
        result = self.pipeline.compare(double, lens31, geometry=False)
        assert result.verdict == "inconclusive"
        assert result.status == INCONCLUSIVE
        assert result.witness is None
        assert result.reason


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
