#!/usr/bin/env python3
"""
Tests for the polynomial system of a gluing.
"""

import math

import numpy as np
import pytest
import sympy as sp

from core.error_handler import ConfigError
from core.polysystem import (
    FORMAT,
    BoxChoice,
    Constraint,
    assignment,
    box_bounds,
    box_count,
    build_poly_system,
    evaluate,
    frozen_constant,
)

TET = np.array([
    [0.0, 0.0, 1.0],
    [0.2, 0.1, 2.5],
    [1.1, -0.3, 1.4],
    [-0.4, 0.9, 1.2],
])


@pytest.fixture(scope="module")
def direct_system():
    from core.census import double_of_tetrahedron
    return build_poly_system(double_of_tetrahedron())


class TestConstraint:
    """Test single constraints"""

    def test_degree_and_monomials(self):
        x, y = sp.symbols("x y", real=True)
        c = Constraint("edge", "edge_eq", "eq", sp.expand(2 * x ** 2 * y - 1))
        assert c.degree == 3
        assert c.monomials() == [["-1", []], ["2", [["x", 2], ["y", 1]]]]
        assert c.function({"x": 1.0, "y": 2.0}) == pytest.approx(3.0)


class TestDirectSystem:
    """Test the direct-mode system of the double"""

    def test_rejects_unknown_mode(self, double):
        with pytest.raises(ConfigError):
            build_poly_system(double, mode="grid")

    def test_one_channel_per_edge_class(self, direct_system):
        assert len(direct_system.channels) == 6
        assert not [c for c in direct_system.constraints if c.family == "angle_product"]
        assert direct_system.boxes is None

    def test_stats_within_frozen_bound(self, direct_system):
        stats = direct_system.stats
        assert stats.within(2)
        assert stats.kappa == len(direct_system.constraints)
        assert stats.n == len(direct_system.variables)
        assert frozen_constant() == 600

    def test_document(self, direct_system):
        doc = direct_system.to_dict()
        assert doc["format"] == FORMAT
        assert set(doc["stats"]) == {"kappa", "N", "d", "M"}
        assert len(doc["cons"]) == doc["stats"]["kappa"]

    def test_model_transfer_holds_for_any_vertices(self, direct_system):
        values = assignment(direct_system, np.array([TET, TET]))
        for c, value in evaluate(direct_system, values):
            if c.rel == "eq" and (c.tag == "model-transfer" or c.family in ("cos", "sin")):
                assert abs(value) < 1e-8, (c.family, value)

    def test_inequalities_hold_for_any_vertices(self, direct_system):
        values = assignment(direct_system, np.array([TET, TET]))
        for c, value in evaluate(direct_system, values):
            if c.tag == "nondegeneracy":
                assert value > 0


class TestBoxes:
    """Test box mode and box choices"""

    def test_box_arithmetic(self):
        assert box_count(2) == 64
        assert box_bounds(2, 0) == (sp.Integer(-1), sp.Rational(-3, 4))
        lo, hi = box_bounds(3, 11)
        assert hi == 1

    def test_default_choice(self, double):
        boxes = BoxChoice.default(double)
        # every edge of the double has degree 2, so each angle starts at pi
        assert boxes.cell(0, 0) == (0, 4)

    def test_around(self):
        boxes = BoxChoice.around(1, {(0, 0): math.pi / 2})
        assert boxes.cell(0, 0) == (2, 3)

    def test_box_mode_constraints(self, double):
        system = build_poly_system(double, mode="box")
        assert len(system.by_tag("box")) == 24 * double.size
        assert len([c for c in system.constraints if c.family == "angle_product"]) == 2 * 6
        assert not system.channels


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
