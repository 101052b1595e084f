#!/usr/bin/env python3
"""
Tests for the built-in census of gluings.
"""

import math

import numpy as np
import pytest

from core.census import by_name, lens_space, scramble, seifert_weber
from core.error_handler import ConfigError
from core.hypgeom import dihedral_angle_values
from core.pachner import replay
from core.tricore import is_closed_3_manifold, is_orientable, iso_signature, skeleton


class TestCensus:
    """Test census constructors"""

    def test_lens_space_arguments(self):
        with pytest.raises(ConfigError):
            lens_space(1, 0)
        with pytest.raises(ConfigError):
            lens_space(4, 2)

    def test_lens_spaces_differ(self):
        assert iso_signature(lens_space(5, 1)) != iso_signature(lens_space(5, 2))

    def test_by_name(self, double):
        assert by_name("double") == double
        assert by_name("lens", 3, 1).size == 3
        with pytest.raises(ConfigError):
            by_name("lens", 3)
        with pytest.raises(ConfigError):
            by_name("poincare")

    def test_scramble_is_replayable(self, double):
        t, sequence = scramble(double, 3, seed=5)
        assert len(sequence) == 3
        assert iso_signature(replay(double, sequence)) == iso_signature(t)
        assert is_closed_3_manifold(t)

    def test_scramble_is_deterministic(self, double):
        a, _ = scramble(double, 4, seed=11)
        b, _ = scramble(double, 4, seed=11)
        assert a == b


@pytest.mark.slow
class TestSeifertWeber:
    """Test the coned dodecahedral triangulation"""

    def setup_method(self):
        self.t, self.coords = seifert_weber()

    def test_shape(self):
        assert self.t.size == 60
        assert self.coords.shape == (60, 4, 3)
        assert is_closed_3_manifold(self.t)
        assert is_orientable(self.t)

    def test_skeleton(self):
        report = skeleton(self.t)
        assert report.tetrahedra == 60
        assert report.euler_characteristic == 0

    def test_boundary_angle_is_two_fifths_pi(self):
        angles = dihedral_angle_values(self.coords[0])
        # edge (2, 3) is a dodecahedron edge, shared by the cones on its two faces
        assert np.all(np.array(angles) > 0)
        assert math.isclose(angles[5], math.pi / 5.0, abs_tol=1e-9)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
