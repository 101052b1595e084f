#!/usr/bin/env python3
"""
Tests for numerical hyperbolic structures, Poincare checks and developments.
"""

import math

import numpy as np
import pytest

from core.config import Tolerances
from core.error_handler import BadFormat, DevelopmentClash, NoSolutionFound
from core.hypgeom import Isometry, dihedral_angle_values, systole_estimate
from core.polysystem import BoxChoice, build_poly_system
from core.structure import (
    MIRROR,
    _check_det,
    HyperbolicStructure,
    angle_sum_at_edge,
    edge_length_bound_check,
    face_pairing_isometries,
    interior_tree,
    solve_structure,
    system_residual,
    verify_poincare_conditions,
)

TET = np.array([
    [0.0, 0.0, 1.0],
    [0.2, 0.1, 2.5],
    [1.1, -0.3, 1.4],
    [-0.4, 0.9, 1.2],
])


def _structure(t, vertices):
    return HyperbolicStructure(
        triangulation=t,
        vertices=np.asarray(vertices, dtype=float),
        residual=0.5,
        angle_defects=[0.1] * 6,
        orientation=(1, -1),
        face_pairings={(0, 1): Isometry.identity()},
        start=3,
    )


class TestStructureDocument:
    """Test the hst/1 document"""

    def test_round_trip(self, double):
        s = _structure(double, [TET, TET])
        back = HyperbolicStructure.from_dict(s.to_dict(), double)
        assert np.allclose(back.vertices, s.vertices)
        assert back.orientation == (1, -1)
        assert back.start == 3
        assert back.face_pairings[(0, 1)].close_to(Isometry.identity(), 1e-15)
        assert back.systole is None

    def test_rejects_wrong_format(self, double):
        with pytest.raises(BadFormat):
            HyperbolicStructure.from_dict({"format": "glu3/1"}, double)

    def test_rejects_wrong_shape(self, double):
        doc = _structure(double, [TET, TET]).to_dict()
        doc["vertices"] = doc["vertices"][:1]
        with pytest.raises(BadFormat):
            HyperbolicStructure.from_dict(doc, double)


class TestChecks:
    """Test the Poincare conditions and the edge-length gate"""

    def test_edge_length_gate_is_strict(self):
        assert edge_length_bound_check([0.1, 0.2], 2, 1.0)
        assert not edge_length_bound_check([0.1, 0.2], 2, 0.8)

    def test_gate_reads_structure_lengths(self, double):
        s = _structure(double, [TET, TET])
        assert not edge_length_bound_check(s, 2, 1.0)
        assert edge_length_bound_check(s, 1, 2.0 * max(s.lengths) + 1.0)

    def test_angle_sum_of_a_fan(self):
        theta = 2.0 * math.pi / 5.0
        wedge = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [1.0, 0.0, 1.5],
                          [math.cos(theta), math.sin(theta), 1.5]])
        assert angle_sum_at_edge([wedge] * 5, [(0, 1)] * 5) == pytest.approx(2.0 * math.pi)

    def test_unrelated_tetrahedra_fail(self, double):
        report = verify_poincare_conditions(_structure(double, [TET, TET]))
        assert not report.passed
        assert len(report.length_spreads) == 6
        assert report.to_dict()["passed"] is False

    def test_model_gap_is_reported(self, double):
        report = verify_poincare_conditions(_structure(double, [TET, TET]))
        assert 0.0 <= report.to_dict()["model_gap"] < Tolerances().model

    def test_determinant_drift_is_a_clash(self):
        _check_det(Isometry.identity(), Tolerances().det, tet=0)
        with pytest.raises(DevelopmentClash):
            _check_det(Isometry(np.diag([2.0, 1.0]).astype(complex)), Tolerances().det, tet=0, face=1)



class TestSolver:
    """Test the least-squares search"""

    def test_sphere_has_no_structure(self, double):
        with pytest.raises(NoSolutionFound):
            solve_structure(double, restarts=2, max_nfev=50)

    def test_sphere_has_no_structure_against_its_system(self, double):
        with pytest.raises(NoSolutionFound):
            solve_structure(build_poly_system(double, "box"), restarts=1, max_nfev=20)

    def test_system_residual_sees_orientation(self, double):
        system = build_poly_system(double)
        worst, strict = system_residual(system, np.array([TET, TET]))
        # the double glues its two tetrahedra with opposite orientations
        assert worst > 0
        assert strict < 0
        mirrored = [system_residual(system, np.array(pair))[1]
                    for pair in ([TET, TET * MIRROR], [TET * MIRROR, TET])]
        assert max(mirrored) > 0


@pytest.mark.slow
class TestSeifertWeberSystem:
    """Test acceptance against box-mode systems of the Seifert-Weber space"""

    @classmethod
    def setup_class(cls):
        from core.census import seifert_weber
        cls.t, cls.coords = seifert_weber()
        cls.angles = {(i, m): theta for i, tet in enumerate(cls.coords)
                      for m, theta in enumerate(dihedral_angle_values(tet))}

    def test_seed_inside_its_boxes_is_accepted(self):
        system = build_poly_system(self.t, "box", BoxChoice.around(self.t.size, self.angles))
        s = solve_structure(system, seeds=[self.coords], restarts=0)
        assert s.start == 0
        assert s.residual < Tolerances().solver

    def test_boxes_away_from_the_seed_reject_it(self):
        halved = BoxChoice.around(self.t.size, {key: theta / 2 for key, theta in self.angles.items()})
        system = build_poly_system(self.t, "box", halved)
        with pytest.raises(NoSolutionFound):
            solve_structure(system, seeds=[self.coords], restarts=0, max_nfev=5)


@pytest.mark.slow
class TestSeifertWeberStructure:
    """Test the Seifert-Weber space from its regular dodecahedron"""

    def setup_method(self):
        from core.census import seifert_weber
        self.t, self.coords = seifert_weber()

    def test_seed_is_accepted(self):
        s = solve_structure(self.t, seeds=[self.coords], restarts=0)
        assert s.start == 0
        assert s.residual < Tolerances().solver
        assert verify_poincare_conditions(s).passed

    def test_face_pairings(self):
        s = solve_structure(self.t, seeds=[self.coords], restarts=0)
        tree = interior_tree(self.t, [(i, 0) for i in range(self.t.size)])
        development = face_pairing_isometries(s, tree=tree)
        assert len(development.pairings) == 61
        assert len(s.face_pairings) == 61
        assert systole_estimate(development.generators(), 1) > 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
