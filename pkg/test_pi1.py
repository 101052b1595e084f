#!/usr/bin/env python3
"""
Tests for presentations, face-pairing words and representation search.
"""

import math

import numpy as np
import pytest

from core.census import disjoint_union, lens_space
from core.error_handler import BadFormat, DisconnectedGraph, NotFound
from core.hypgeom import Isometry
from core.pi1 import (
    Presentation,
    abelian_order,
    abelianization,
    face_pairing_words,
    free_reduce,
    partial_barycentric_subdivision,
    presentation_from_triangulation,
    rep_surjection_search,
)


class TestPresentation:
    """Test presentations read off the 1-skeleton"""

    def test_free_reduce(self):
        assert free_reduce((1, -1, 2)) == (2,)
        assert free_reduce((1, 2, -2, -1)) == ()
        assert free_reduce((1, 2, 1)) == (1, 2, 1)

    def test_double_is_simply_connected(self, double):
        p = presentation_from_triangulation(double)
        assert len(p.generators) == 3
        assert len(p.relators) == 4
        assert abelianization(p) == ()
        assert abelian_order(p) == 1.0

    @pytest.mark.parametrize("p,q", [(3, 1), (5, 1), (5, 2), (7, 3)])
    def test_lens_space_homology(self, p, q):
        t = lens_space(p, q)
        presentation = presentation_from_triangulation(t)
        assert abelianization(presentation) == (p,)
        assert presentation.total_length <= 6 * t.size

    def test_free_group(self):
        p = Presentation((0, 1), ())
        assert abelianization(p) == (0, 0)
        assert abelian_order(p) == math.inf

    def test_disconnected(self, double):
        with pytest.raises(DisconnectedGraph):
            presentation_from_triangulation(disjoint_union(double, double))

    def test_document(self, lens31):
        p = presentation_from_triangulation(lens31)
        doc = p.to_dict()
        assert doc["lP"] == p.total_length
        back = Presentation.from_dict(doc)
        assert back.generators == p.generators
        assert back.relators == p.relators

    def test_bad_document(self):
        with pytest.raises(BadFormat):
            Presentation.from_dict({"format": "pi1/1", "gens": [0], "relators": [[2]]})
        with pytest.raises(BadFormat):
            Presentation.from_dict({"format": "pi1/1", "gens": [0]})


class TestPartialBarycentric:
    """Test the coned subdivision and its trees"""

    def test_double(self, double):
        pb = partial_barycentric_subdivision(double)
        assert pb.complex.size == 24
        assert sorted(kind for kind, _ in pb.points) == ["b"] * 2 + ["f"] * 4 + ["v"] * 4
        assert len(pb.edges) == 34
        assert len(pb.gamma) == len(pb.points) - 1
        assert set(pb.embedded) <= set(pb.gamma)
        assert len(pb.simplicial_generators()) == 34 - 9
        assert pb.points[pb.base][0] == "b"

    def test_gamma_avoids_vertex_edges(self, lens31):
        pb = partial_barycentric_subdivision(lens31)
        for n in pb.gamma:
            u, v = pb.edges[n]
            assert (pb.points[u][0], pb.points[v][0]) != ("v", "v")

    def test_disconnected(self, double):
        with pytest.raises(DisconnectedGraph):
            partial_barycentric_subdivision(disjoint_union(double, double))


class TestFacePairingWords:
    """Test rewriting simplicial generators in face pairings"""

    def test_double(self, double):
        result = face_pairing_words(double)
        assert len(result.generators) == 3
        assert result.bound == 8
        assert result.within_bound
        assert all(w.replay() for w in result.witnesses)

    def test_document(self, double):
        doc = face_pairing_words(double).to_dict()
        assert len(doc["pairings"]) == 3
        assert all(len(w["word"]) <= doc["bound"] for w in doc["words"])


class TestRepresentationSearch:
    """Test the SL(2, C) representation search"""

    def setup_method(self):
        self.a = Isometry.normalised(np.array([[2.0, 1.0 + 0.5j], [0.0, 0.5]]))

    def test_single_generator(self):
        source = Presentation((0,), ())
        rep = rep_surjection_search(source, [(1,)], [self.a], restarts=3)
        assert rep.matrices[0].close_to(self.a, 1e-6)
        assert rep.matching_residual < 1e-9

    def test_redundant_generator(self):
        source = Presentation((0, 1), ((1, -2),))
        rep = rep_surjection_search(source, [(1,), (1,)], [self.a], restarts=3)
        assert rep.matrices[0].close_to(rep.matrices[1], 1e-6)
        assert rep.relator_residual < 1e-9

    def test_impossible_relator(self):
        # a loxodromic element never squares to the identity
        source = Presentation((0,), ((1, 1),))
        with pytest.raises(NotFound):
            rep_surjection_search(source, [(1,)], [self.a], restarts=2)

    def test_image_count_must_match(self):
        with pytest.raises(BadFormat):
            rep_surjection_search(Presentation((0, 1), ()), [(1,)], [self.a])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
