#!/usr/bin/env python3
"""
Tests for move sequences between a triangulation and its subdivisions.
"""

import pytest

from core.census import one_tetrahedron_gluings
from core.error_handler import NotASubdivision
from core.pachner import elementary_length, replay
from core.subdivision import first_coned_subdivision, length_bound, subdivision_move_sequence
from core.tricore import (
    Subdivision,
    coned_subdivision,
    iso_signature,
    subdivide_barycentric,
    subdivide_coned,
)


class TestConedSubdivision:
    """Test the first coned subdivision by moves"""

    def test_size_and_signature(self, double):
        result, sequence = first_coned_subdivision(double)
        assert result.size == 24
        assert iso_signature(result) == iso_signature(coned_subdivision(double))
        assert sequence.final == iso_signature(result)

    def test_five_moves_per_tetrahedron(self, double):
        _, sequence = first_coned_subdivision(double)
        # two 1-4 moves and one suspended 1-3 per triangle class
        assert len(sequence) == 6
        assert elementary_length(double, sequence) == 10

    def test_length_bound(self):
        assert length_bound(2, 24) == 48 * 2 * 24 + 9 * 24 + 9 * 2
        assert length_bound(1, 1) == 66


class TestSubdivisionSequence:
    """Test witnesses between a triangulation and a subdivision"""

    def test_trivial_subdivision_needs_no_moves(self, double):
        sequence = subdivision_move_sequence(double, Subdivision.trivial(double))
        assert len(sequence) == 0
        assert sequence.initial == sequence.final

    def test_coned_subdivision_replays(self, double):
        sub = subdivide_coned(double)
        sequence = subdivision_move_sequence(double, sub)
        result = replay(double, sequence)
        assert iso_signature(result) == iso_signature(sub.triangulation)
        assert elementary_length(double, sequence) <= length_bound(double.size, sub.triangulation.size)

    def test_one_vertex_lens_space(self, lens31):
        # every corner of every tetrahedron is the same vertex
        sub = subdivide_coned(lens31)
        sequence = subdivision_move_sequence(lens31, sub)
        assert sequence.final == iso_signature(sub.triangulation)
        assert iso_signature(replay(lens31, sequence)) == iso_signature(sub.triangulation)
        # three 1-4 moves and one suspended 1-3 per triangle class
        assert elementary_length(lens31, sequence) == 3 + 2 * 6

    def test_barycentric_subdivision_of_the_double(self, double):
        sub = subdivide_barycentric(double)
        sequence = subdivision_move_sequence(double, sub)
        assert iso_signature(replay(double, sequence)) == iso_signature(sub.triangulation)
        # coned subdivision (10 moves), then six edges of degree four split at their midpoints
        assert elementary_length(double, sequence) == 34
        assert length_bound(double.size, sub.triangulation.size) == 5058

    @pytest.mark.parametrize("name", ["double", "lens31"])
    @pytest.mark.parametrize("subdivide", [subdivide_coned, subdivide_barycentric])
    def test_length_within_bound(self, name, subdivide, request):
        t = request.getfixturevalue(name)
        sub = subdivide(t)
        sequence = subdivision_move_sequence(t, sub, allow_barycentric_fallback=False)
        assert iso_signature(replay(t, sequence)) == iso_signature(sub.triangulation)
        assert elementary_length(t, sequence) <= length_bound(t.size, sub.triangulation.size)

    def test_rejects_face_glued_to_its_own_tetrahedron(self):
        t = one_tetrahedron_gluings()[0]
        with pytest.raises(NotASubdivision, match="its own tetrahedron"):
            subdivision_move_sequence(t, Subdivision.trivial(t))

    def test_rejects_missing_carriers(self, double):
        sub = subdivide_coned(double)
        broken = Subdivision(sub.triangulation, sub.carriers[:1], sub.roles)
        with pytest.raises(NotASubdivision):
            subdivision_move_sequence(double, broken)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
