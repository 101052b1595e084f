#!/usr/bin/env python3
"""
Tests for Pachner moves, sessions, sequences and the bounded search.
"""

import pytest

from core.census import (
    boundary_of_4_simplex,
    double_of_tetrahedron,
    lens_space,
    one_tetrahedron_gluings,
    scramble,
)
from core.error_handler import IllegalMove, NotFound
from core.pachner import (
    KIND_ORDER,
    Move,
    MoveSequence,
    Session,
    apply_elementary,
    apply_move,
    bounded_pachner_search,
    cone_shelling,
    elementary_length,
    enumerate_moves,
    invert_sequence,
    replay,
    shelling_order,
    two_dim_move,
    vertex_add_move,
)
from core.tricore import is_closed_3_manifold, is_orientable, iso_signature, skeleton


SIZE_CHANGE = {"1-4": 3, "2-3": 1, "3-2": -1, "4-1": -3}


def _soundness_cases():
    """Census gluings with at most five tetrahedra, plus seeded scrambles of them."""
    base = {
        "double": double_of_tetrahedron(),
        "s4": boundary_of_4_simplex(),
        "lens31": lens_space(3, 1),
        "lens41": lens_space(4, 1),
        "lens52": lens_space(5, 2),
    }
    for n, t in enumerate(one_tetrahedron_gluings()):
        if is_closed_3_manifold(t):
            base[f"one{n}"] = t
    cases = dict(base)
    for name, t in base.items():
        for seed in range(4):
            scrambled, _ = scramble(t, 2, seed=seed)
            if scrambled.size <= 5:
                cases[f"{name}-scrambled{seed}"] = scrambled
    return cases


SOUNDNESS_CASES = _soundness_cases()


class TestElementaryMoves:
    """Test single elementary moves"""

    def test_one_four_on_double_gives_boundary_of_4_simplex(self, double, s4):
        result = apply_move(double, Move.make("1-4", tet=0))
        assert result.size == 5
        assert iso_signature(result) == iso_signature(s4)

    def test_inverse_move_undoes(self, double):
        result, trace = apply_elementary(double, Move.make("1-4", tet=1))
        assert trace.inverse.kind == "4-1"
        back, _ = apply_elementary(result, trace.inverse)
        assert iso_signature(back) == iso_signature(double)

    def test_four_one_on_boundary_of_4_simplex(self, s4, double):
        four_one = [m for m in enumerate_moves(s4) if m.kind == "4-1"]
        assert len(four_one) == 5
        assert iso_signature(apply_move(s4, four_one[0])) == iso_signature(double)

    def test_enumeration_order(self, s4):
        moves = enumerate_moves(s4)
        keys = [KIND_ORDER[m.kind] for m in moves]
        assert keys == sorted(keys)
        assert sum(1 for m in moves if m.kind == "1-4") == 5
        assert sum(1 for m in moves if m.kind == "2-3") == 10

    def test_bad_sites(self, double):
        with pytest.raises(IllegalMove):
            apply_move(double, Move.make("1-4", tet=9))
        with pytest.raises(IllegalMove):
            apply_move(double, Move.make("4-1", tet=0, vertex=0))
        with pytest.raises(IllegalMove):
            Move.make("5-0", tet=0)

    def test_move_document(self):
        move = Move.make("3-2", tet=2, edge=(0, 3))
        assert Move.from_dict(move.to_dict()) == move


class TestSoundness:
    """Every applicable elementary move keeps a closed 3-manifold and can be undone"""

    @pytest.mark.parametrize("name", ["double", "s4", "lens31"])
    def test_moves_are_sound(self, name, request):
        t = request.getfixturevalue(name)
        applied = 0
        for move in enumerate_moves(t):
            try:
                result, trace = apply_elementary(t, move)
            except IllegalMove:
                continue
            applied += 1
            assert is_closed_3_manifold(result)
            assert skeleton(result).euler_characteristic == 0
            back, _ = apply_elementary(result, trace.inverse)
            assert iso_signature(back) == iso_signature(t)
        assert applied > 0

    @pytest.mark.parametrize("name", sorted(SOUNDNESS_CASES))
    def test_small_gluings_are_sound(self, name):
        t = SOUNDNESS_CASES[name]
        orientable = bool(is_orientable(t))
        applied = 0
        for move in enumerate_moves(t):
            try:
                result, trace = apply_elementary(t, move)
            except IllegalMove:
                continue
            applied += 1
            assert result.size - t.size == SIZE_CHANGE[move.kind]
            assert is_closed_3_manifold(result)
            assert bool(is_orientable(result)) == orientable
            back, _ = apply_elementary(result, trace.inverse)
            assert iso_signature(back) == iso_signature(t)
        assert applied > 0


class TestCompositeMoves:
    """Test composite moves expanded through a session"""

    def test_vertex_add_on_degree_two_edge(self, double):
        result = vertex_add_move(double, 0, (0, 1))
        assert result.size == 4
        assert is_closed_3_manifold(result)

    def test_vertex_add_gives_star_names_back(self, double):
        session = Session(double)
        session.record(Move.make("VERTEX-ADD", tet=0, edge=(0, 1)), "x")
        assert session.t.size == 4
        expected = {frozenset({("t", i, u), "x", ("t", i, 2), ("t", i, 3)}) for i in range(2) for u in range(2)}
        assert {frozenset(row) for row in session.names} == expected

    def test_vertex_add_names_the_split_per_star_tetrahedron(self, double):
        session = Session(double)
        session.split_name = lambda x, u, v: (x, u[1])
        session.record(Move.make("VERTEX-ADD", tet=0, edge=(0, 1)), "x")
        for row in session.names:
            owners = {n[1] for n in row if n[0] == "t"}
            assert len(owners) == 1
            assert ("x", owners.pop()) in row

    def test_suspended_one_three(self, s4):
        move = Move.make("2D-(1-3)", tet=0, face=0)
        result = apply_move(s4, move)
        assert result.size == 9
        assert elementary_length(s4, MoveSequence(iso_signature(s4), (move,), iso_signature(result))) == 2

    def test_two_dim_move_matches_composite(self, s4):
        result = two_dim_move(s4, {"tet": 0, "face": 0}, "1-3")
        assert result == apply_move(s4, Move.make("2D-(1-3)", tet=0, face=0))

    def test_shelling_order_of_a_two_tetrahedron_ball(self):
        order = shelling_order([{0, 1, 2, 3}, {1, 2, 3, 4}])
        assert sorted(order) == [0, 1]

    def test_cone_shelling_of_two_triangles(self):
        ball = [{0, 1, 2}, {1, 2, 3}]
        moves = cone_shelling(ball, shelling_order(ball), "c")
        assert [m.kind for m in moves] == ["1-3", "2-2"]
        assert set(moves[1].removed) == {frozenset({1, 2, 3}), frozenset({1, 2, "c"})}
        assert set(moves[1].added) == {frozenset({1, 3, "c"}), frozenset({2, 3, "c"})}
        assert moves[1].inverse().kind == "2-2"


class TestSequences:
    """Test replaying and inverting move sequences"""

    def setup_method(self):
        self.moves = (Move.make("1-4", tet=0), Move.make("2-3", tet=0, face=3))

    def test_replay_checks_the_start(self, double, lens31):
        result = apply_move(apply_move(double, self.moves[0]), self.moves[1])
        sequence = MoveSequence(iso_signature(double), self.moves, iso_signature(result))
        assert replay(double, sequence) == result
        with pytest.raises(IllegalMove):
            replay(lens31, sequence)

    def test_invert_sequence_returns_home(self, double):
        result = apply_move(double, self.moves[0])
        sequence = MoveSequence(iso_signature(double), self.moves[:1], iso_signature(result))
        back = invert_sequence(double, sequence)
        assert back.initial == sequence.final
        assert iso_signature(replay(result, back)) == iso_signature(double)

    def test_document_round_trip(self, double):
        result = apply_move(double, self.moves[0])
        sequence = MoveSequence(iso_signature(double), self.moves[:1], iso_signature(result))
        assert MoveSequence.from_dict(sequence.to_dict()) == sequence


class TestBoundedSearch:
    """Test the bidirectional witness search"""

    def test_same_signature_needs_no_moves(self, double):
        assert len(bounded_pachner_search(double, double, 3)) == 0

    def test_finds_single_move(self, double, s4):
        witness = bounded_pachner_search(double, s4, 2)
        assert len(witness) == 1
        assert iso_signature(replay(double, witness)) == iso_signature(s4)

    def test_finds_two_moves_from_both_ends(self, s4):
        mid = apply_move(s4, Move.make("1-4", tet=0))
        far = apply_move(mid, Move.make("1-4", tet=0))
        witness = bounded_pachner_search(s4, far, 2)
        assert len(witness) == 2
        assert iso_signature(replay(s4, witness)) == iso_signature(far)

    def test_not_found_within_budget(self, double, lens31):
        with pytest.raises(NotFound):
            bounded_pachner_search(double, lens31, 1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
