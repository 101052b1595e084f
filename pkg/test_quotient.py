#!/usr/bin/env python3
"""
Tests for simplicial quotients of gluings.
"""

import itertools
import logging

import pytest

from core.census import lens_space
from core.error_handler import BadFormat, DegreeMismatch, GluError, InconsistentMaps, NotOrientable
from core.quotient import (
    QuotientSpec,
    apply_identifications,
    candidate_count,
    enumerate_quotients,
    quotient_degree,
)
from core.tricore import (
    IDENTITY,
    Perm4,
    Triangulation,
    is_closed_3_manifold,
    is_connected,
    is_orientable,
    iso_signature,
)


class TestApplyIdentifications:
    """Test building a quotient from explicit identifications"""

    def test_empty_spec_is_identity(self, double):
        result = apply_identifications(double, QuotientSpec())
        assert result.quotient == double
        assert result.degree == 1
        assert result.classes == ((0,), (1,))

    def test_lens_space_folds_to_smaller_lens(self):
        source = lens_space(4, 1)
        spec = QuotientSpec(((0, 2, IDENTITY), (1, 3, IDENTITY)))
        result = apply_identifications(source, spec)
        assert result.quotient.size == 2
        assert result.degree == 2
        assert iso_signature(result.quotient) == iso_signature(lens_space(2, 1))

    def test_cycle_with_nontrivial_self_map(self, double):
        p = Perm4((1, 2, 0, 3))
        with pytest.raises(InconsistentMaps):
            apply_identifications(double, QuotientSpec(((0, 1, p), (1, 0, p))))

    def test_missing_tetrahedron(self, double):
        with pytest.raises(InconsistentMaps):
            apply_identifications(double, QuotientSpec(((0, 5, IDENTITY),)))

    def test_degree_needs_orientation(self, double):
        result = apply_identifications(double, QuotientSpec())
        with pytest.raises(NotOrientable):
            quotient_degree(result, None)


class TestQuotientSpec:
    """Test the quo/1 document"""

    def test_partition(self):
        spec = QuotientSpec(((2, 0, IDENTITY), (3, 1, IDENTITY)))
        assert spec.partition(4) == [[0, 2], [1, 3]]

    def test_document(self):
        spec = QuotientSpec(((0, 2, Perm4((1, 0, 3, 2))),))
        assert QuotientSpec.from_dict(spec.to_dict()) == spec

    def test_bad_document(self):
        with pytest.raises(BadFormat):
            QuotientSpec.from_dict({"format": "quo/1"})
        with pytest.raises(BadFormat):
            QuotientSpec.from_dict({"format": "quo/1", "ids": [[0, 1]]})


class TestEnumeration:
    """Test the budgeted quotient stream"""

    def test_candidate_counts(self, double):
        assert candidate_count(double) == 13
        assert candidate_count(double, oriented=False) == 25

    def test_double_has_only_itself(self, double):
        stream = enumerate_quotients(double)
        results = list(stream)
        assert len(results) == 1
        assert results[0].degree == 1
        assert stream.scanned == 13
        assert stream.complete

    def test_unoriented_scan_is_complete(self, double):
        stream = enumerate_quotients(double, oriented=False, manifold=False)
        list(stream)
        assert stream.scanned == 25
        assert stream.complete

    def test_budget_marks_incomplete(self, double):
        stream = enumerate_quotients(double, budget=5)
        list(stream)
        assert stream.scanned == 5
        assert not stream.complete

    def test_threads_keep_order(self, double):
        one = [r.spec for r in enumerate_quotients(double, oriented=False, manifold=False)]
        many = [r.spec for r in enumerate_quotients(double, oriented=False, manifold=False, threads=4)]
        assert one == many


def _set_partitions(n):
    """Restricted growth strings: labels[i] <= 1 + max(labels[:i])."""
    if n == 0:
        yield ()
        return
    for head in _set_partitions(n - 1):
        for label in range(max(head, default=-1) + 2):
            yield head + (label,)


def _direct_quotients(t, oriented):
    """Signatures of manifold quotients, found by trying every vertex map onto a class representative."""
    signs = is_orientable(t).assignment
    found = set()
    for labels in _set_partitions(t.size):
        reps = {}
        for i, label in enumerate(labels):
            reps.setdefault(label, i)
        free = [i for i in range(t.size) if reps[labels[i]] != i]
        for choice in itertools.product(Perm4.all(), repeat=len(free)):
            phi = dict(zip(free, choice))
            phi.update({i: IDENTITY for i in reps.values()})
            if oriented and any(signs[i] * signs[reps[labels[i]]] * phi[i].sign != 1 for i in free):
                continue
            if signs is not None:
                degrees = {label: 0 for label in reps}
                for i in range(t.size):
                    degrees[labels[i]] += signs[i] * signs[reps[labels[i]]] * phi[i].sign
                if len(set(degrees.values())) > 1:
                    continue
            faces = {}
            for i in range(t.size):
                for f in range(4):
                    j, g = t.gluings[i][f]
                    faces.setdefault((labels[i], phi[i][f]), set()).add((labels[j], phi[j] * g * phi[i].inverse()))
            if any(len(targets) != 1 for targets in faces.values()):
                continue
            rows = [[None] * 4 for _ in reps]
            for (c, k), ((d, p),) in faces.items():
                rows[c][k] = (d, p.images)
            try:
                q = Triangulation.from_records(rows)
            except GluError:
                continue
            if is_connected(q) and is_closed_3_manifold(q):
                found.add(iso_signature(q).canonical_string)
    return found


class TestEnumerationOracle:
    """The stream finds exactly the quotients a direct search over vertex maps finds"""

    @pytest.mark.parametrize("name,oriented", [("double", True), ("double", False), ("lens31", True)])
    def test_matches_direct_search(self, name, oriented, request):
        t = request.getfixturevalue(name)
        stream = enumerate_quotients(t, oriented=oriented, budget=candidate_count(t, oriented))
        streamed = {iso_signature(r.quotient).canonical_string for r in stream}
        assert stream.complete
        assert streamed == _direct_quotients(t, oriented)

    def test_lens_space_quotients_include_itself(self, lens31):
        assert iso_signature(lens31).canonical_string in _direct_quotients(lens31, True)

    def test_counts_degree_mismatches(self, double, monkeypatch, caplog):
        def mismatched(t, spec):
            raise DegreeMismatch("classes disagree on the degree: [0, 2]", degrees=[0, 2])

        monkeypatch.setattr("core.quotient.apply_identifications", mismatched)
        stream = enumerate_quotients(double)
        with caplog.at_level(logging.DEBUG, logger="core.quotient"):
            assert list(stream) == []
        assert stream.rejected == {"DegreeMismatch": 13}
        assert any("classes disagree" in r.getMessage() for r in caplog.records)

    def test_counts_filtered_candidates(self, double):
        stream = enumerate_quotients(double)
        assert len(list(stream)) == 1
        assert sum(stream.rejected.values()) == stream.scanned - 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
