"""
Simplicial quotients: identify whole tetrahedra of a gluing with each other.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from .error_handler import (
    BadFormat,
    DegreeMismatch,
    FaceOvercrowding,
    GluError,
    InconsistentMaps,
    NotOrientable,
    SelfIdentification,
)
from .tricore import (
    IDENTITY,
    Perm4,
    Triangulation,
    is_closed_3_manifold,
    is_connected,
    is_orientable,
    iso_signature,
)

logger = logging.getLogger(__name__)

FORMAT = "quo/1"


@dataclass(frozen=True)
class QuotientSpec:
    """Identifications (src, dst, p): vertex x of src becomes vertex p[x] of dst."""

    identifications: Tuple[Tuple[int, int, Perm4], ...] = ()

    def partition(self, size: int) -> List[List[int]]:
        parent = list(range(size))

        def root(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for src, dst, _ in self.identifications:
            a, b = root(src), root(dst)
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups: Dict[int, List[int]] = {}
        for i in range(size):
            groups.setdefault(root(i), []).append(i)
        return [groups[r] for r in sorted(groups)]

    def to_dict(self) -> Dict[str, Any]:
        return {"format": FORMAT, "ids": [[s, d, list(p.images)] for s, d, p in self.identifications]}

    @classmethod
    def from_dict(cls, data: Any) -> "QuotientSpec":
        if not isinstance(data, dict) or data.get("format") != FORMAT or not isinstance(data.get("ids"), list):
            raise BadFormat(f"expected a {FORMAT} document")
        ids = []
        for entry in data["ids"]:
            if not isinstance(entry, list) or len(entry) != 3:
                raise BadFormat("identifications are [src, dst, [p0, p1, p2, p3]]", entry=entry)
            src, dst, images = entry
            ids.append((int(src), int(dst), Perm4(tuple(images))))
        return cls(tuple(ids))


@dataclass(frozen=True)
class QuotientResult:
    quotient: Triangulation
    projection: Tuple[Tuple[int, Perm4], ...]
    degree: Optional[int]
    classes: Tuple[Tuple[int, ...], ...]
    spec: QuotientSpec = field(default_factory=QuotientSpec)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classes": [list(c) for c in self.classes],
            "degree": self.degree,
            "projection": [[c, list(p.images)] for c, p in self.projection],
            "quotient": self.quotient.to_dict(),
            "signature": iso_signature(self.quotient).canonical_string,
            "spec": self.spec.to_dict(),
        }


def _close(t: Triangulation, spec: QuotientSpec) -> List[Perm4]:
    """Map phi[i]: tetrahedron i -> the lowest tetrahedron of its class."""
    for src, dst, _ in spec.identifications:
        if not (0 <= src < t.size and 0 <= dst < t.size):
            raise InconsistentMaps(f"identification {src} -> {dst} names a missing tetrahedron")
    phi: List[Optional[Perm4]] = [None] * t.size
    for members in spec.partition(t.size):
        rep = members[0]
        phi[rep] = IDENTITY
        edges = [(s, d, p) for s, d, p in spec.identifications if s in members]
        changed = True
        while changed:
            changed = False
            for s, d, p in edges:
                # phi[s] = phi[d] * p
                if phi[d] is not None and phi[s] is None:
                    phi[s] = phi[d] * p
                    changed = True
                elif phi[s] is not None and phi[d] is None:
                    phi[d] = phi[s] * p.inverse()
                    changed = True
        for s, d, p in edges:
            if phi[s] != phi[d] * p:
                raise InconsistentMaps(
                    f"identifications force a nontrivial self-map of tetrahedron {s}",
                    src=s, dst=d,
                )
    return phi  # type: ignore[return-value]


def apply_identifications(t: Triangulation, q: QuotientSpec) -> QuotientResult:
    """Close the identification relation and build the quotient gluing.

    Raises:
        InconsistentMaps: the maps around a cycle compose to a nontrivial self-map
        SelfIdentification: a face of the quotient would be glued to itself
        FaceOvercrowding: three or more tetrahedron faces meet at one face
    """
    phi = _close(t, q)
    classes = q.partition(t.size)
    class_of = {i: n for n, members in enumerate(classes) for i in members}

    rows: List[List[Tuple[int, Perm4]]] = []
    for n, members in enumerate(classes):
        row = []
        for k in range(4):
            options = set()
            for m in members:
                f = phi[m].inverse()[k]
                j, p = t.gluings[m][f]
                options.add((class_of[j], phi[j][p[f]], phi[j] * p * phi[m].inverse()))
            if len({(c, face) for c, face, _ in options}) > 1:
                raise FaceOvercrowding(f"face {k} of class {n} meets {len(options)} faces", cls=n, face=k)
            if len(options) > 1:
                raise InconsistentMaps(f"face {k} of class {n} is glued by conflicting maps", cls=n, face=k)
            ((c, face, perm),) = options
            if c == n and face == k:
                raise SelfIdentification(f"face {k} of class {n} becomes glued to itself", cls=n, face=k)
            row.append((c, perm))
        rows.append(row)

    try:
        quotient = Triangulation.from_records([[(j, p.images) for j, p in row] for row in rows])
    except GluError as e:
        raise FaceOvercrowding(f"quotient does not validate: {e}")

    projection = tuple((class_of[i], phi[i]) for i in range(t.size))
    result = QuotientResult(quotient, projection, None, tuple(tuple(c) for c in classes), q)
    orientation = is_orientable(t)
    if orientation:
        result = QuotientResult(quotient, projection, quotient_degree(result, orientation.assignment),
                                result.classes, q)
    return result


def quotient_degree(r: QuotientResult, orientation: Optional[Sequence[int]]) -> int:
    """Signed count of tetrahedra over one class, checked to agree on every class."""
    if orientation is None:
        raise NotOrientable("degree needs an orientation of the source")
    degrees = set()
    for members in r.classes:
        rep = members[0]
        degrees.add(sum(orientation[m] * orientation[rep] * r.projection[m][1].sign for m in members))
    if len(degrees) != 1:
        raise DegreeMismatch(f"classes disagree on the degree: {sorted(degrees)}", degrees=sorted(degrees))
    return degrees.pop()


def candidate_count(t: Triangulation, oriented: bool = True) -> int:
    """Upper bound on candidates: (1 + maps per pair) ** C(t, 2)."""
    return (1 + (12 if oriented else 24)) ** math.comb(t.size, 2)


class QuotientStream:
    """Budgeted, deterministic stream of valid quotients.

    Iterate to receive QuotientResults; afterwards ``complete`` says whether
    every candidate was scanned and ``scanned`` how many were. ``rejected``
    counts the dropped candidates by error class name, with ``not-a-manifold``
    and ``degree`` for the two filters. An incomplete
    stream is never evidence that a quotient does not exist.
    """

    def __init__(self, t: Triangulation, oriented: bool = True, degree_one: bool = False,
                 manifold: bool = True, budget: int = 10000, threads: int = 1, chunk: int = 64):
        self.t = t
        self.oriented = oriented
        self.degree_one = degree_one
        self.manifold = manifold
        self.budget = budget
        self.threads = max(1, threads)
        self.chunk = chunk
        self.scanned = 0
        self.complete = False
        self.emitted = 0
        # dropped candidates per reason
        self.rejected: Dict[str, int] = {}
        self._orientation = is_orientable(t)
        if oriented and not self._orientation:
            raise NotOrientable("oriented enumeration needs an orientable gluing")

    def _maps(self, a: int, b: int) -> List[Optional[Perm4]]:
        if not self.oriented:
            return [None] + list(Perm4.all())
        s = self._orientation.assignment
        return [None] + [p for p in Perm4.all() if s[a] * s[b] * p.sign == 1]

    def _candidates(self) -> Iterator[QuotientSpec]:
        pairs = list(itertools.combinations(range(self.t.size), 2))
        options = [self._maps(a, b) for a, b in pairs]
        for choice in itertools.product(*options):
            yield QuotientSpec(tuple((a, b, p) for (a, b), p in zip(pairs, choice) if p is not None))

    def _check(self, spec: QuotientSpec) -> Tuple[Optional[QuotientResult], Optional[str]]:
        """The quotient of spec, or None with the reason it was dropped."""
        try:
            result = apply_identifications(self.t, spec)
        except DegreeMismatch as e:
            logger.debug(f"dropping {spec.identifications}: {e}")
            return None, type(e).__name__
        except GluError as e:
            return None, type(e).__name__
        if self.manifold and not (is_connected(result.quotient) and is_closed_3_manifold(result.quotient)):
            return None, "not-a-manifold"
        if self.degree_one and result.degree != 1:
            return None, "degree"
        return result, None

    def __iter__(self) -> Iterator[QuotientResult]:
        seen = set()
        candidates = self._candidates()
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            while True:
                room = self.budget - self.scanned
                batch = list(itertools.islice(candidates, min(self.chunk, room)))
                if not batch:
                    self.complete = room > 0 or next(candidates, None) is None
                    break
                self.scanned += len(batch)
                # map keeps candidate order, so emission is deterministic
                for result, reason in pool.map(self._check, batch):
                    if result is None:
                        self.rejected[reason] = self.rejected.get(reason, 0) + 1
                        continue
                    sig = iso_signature(result.quotient).canonical_string
                    if sig in seen:
                        continue
                    seen.add(sig)
                    self.emitted += 1
                    yield result
        level = logging.INFO if self.complete else logging.WARNING
        logger.log(level, f"quotient scan: {self.scanned} candidates, {self.emitted} quotients, "
                          f"complete={self.complete}, rejected {self.rejected}")


def enumerate_quotients(t: Triangulation, oriented: bool = True, degree_one: bool = False,
                        manifold: bool = True, budget: int = 10000, threads: int = 1) -> QuotientStream:
    return QuotientStream(t, oriented, degree_one, manifold, budget, threads)
