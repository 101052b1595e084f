"""
Combinatorial model of 3-dimensional gluings.

Face k of a tetrahedron is the face opposite vertex k. A gluing record
``gluings[i][k] = (j, p)`` says face k of tetrahedron i is identified with
face ``p[k]`` of tetrahedron j, vertex label ``x`` of i going to ``p[x]`` of j.
"""

import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.utils import UnionFind

from .error_handler import (
    BadFormat,
    BadPermutation,
    DisconnectedGraph,
    NonInvolutive,
    SelfGluedFace,
    UnpairedFace,
)

logger = logging.getLogger(__name__)

FORMAT = "glu3/1"


@dataclass(frozen=True)
class Perm4:
    """A permutation of the vertex labels {0,1,2,3}."""

    images: Tuple[int, int, int, int]

    def __post_init__(self):
        images = tuple(self.images)
        if len(images) != 4 or sorted(images) != [0, 1, 2, 3] or not all(isinstance(x, int) for x in images):
            raise BadPermutation(f"not a permutation of 0..3: {list(self.images)}", images=list(self.images))
        object.__setattr__(self, "images", images)

    def __getitem__(self, x: int) -> int:
        return self.images[x]

    def __call__(self, x: int) -> int:
        return self.images[x]

    def __mul__(self, other: "Perm4") -> "Perm4":
        # (p * q)[x] = p[q[x]]
        return _PERMS[_COMPOSE[_INDEX[self.images]][_INDEX[other.images]]]

    def inverse(self) -> "Perm4":
        return _PERMS[_INVERSE[_INDEX[self.images]]]

    @property
    def index(self) -> int:
        """Position in lexicographic order."""
        return _INDEX[self.images]

    @property
    def sign(self) -> int:
        return _SIGN[_INDEX[self.images]]

    def is_even(self) -> bool:
        return self.sign == 1

    @classmethod
    def identity(cls) -> "Perm4":
        return _PERMS[0]

    @classmethod
    def all(cls) -> Tuple["Perm4", ...]:
        return _PERMS

    @classmethod
    def even(cls) -> Tuple["Perm4", ...]:
        return tuple(p for p in _PERMS if p.is_even())

    @classmethod
    def from_index(cls, index: int) -> "Perm4":
        return _PERMS[index]

    @classmethod
    def from_mapping(cls, mapping: Dict[int, int]) -> "Perm4":
        """Build from a partial map on three labels, completing the fourth."""
        mapping = dict(mapping)
        if len(mapping) == 3:
            (free,) = set(range(4)) - set(mapping)
            (image,) = set(range(4)) - set(mapping.values())
            mapping[free] = image
        return cls(tuple(mapping[x] for x in range(4)))

    def __repr__(self) -> str:
        return "Perm4(%s)" % "".join(str(x) for x in self.images)


def _perm_sign(images: Tuple[int, ...]) -> int:
    inversions = sum(1 for a in range(4) for b in range(a + 1, 4) if images[a] > images[b])
    return -1 if inversions % 2 else 1


_RAW = list(itertools.permutations(range(4)))
_INDEX = {images: n for n, images in enumerate(_RAW)}
_SIGN = [_perm_sign(images) for images in _RAW]
_COMPOSE = [[_INDEX[tuple(p[q[x]] for x in range(4))] for q in _RAW] for p in _RAW]
_INVERSE = [_INDEX[tuple(p.index(x) for x in range(4))] for p in _RAW]
_PERMS: Tuple[Perm4, ...] = tuple(object.__new__(Perm4) for _ in _RAW)
for _p, _images in zip(_PERMS, _RAW):
    object.__setattr__(_p, "images", _images)

IDENTITY = Perm4.identity()


@dataclass(frozen=True)
class FaceGluing:
    source: Tuple[int, int]
    target: Tuple[int, int]
    map: Perm4


@dataclass(frozen=True)
class Triangulation:
    """An immutable, validated closed gluing of tetrahedra."""

    gluings: Tuple[Tuple[Tuple[int, Perm4], ...], ...]

    @property
    def size(self) -> int:
        return len(self.gluings)

    def __len__(self) -> int:
        return len(self.gluings)

    def partner(self, tet: int, face: int) -> Tuple[int, int, Perm4]:
        """(neighbour tet, neighbour face, vertex map) across a face."""
        j, p = self.gluings[tet][face]
        return j, p[face], p

    def face_gluings(self) -> List[FaceGluing]:
        return [
            FaceGluing((i, k), (j, p[k]), p)
            for i, row in enumerate(self.gluings)
            for k, (j, p) in enumerate(row)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": FORMAT,
            "tetrahedra": self.size,
            "gluings": [[[j, list(p.images)] for j, p in row] for row in self.gluings],
        }

    def to_json(self) -> str:
        """Canonical text form: sorted keys, no whitespace."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_records(cls, rows: Iterable[Iterable[Tuple[int, Sequence[int]]]]) -> "Triangulation":
        """Validate rows of (target tet, images) pairs."""
        table = [[[j, list(p)] for j, p in row] for row in rows]
        return validate({"format": FORMAT, "tetrahedra": len(table), "gluings": table})


def validate(raw: Any) -> Triangulation:
    """Turn a glu3/1 document into a Triangulation or raise a structured error."""
    if isinstance(raw, Triangulation):
        raw = raw.to_dict()
    if not isinstance(raw, dict) or raw.get("format") != FORMAT:
        raise BadFormat(f"expected a {FORMAT} document", format=raw.get("format") if isinstance(raw, dict) else None)

    count = raw.get("tetrahedra")
    rows = raw.get("gluings")
    if not isinstance(count, int) or count < 0 or not isinstance(rows, list):
        raise BadFormat("'tetrahedra' must be a non-negative integer and 'gluings' a list")
    if len(rows) != count:
        raise UnpairedFace(f"expected {count} gluing rows, found {len(rows)}", expected=count, found=len(rows))

    table: List[List[Tuple[int, Perm4]]] = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 4:
            raise UnpairedFace(f"tetrahedron {i} must list exactly 4 face records", tet=i)
        parsed = []
        for k, record in enumerate(row):
            if not isinstance(record, (list, tuple)) or len(record) != 2:
                raise UnpairedFace(f"face {k} of tetrahedron {i} has no partner record", tet=i, face=k)
            j, images = record
            if not isinstance(j, int) or not 0 <= j < count:
                raise UnpairedFace(f"face {k} of tetrahedron {i} points at missing tetrahedron {j}",
                                   tet=i, face=k, target=j)
            if not isinstance(images, (list, tuple)):
                raise BadPermutation(f"face {k} of tetrahedron {i} has no permutation", tet=i, face=k)
            parsed.append((j, Perm4(tuple(images))))
        table.append(parsed)

    for i, row in enumerate(table):
        for k, (j, p) in enumerate(row):
            if j == i and p[k] == k:
                raise SelfGluedFace(f"face {k} of tetrahedron {i} is glued to itself", tet=i, face=k)
            back_tet, back = table[j][p[k]]
            if back_tet != i or back * p != IDENTITY:
                raise NonInvolutive(
                    f"face {k} of tetrahedron {i} and face {p[k]} of tetrahedron {j} disagree",
                    tet=i, face=k, target=j, target_face=p[k],
                )

    return Triangulation(tuple(tuple(row) for row in table))


# ---------------------------------------------------------------- skeleton

def _sorted_classes(uf: UnionFind, elements: Iterable[Any]) -> List[List[Any]]:
    groups: Dict[Any, List[Any]] = {}
    for e in elements:
        groups.setdefault(uf[e], []).append(e)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def vertex_classes(t: Triangulation) -> List[List[Tuple[int, int]]]:
    """Classes of corners (tet, vertex) under the gluing."""
    corners = [(i, v) for i in range(t.size) for v in range(4)]
    uf = UnionFind(corners)
    for i, row in enumerate(t.gluings):
        for k, (j, p) in enumerate(row):
            for v in range(4):
                if v != k:
                    uf.union((i, v), (j, p[v]))
    return _sorted_classes(uf, corners)


def _edge(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


TET_EDGES: Tuple[Tuple[int, int], ...] = tuple(itertools.combinations(range(4), 2))


def edge_classes(t: Triangulation) -> List[List[Tuple[int, Tuple[int, int]]]]:
    """Classes of tetrahedron edges (tet, (a, b)) with a < b."""
    edges = [(i, e) for i in range(t.size) for e in TET_EDGES]
    uf = UnionFind(edges)
    for i, row in enumerate(t.gluings):
        for k, (j, p) in enumerate(row):
            for a, b in TET_EDGES:
                if k not in (a, b):
                    uf.union((i, (a, b)), (j, _edge(p[a], p[b])))
    return _sorted_classes(uf, edges)


def triangle_classes(t: Triangulation) -> List[List[Tuple[int, int]]]:
    seen = set()
    classes = []
    for i, row in enumerate(t.gluings):
        for k, (j, p) in enumerate(row):
            if (i, k) not in seen:
                seen.update({(i, k), (j, p[k])})
                classes.append(sorted([(i, k), (j, p[k])]))
    return classes


def reversed_edges(t: Triangulation) -> List[Tuple[int, Tuple[int, int]]]:
    """Edges identified with themselves in the opposite direction."""
    oriented = [(i, a, b) for i in range(t.size) for a in range(4) for b in range(4) if a != b]
    uf = UnionFind(oriented)
    for i, row in enumerate(t.gluings):
        for k, (j, p) in enumerate(row):
            for a, b in itertools.permutations(range(4), 2):
                if k not in (a, b):
                    uf.union((i, a, b), (j, p[a], p[b]))
    return [(i, (a, b)) for i in range(t.size) for a, b in TET_EDGES if uf[(i, a, b)] == uf[(i, b, a)]]


@dataclass(frozen=True)
class SkeletonReport:
    vertex_classes: int
    edge_classes: int
    triangle_classes: int
    tetrahedra: int
    euler_characteristic: int

    def to_dict(self) -> Dict[str, int]:
        return {
            "V": self.vertex_classes,
            "E": self.edge_classes,
            "F": self.triangle_classes,
            "T": self.tetrahedra,
            "chi": self.euler_characteristic,
        }


def skeleton(t: Triangulation) -> SkeletonReport:
    v = len(vertex_classes(t))
    e = len(edge_classes(t))
    f = len(triangle_classes(t))
    return SkeletonReport(v, e, f, t.size, v - e + f - t.size)


# ---------------------------------------------------------------- links

@dataclass(frozen=True)
class VertexLink:
    """The link of one vertex class, triangulated by the corners in it."""

    vertex_class: int
    triangles: Tuple[Tuple[int, int], ...]
    edges: int
    vertices: int
    edges_two_sided: bool
    connected: bool

    @property
    def euler_characteristic(self) -> int:
        return self.vertices - self.edges + len(self.triangles)

    @property
    def is_sphere(self) -> bool:
        return self.edges_two_sided and self.connected and self.euler_characteristic == 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "vertex_class": self.vertex_class,
            "triangles": len(self.triangles),
            "edges": self.edges,
            "vertices": self.vertices,
            "chi": self.euler_characteristic,
            "connected": self.connected,
            "sphere": self.is_sphere,
        }


def vertex_links(t: Triangulation) -> List[VertexLink]:
    classes = vertex_classes(t)
    # link edges: (tet, vertex, face) with face != vertex
    sides = [(i, v, k) for i in range(t.size) for v in range(4) for k in range(4) if k != v]
    edge_uf = UnionFind(sides)
    # link vertices: end at v of edge (v, w)
    ends = [(i, v, w) for i in range(t.size) for v in range(4) for w in range(4) if w != v]
    vert_uf = UnionFind(ends)
    tri_uf = UnionFind([(i, v) for i in range(t.size) for v in range(4)])
    for i, row in enumerate(t.gluings):
        for k, (j, p) in enumerate(row):
            for v in range(4):
                if v == k:
                    continue
                edge_uf.union((i, v, k), (j, p[v], p[k]))
                tri_uf.union((i, v), (j, p[v]))
                for w in range(4):
                    if w not in (v, k):
                        vert_uf.union((i, v, w), (j, p[v], p[w]))

    side_count: Dict[Any, int] = {}
    for s in sides:
        side_count[edge_uf[s]] = side_count.get(edge_uf[s], 0) + 1

    links = []
    for n, cls in enumerate(classes):
        edge_roots = {edge_uf[(i, v, k)] for i, v in cls for k in range(4) if k != v}
        vert_roots = {vert_uf[(i, v, w)] for i, v in cls for w in range(4) if w != v}
        tri_roots = {tri_uf[c] for c in cls}
        links.append(VertexLink(
            vertex_class=n,
            triangles=tuple(cls),
            edges=len(edge_roots),
            vertices=len(vert_roots),
            edges_two_sided=all(side_count[r] == 2 for r in edge_roots),
            connected=len(tri_roots) == 1,
        ))
    return links


def is_closed_3_manifold(t: Triangulation) -> bool:
    """Every vertex link is a 2-sphere and no edge is glued to itself reversed."""
    return all(link.is_sphere for link in vertex_links(t)) and not reversed_edges(t)


@dataclass(frozen=True)
class OrientationResult:
    orientable: bool
    assignment: Optional[Tuple[int, ...]] = None

    def __bool__(self) -> bool:
        return self.orientable


def is_orientable(t: Triangulation) -> OrientationResult:
    """Signs s_i with s_i * s_j * sign(p) = -1 across every gluing.

    Each connected component starts at +1 on its lowest tetrahedron.
    """
    signs: List[Optional[int]] = [None] * t.size
    for start in range(t.size):
        if signs[start] is not None:
            continue
        signs[start] = 1
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j, p in t.gluings[i]:
                wanted = -signs[i] * p.sign
                if signs[j] is None:
                    signs[j] = wanted
                    queue.append(j)
                elif signs[j] != wanted:
                    return OrientationResult(False)
    return OrientationResult(True, tuple(signs))


def components(t: Triangulation) -> List[List[int]]:
    seen = [False] * t.size
    result = []
    for start in range(t.size):
        if seen[start]:
            continue
        seen[start] = True
        comp, queue = [], deque([start])
        while queue:
            i = queue.popleft()
            comp.append(i)
            for j, _ in t.gluings[i]:
                if not seen[j]:
                    seen[j] = True
                    queue.append(j)
        result.append(sorted(comp))
    return result


def is_connected(t: Triangulation) -> bool:
    return len(components(t)) <= 1


# ---------------------------------------------------------------- edge stars

@dataclass(frozen=True)
class StarEntry:
    """One tetrahedron around an edge (u, v).

    The face opposite ``next`` is shared with the previous entry and the face
    opposite ``prev`` with the following one.
    """

    tet: int
    u: int
    v: int
    prev: int
    next: int


def edge_star(t: Triangulation, tet: int, a: int, b: int) -> List[StarEntry]:
    """Walk around edge (a, b) of a tetrahedron until the starting flag returns."""
    c, d = [x for x in range(4) if x not in (a, b)]
    start = StarEntry(tet, a, b, c, d)
    star = [start]
    cur = start
    while True:
        j, p = t.gluings[cur.tet][cur.prev]
        u, v, prev = p[cur.u], p[cur.v], p[cur.next]
        nxt = 6 - u - v - prev
        cur = StarEntry(j, u, v, prev, nxt)
        if cur == start:
            return star
        star.append(cur)
        if len(star) > 24 * max(t.size, 1):
            raise RuntimeError("edge star walk did not close")


def edge_degree(t: Triangulation, tet: int, a: int, b: int) -> int:
    return len(edge_star(t, tet, a, b))


# ---------------------------------------------------------------- subdivisions

Position = Tuple[Fraction, Fraction, Fraction, Fraction]


def _unit(x: int) -> Position:
    return tuple(Fraction(1) if y == x else Fraction(0) for y in range(4))


def _centre(labels: Iterable[int]) -> Position:
    labels = list(labels)
    w = Fraction(1, len(labels))
    return tuple(w if y in labels else Fraction(0) for y in range(4))


@dataclass(frozen=True)
class Subdivision:
    """A triangulation with carrier data into a coarser one.

    ``carriers[n] = (tet, positions)`` places the four vertices of tetrahedron
    n inside tetrahedron ``tet`` of the coarse triangulation, in barycentric
    coordinates.
    """

    triangulation: Triangulation
    carriers: Tuple[Tuple[int, Tuple[Position, Position, Position, Position]], ...]
    roles: Tuple[Tuple[str, str, str, str], ...] = field(default=())

    def compose(self, finer: "Subdivision") -> "Subdivision":
        """Carrier data of ``finer`` (a subdivision of self.triangulation) into the coarse one."""
        carriers = []
        for c, positions in finer.carriers:
            outer_tet, outer = self.carriers[c]
            mapped = tuple(
                tuple(sum((lam[m] * outer[m][y] for m in range(4)), Fraction(0)) for y in range(4))
                for lam in positions
            )
            carriers.append((outer_tet, mapped))
        return Subdivision(finer.triangulation, tuple(carriers), finer.roles)

    @classmethod
    def trivial(cls, t: Triangulation) -> "Subdivision":
        units = tuple(_unit(x) for x in range(4))
        return cls(t, tuple((i, units) for i in range(t.size)), tuple(("vertex",) * 4 for _ in range(t.size)))


BARY_ROLES = ("vertex", "edge", "face", "body")


def subdivide_barycentric(t: Triangulation) -> Subdivision:
    """Barycentric subdivision with carriers.

    Tetrahedron ``24 i + s`` is the flag ``sigma = Perm4.all()[s]`` of
    tetrahedron i, with local vertices: 0 the vertex sigma0, 1 the midpoint of
    sigma0 sigma1, 2 the centre of sigma0 sigma1 sigma2, 3 the centre of i.
    """
    perms = Perm4.all()
    rows = []
    carriers = []
    for i in range(t.size):
        for sigma in perms:
            s = sigma.images
            row = []
            for k in range(3):
                swapped = list(s)
                swapped[k], swapped[k + 1] = swapped[k + 1], swapped[k]
                row.append((24 * i + _INDEX[tuple(swapped)], IDENTITY))
            j, p = t.gluings[i][s[3]]
            row.append((24 * j + (p * sigma).index, IDENTITY))
            rows.append(tuple(row))
            carriers.append((i, (_unit(s[0]), _centre(s[:2]), _centre(s[:3]), _centre(s))))
    sub = Triangulation(tuple(rows))
    logger.debug(f"barycentric subdivision: {t.size} -> {sub.size} tetrahedra")
    return Subdivision(sub, tuple(carriers), tuple(BARY_ROLES for _ in range(sub.size)))


def barycentric_subdivision(t: Triangulation) -> Triangulation:
    return subdivide_barycentric(t).triangulation


def face_edges(k: int) -> Tuple[Tuple[int, int], Tuple[int, int], Tuple[int, int]]:
    """Edges of face k in the fixed order (f0 f1), (f1 f2), (f0 f2)."""
    f0, f1, f2 = [x for x in range(4) if x != k]
    return (f0, f1), (f1, f2), (f0, f2)


CONED_ROLES = ("vertex", "vertex", "face", "body")


def subdivide_coned(t: Triangulation) -> Subdivision:
    """First coned subdivision with carriers.

    Tetrahedron ``12 i + 3 k + m`` is the cone from the centre of i over the
    triangle (a, b, centre of face k) where (a, b) is edge m of face k.
    Locals: 0 = a, 1 = b, 2 = face centre, 3 = body centre.
    """
    def index(i: int, k: int, edge: Tuple[int, int]) -> int:
        return 12 * i + 3 * k + face_edges(k).index(_edge(*edge))

    rows = []
    carriers = []
    for i in range(t.size):
        for k in range(4):
            for m, (a, b) in enumerate(face_edges(k)):
                (c,) = [x for x in range(4) if x not in (a, b, k)]
                row = [None] * 4
                # face opposite a: triangle (b, face centre, body)
                lo, _ = _edge(b, c)
                row[0] = (index(i, k, (b, c)), Perm4((0 if c == lo else 1, 0 if b == lo else 1, 2, 3)))
                lo, _ = _edge(a, c)
                row[1] = (index(i, k, (a, c)), Perm4((0 if a == lo else 1, 0 if c == lo else 1, 2, 3)))
                row[2] = (index(i, c, (a, b)), IDENTITY)
                j, p = t.gluings[i][k]
                lo, _ = _edge(p[a], p[b])
                row[3] = (index(j, p[k], (p[a], p[b])),
                          Perm4((0 if p[a] == lo else 1, 0 if p[b] == lo else 1, 2, 3)))
                rows.append(tuple(row))
                carriers.append((i, (_unit(a), _unit(b), _centre([a, b, c]), _centre(range(4)))))
    sub = Triangulation(tuple(rows))
    return Subdivision(sub, tuple(carriers), tuple(CONED_ROLES for _ in range(sub.size)))


def coned_subdivision(t: Triangulation) -> Triangulation:
    return subdivide_coned(t).triangulation


def canonical_point(t: Triangulation, tet: int, position: Sequence[Fraction]) -> Tuple[int, Position]:
    """Smallest (tet, barycentric position) naming the same point of the gluing."""
    start = (tet, tuple(Fraction(x) for x in position))
    seen = {start}
    queue = deque([start])
    while queue:
        i, pos = queue.popleft()
        for k in range(4):
            if pos[k] != 0:
                continue
            j, p = t.gluings[i][k]
            image = [Fraction(0)] * 4
            for x in range(4):
                image[p[x]] = pos[x]
            nxt = (j, tuple(image))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return min(seen)


# ---------------------------------------------------------------- dual graph

def dual_graph(t: Triangulation) -> nx.MultiGraph:
    """One node per tetrahedron, one edge per triangle class.

    Edge keys are the lower face (tet, face) of the pair; edge data holds
    ``faces`` (both sides) and ``map`` (the Perm4 from the lower side).
    """
    g = nx.MultiGraph()
    g.add_nodes_from(range(t.size))
    for (i, k), (j, k2) in triangle_classes(t):
        _, p = t.gluings[i][k]
        g.add_edge(i, j, key=(i, k), faces=((i, k), (j, k2)), map=p)
    return g


@dataclass(frozen=True)
class SpanningTree:
    """A BFS spanning tree of the dual graph.

    ``parent[child] = (parent tet, parent face, child face)``; ``order`` lists
    tetrahedra in discovery order; ``edges`` the tree faces by lower key.
    """

    root: Optional[int]
    order: Tuple[int, ...]
    parent: Dict[int, Tuple[int, int, int]]
    edges: Tuple[Tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.edges)

    def contains(self, face_key: Tuple[int, int]) -> bool:
        return face_key in self.edges


def spanning_tree(g: nx.MultiGraph, root: int = 0) -> SpanningTree:
    """BFS from ``root``, scanning each tetrahedron's faces in order 0..3."""
    if g.number_of_nodes() == 0:
        return SpanningTree(None, (), {}, ())
    if root not in g:
        raise DisconnectedGraph(f"root {root} is not a tetrahedron", root=root)

    local: Dict[int, List[Tuple[int, int, int, Tuple[int, int]]]] = {n: [] for n in g.nodes}
    for _, _, key, data in g.edges(keys=True, data=True):
        (i, k), (j, k2) = data["faces"]
        local[i].append((k, j, k2, key))
        local[j].append((k2, i, k, key))

    order = [root]
    parent: Dict[int, Tuple[int, int, int]] = {}
    edges = []
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for k, j, k2, key in sorted(local[u]):
            if j not in seen:
                seen.add(j)
                parent[j] = (u, k, k2)
                edges.append(key)
                order.append(j)
                queue.append(j)
    if len(seen) != g.number_of_nodes():
        missing = sorted(set(g.nodes) - seen)
        raise DisconnectedGraph(f"{len(missing)} tetrahedra unreachable from {root}", unreachable=missing[:20])
    return SpanningTree(root, tuple(order), parent, tuple(edges))


# ---------------------------------------------------------------- signatures

def relabel(t: Triangulation, tet_perm: Sequence[int], vertex_perms: Sequence[Perm4]) -> Triangulation:
    """Rename tetrahedron i to tet_perm[i] and its vertex x to vertex_perms[i][x]."""
    rows: List[List[Any]] = [[None] * 4 for _ in range(t.size)]
    for i, row in enumerate(t.gluings):
        s_i = vertex_perms[i]
        for k, (j, p) in enumerate(row):
            rows[tet_perm[i]][s_i[k]] = (tet_perm[j], vertex_perms[j] * p * s_i.inverse())
    return Triangulation(tuple(tuple(r) for r in rows))


@dataclass
class _Labeling:
    code: Tuple[Tuple[int, int], ...]
    order: List[int]
    perms: Dict[int, Perm4]


def _label_from(t: Triangulation, start: int, pi0: Perm4,
                best: Optional[Tuple[Tuple[int, int], ...]]) -> Optional[_Labeling]:
    """BFS relabeling; returns None as soon as the code exceeds ``best``."""
    order = [start]
    new_index = {start: 0}
    perms = {start: pi0}
    code: List[Tuple[int, int]] = []
    tight = best is not None
    n = 0
    while n < len(order):
        i = order[n]
        pi = perms[i]
        inv = pi.inverse()
        for f in range(4):
            j, p = t.gluings[i][inv[f]]
            if j not in new_index:
                new_index[j] = len(order)
                order.append(j)
                perms[j] = pi * p.inverse()
            entry = (new_index[j], (perms[j] * p * inv).index)
            if tight:
                ref = best[len(code)]
                if entry > ref:
                    return None
                if entry < ref:
                    tight = False
            code.append(entry)
        n += 1
    return _Labeling(tuple(code), order, perms)


def _component_labeling(t: Triangulation, comp: List[int]) -> _Labeling:
    best: Optional[_Labeling] = None
    for start in comp:
        for pi0 in Perm4.all():
            lab = _label_from(t, start, pi0, best.code if best else None)
            if lab is not None and (best is None or lab.code < best.code):
                best = lab
    assert best is not None
    return best


def _canonical_labelings(t: Triangulation) -> List[_Labeling]:
    return sorted((_component_labeling(t, comp) for comp in components(t)), key=lambda lab: (len(lab.code), lab.code))


def _encode(code: Tuple[Tuple[int, int], ...]) -> str:
    return ".".join(f"{j}-{q}" for j, q in code)


@dataclass(frozen=True)
class IsoSignature:
    canonical_string: str

    def __str__(self) -> str:
        return self.canonical_string


def iso_signature(t: Triangulation) -> IsoSignature:
    """Text form of the lexicographically least relabeled gluing per component."""
    labelings = _canonical_labelings(t)
    return IsoSignature("glu3:" + "|".join(_encode(lab.code) for lab in labelings))


def are_isomorphic(a: Triangulation, b: Triangulation) -> bool:
    if a.size != b.size:
        return False
    return iso_signature(a) == iso_signature(b)


@dataclass(frozen=True)
class Isomorphism:
    """Tetrahedron i of the source is tetrahedron tet_map[i] of the target,
    its vertex x becoming vertex vertex_maps[i][x]."""

    tet_map: Tuple[int, ...]
    vertex_maps: Tuple[Perm4, ...]

    def apply(self, t: Triangulation) -> Triangulation:
        return relabel(t, self.tet_map, self.vertex_maps)

    def inverse(self) -> "Isomorphism":
        tet_map = [0] * len(self.tet_map)
        maps: List[Perm4] = [IDENTITY] * len(self.tet_map)
        for i, j in enumerate(self.tet_map):
            tet_map[j] = i
            maps[j] = self.vertex_maps[i].inverse()
        return Isomorphism(tuple(tet_map), tuple(maps))


def find_isomorphism(a: Triangulation, b: Triangulation) -> Optional[Isomorphism]:
    """An explicit simplicial isomorphism a -> b, or None."""
    if a.size != b.size:
        return None
    la, lb = _canonical_labelings(a), _canonical_labelings(b)
    if [x.code for x in la] != [x.code for x in lb]:
        return None
    tet_map = [0] * a.size
    maps: List[Perm4] = [IDENTITY] * a.size
    for comp_a, comp_b in zip(la, lb):
        for ta, tb in zip(comp_a.order, comp_b.order):
            tet_map[ta] = tb
            maps[ta] = comp_b.perms[tb].inverse() * comp_a.perms[ta]
    return Isomorphism(tuple(tet_map), tuple(maps))
