"""
Fundamental groups of gluings.

Presentations are read off the 1-skeleton: generators are the edge classes
outside a spanning tree, relators come from the triangles. Words are lists
of signed 1-based generator indices, ``-n`` standing for the inverse of
generator n.

The face-pairing side works in the polyhedron Y obtained by cutting the
gluing open along the faces that are not in a spanning tree of the dual
graph. Each cut face gives one face-pairing generator, and every loop of
the first coned subdivision is rewritten as a word in those generators by
following its lift through Y.
"""

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import sympy as sp
from networkx.utils import UnionFind
from scipy.optimize import least_squares
from sympy.matrices.normalforms import smith_normal_form

from .config import Tolerances
from .error_handler import BadFormat, BudgetExceeded, DisconnectedGraph, NotFound
from .hypgeom import Isometry
from .tricore import (
    TET_EDGES,
    SpanningTree,
    Subdivision,
    Triangulation,
    canonical_point,
    dual_graph,
    edge_classes,
    is_connected,
    spanning_tree,
    subdivide_coned,
    triangle_classes,
    vertex_classes,
)

logger = logging.getLogger(__name__)

FORMAT = "pi1/1"

Word = Tuple[int, ...]


def free_reduce(word: Sequence[int]) -> Word:
    out: List[int] = []
    for g in word:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


@dataclass(frozen=True)
class Presentation:
    """Generators are edge-class indices; relators use signed 1-based positions."""

    generators: Tuple[int, ...]
    relators: Tuple[Word, ...]
    tree: Tuple[int, ...] = ()

    @property
    def total_length(self) -> int:
        return sum(len(r) for r in self.relators)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": FORMAT,
            "gens": list(self.generators),
            "relators": [list(r) for r in self.relators],
            "lP": self.total_length,
        }

    @classmethod
    def from_dict(cls, data: Any) -> "Presentation":
        if not isinstance(data, dict) or data.get("format") != FORMAT:
            raise BadFormat(f"expected a {FORMAT} document")
        try:
            gens = tuple(int(g) for g in data["gens"])
            relators = tuple(tuple(int(x) for x in r) for r in data["relators"])
        except (KeyError, TypeError, ValueError) as e:
            raise BadFormat(f"malformed presentation: {e}")
        for r in relators:
            if any(x == 0 or abs(x) > len(gens) for x in r):
                raise BadFormat("relator letters must be signed generator positions", relator=list(r))
        return cls(gens, relators)


def directed_edges(t: Triangulation) -> Dict[Tuple[int, int, int], Tuple[int, int]]:
    """(tet, a, b) -> (edge class, +1 if a -> b agrees with the class representative)."""
    classes = edge_classes(t)
    darts = [(i, a, b) for i in range(t.size) for a in range(4) for b in range(4) if a != b]
    uf = UnionFind(darts)
    for i, row in enumerate(t.gluings):
        for k, (j, p) in enumerate(row):
            for a, b in TET_EDGES:
                if k not in (a, b):
                    uf.union((i, a, b), (j, p[a], p[b]))
                    uf.union((i, b, a), (j, p[b], p[a]))
    result = {}
    for n, cls in enumerate(classes):
        tet, (a, b) = cls[0]
        forward = uf[(tet, a, b)]
        for i, (x, y) in cls:
            result[(i, x, y)] = (n, 1 if uf[(i, x, y)] == forward else -1)
            result[(i, y, x)] = (n, -result[(i, x, y)][1])
    return result


def presentation_from_triangulation(t: Triangulation) -> Presentation:
    """Edge classes off a Kruskal spanning tree, one relator per triangle class.

    Raises:
        Disconnected: the gluing has more than one component
    """
    if t.size == 0:
        return Presentation((), ())
    if not is_connected(t):
        raise DisconnectedGraph("presentations need a connected gluing")
    vertex_of = {c: n for n, cls in enumerate(vertex_classes(t)) for c in cls}
    classes = edge_classes(t)
    g = nx.MultiGraph()
    g.add_nodes_from(set(vertex_of.values()))
    for n, cls in enumerate(classes):
        tet, (a, b) = cls[0]
        g.add_edge(vertex_of[(tet, a)], vertex_of[(tet, b)], key=n, weight=n)
    tree = sorted(k for _, _, k in nx.minimum_spanning_edges(g, algorithm="kruskal", keys=True, data=False))
    generators = tuple(n for n in range(len(classes)) if n not in set(tree))
    position = {n: m + 1 for m, n in enumerate(generators)}

    darts = directed_edges(t)
    relators = []
    for (i, k), _ in triangle_classes(t):
        a, b, c = [x for x in range(4) if x != k]
        word = []
        for x, y in ((a, b), (b, c), (c, a)):
            n, sign = darts[(i, x, y)]
            if n in position:
                word.append(sign * position[n])
        relators.append(tuple(word))
    p = Presentation(generators, tuple(relators), tuple(tree))
    assert p.total_length <= 6 * t.size, "presentation longer than 6t"
    logger.debug(f"presentation: {len(generators)} generators, {len(relators)} relators, l(P)={p.total_length}")
    return p


def relation_matrix(p: Presentation) -> sp.Matrix:
    rows = []
    for r in p.relators:
        row = [0] * len(p.generators)
        for g in r:
            row[abs(g) - 1] += 1 if g > 0 else -1
        rows.append(row)
    return sp.Matrix(len(rows), len(p.generators), lambda i, j: rows[i][j])


def abelianization(p: Presentation) -> Tuple[int, ...]:
    """Invariant factors of H1, ascending, with 0 for each free summand.

    The trivial group is ``()`` and Z/p is ``(p,)``.
    """
    n = len(p.generators)
    if n == 0:
        return ()
    if not p.relators:
        return (0,) * n
    snf = smith_normal_form(relation_matrix(p), domain=sp.ZZ)
    diagonal = [abs(int(snf[i, i])) for i in range(min(snf.shape))]
    nonzero = [d for d in diagonal if d != 0]
    return tuple(sorted(d for d in nonzero if d != 1)) + (0,) * (n - len(nonzero))


# ---------------------------------------------------------------- cut polyhedron

Point = Tuple[Hashable, ...]


def _points() -> List[Point]:
    return [("v", v) for v in range(4)] + [("f", k) for k in range(4)] + [("b",)]


def _on_face(point: Point, k: int) -> bool:
    return point[0] == "v" and point[1] != k or point == ("f", k)


class CutComplex:
    """Points of the polyhedron Y: corners, face centres and body centres of
    each tetrahedron, identified across the faces of the dual tree only.

    ``act(letter, y)`` applies a face pairing to a point of Y; pairing ``n``
    carries the higher side of cut face ``pairings[n - 1]`` onto its lower side.
    """

    def __init__(self, t: Triangulation, tree: SpanningTree):
        self.t = t
        self.tree = tree
        members = [(i, pt) for i in range(t.size) for pt in _points()]
        uf = UnionFind(members)
        for child, (u, k, _) in tree.parent.items():
            j, p = t.gluings[u][k]
            for pt in _points():
                if _on_face(pt, k):
                    uf.union((u, pt), (j, self._image(pt, p, k)))
        groups: Dict[Any, List[Tuple[int, Point]]] = {}
        for m in members:
            groups.setdefault(uf[m], []).append(m)
        ordered = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
        self.vertex_of: Dict[Tuple[int, Point], int] = {m: n for n, g in enumerate(ordered) for m in g}
        self.size = len(ordered)

        self.pairings: Tuple[Tuple[int, int], ...] = tuple(
            cls[0] for cls in triangle_classes(t) if not tree.contains(cls[0]))
        moves: Dict[int, Dict[int, set]] = {}
        for n, (i, k) in enumerate(self.pairings, start=1):
            j, p = t.gluings[i][k]
            for pt in _points():
                if not _on_face(pt, k):
                    continue
                low = self.vertex_of[(i, pt)]
                high = self.vertex_of[(j, self._image(pt, p, k))]
                moves.setdefault(high, {}).setdefault(n, set()).add(low)
                moves.setdefault(low, {}).setdefault(-n, set()).add(high)
        self.moves = {y: {g: min(targets) for g, targets in gs.items()} for y, gs in moves.items()}

    @staticmethod
    def _image(pt: Point, p, k: int) -> Point:
        if pt[0] == "v":
            return ("v", p[pt[1]])
        return ("f", p[k])

    def vertex(self, tet: int, pt: Point) -> int:
        return self.vertex_of[(tet, pt)]

    def act(self, letter: int, y: int) -> Optional[int]:
        return self.moves.get(y, {}).get(letter)

    def apply(self, word: Sequence[int], y: int) -> Optional[int]:
        """The point ``word . y``; the rightmost letter acts first."""
        for g in reversed(word):
            y = self.act(g, y)
            if y is None:
                return None
        return y

    def connecting_word(self, src: int, dst: int, budget: int) -> Tuple[Word, int]:
        """Shortest word w with w . src = dst, and the number of points visited."""
        back: Dict[int, Tuple[Optional[int], int]] = {src: (None, 0)}
        queue = deque([src])
        while queue:
            y = queue.popleft()
            if y == dst:
                letters = []
                while back[y][0] is not None:
                    prev, g = back[y]
                    letters.append(g)
                    y = prev
                return tuple(letters), len(back)
            for g in sorted(self.moves.get(y, {})):
                z = self.moves[y][g]
                if z not in back:
                    back[z] = (y, g)
                    if len(back) > budget:
                        raise BudgetExceeded(f"word search visited more than {budget} points", budget=budget)
                    queue.append(z)
        raise NotFound(f"point {dst} is not in the orbit of {src}", src=src, dst=dst)


# ---------------------------------------------------------------- subdivision X'

@dataclass
class PartialBarycentric:
    """The coned subdivision X' with the trees used for simplicial generators.

    ``points[n]`` names vertex class n of X' by its kind and canonical
    position in the source; ``edges[n]`` gives the endpoints of edge class n
    and ``lifts[n]`` the (tet, point, point) copies of it inside single
    source tetrahedra. ``gamma`` is a spanning tree of the 1-skeleton of X'
    that uses only edges through coning vertices and contains ``embedded``,
    the image of the dual tree.
    """

    source: Triangulation
    subdivision: Subdivision
    dual_tree: SpanningTree
    points: List[Tuple[str, Any]]
    edges: List[Tuple[int, int]]
    lifts: List[List[Tuple[int, Point, Point]]]
    gamma: Tuple[int, ...]
    embedded: Tuple[int, ...]
    base: int
    point_index: Dict[Tuple[int, Point], int] = field(default_factory=dict)

    @property
    def complex(self) -> Triangulation:
        return self.subdivision.triangulation

    def simplicial_generators(self) -> List[int]:
        in_gamma = set(self.gamma)
        return [n for n in range(len(self.edges)) if n not in in_gamma]

    def tree_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.points)))
        for n in self.gamma:
            u, v = self.edges[n]
            g.add_edge(u, v, edge=n)
        return g


def _kind(position) -> Point:
    support = [y for y in range(4) if position[y] != 0]
    if len(support) == 1:
        return ("v", support[0])
    if len(support) == 3:
        return ("f", [y for y in range(4) if y not in support][0])
    return ("b",)


def partial_barycentric_subdivision(t: Triangulation, root: int = 0) -> PartialBarycentric:
    """Cone every triangle, then every tetrahedron, and pick the trees.

    Raises:
        Disconnected: the gluing has more than one component
    """
    if not is_connected(t) or t.size == 0:
        raise DisconnectedGraph("partial barycentric subdivision needs a connected gluing")
    sub = subdivide_coned(t)
    xt = sub.triangulation
    dual = spanning_tree(dual_graph(t), root)

    def label(s: int, v: int) -> Tuple:
        c, positions = sub.carriers[s]
        return canonical_point(t, c, positions[v])

    classes = vertex_classes(xt)
    point_of = {}
    point_index: Dict[Tuple[int, Point], int] = {}
    points = []
    for n, cls in enumerate(classes):
        s, v = cls[0]
        c, positions = sub.carriers[s]
        points.append((_kind(positions[v])[0], label(s, v)))
        for s, v in cls:
            point_of[(s, v)] = n
            c, positions = sub.carriers[s]
            point_index[(c, _kind(positions[v]))] = n

    edges, lifts = [], []
    lift_class: Dict[Tuple[int, Point, Point], int] = {}
    for n, cls in enumerate(edge_classes(xt)):
        s, (a, b) = cls[0]
        edges.append((point_of[(s, a)], point_of[(s, b)]))
        seen = []
        for s, (a, b) in cls:
            c, positions = sub.carriers[s]
            lift = (c, _kind(positions[a]), _kind(positions[b]))
            if lift not in seen:
                seen.append(lift)
            lift_class[lift] = n
            lift_class[(c, lift[2], lift[1])] = n
        lifts.append(seen)

    embedded = []
    for child, (u, k, k2) in sorted(dual.parent.items()):
        embedded.append(lift_class[(u, ("b",), ("f", k))])
        embedded.append(lift_class[(child, ("f", k2), ("b",))])
    embedded_set = set(embedded)

    g = nx.MultiGraph()
    g.add_nodes_from(range(len(points)))
    for n, (u, v) in enumerate(edges):
        if points[u][0] == "v" and points[v][0] == "v":
            continue
        g.add_edge(u, v, key=n, weight=0 if n in embedded_set else n + 1)
    gamma = tuple(sorted(k for _, _, k in nx.minimum_spanning_edges(g, algorithm="kruskal", keys=True, data=False)))
    if not embedded_set <= set(gamma):
        raise RuntimeError("spanning tree lost part of the embedded dual tree")
    base = point_of[(12 * root, 3)]
    logger.info(f"partial barycentric subdivision: {xt.size} tetrahedra, {len(points)} vertices, "
                f"{len(edges) - len(gamma)} simplicial generators")
    return PartialBarycentric(t, sub, dual, points, edges, lifts, gamma, tuple(sorted(embedded_set)), base,
                             point_index)


# ---------------------------------------------------------------- face-pairing words

@dataclass(frozen=True)
class FacePairingGens:
    """One generator per cut face, with a loop of X' crossing only that face."""

    tree: SpanningTree
    pairings: Tuple[Tuple[int, int], ...]
    loops: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.pairings)


@dataclass(frozen=True)
class Witness:
    """A simplicial generator written as a word in face pairings.

    ``steps`` records, for each edge of the loop, the lift (start, end) in Y
    and the connecting word carrying that start to the current point.
    """

    generator: int
    loop: Tuple[int, ...]
    word: Word
    steps: Tuple[Tuple[int, int, Word], ...]
    cut: CutComplex = field(repr=False, compare=False, hash=False)
    start: int = 0

    def replay(self) -> bool:
        position = self.start
        collected: List[int] = []
        for src, dst, connecting in self.steps:
            if self.cut.apply(connecting, src) != position:
                return False
            collected += connecting
            position = dst
        return position == self.start and free_reduce(collected) == self.word

    def to_dict(self) -> Dict[str, Any]:
        return {"generator": self.generator, "loop": list(self.loop), "word": list(self.word)}


@dataclass
class FacePairingWords:
    generators: FacePairingGens
    witnesses: List[Witness]
    bound: int

    @property
    def within_bound(self) -> bool:
        return all(len(w.word) <= self.bound for w in self.witnesses)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pairings": [list(key) for key in self.generators.pairings],
            "bound": self.bound,
            "words": [w.to_dict() for w in self.witnesses],
        }


def _loop(pb: PartialBarycentric, tree: nx.Graph, edge: int) -> Tuple[List[int], List[int]]:
    """(vertex path, edge path) of the loop through ``edge`` closed up in gamma."""
    u, v = pb.edges[edge]
    head = nx.shortest_path(tree, pb.base, u)
    tail = nx.shortest_path(tree, v, pb.base)
    vertices = head + tail
    path_edges = [tree.edges[a, b]["edge"] for a, b in zip(head, head[1:])]
    path_edges.append(edge)
    path_edges += [tree.edges[a, b]["edge"] for a, b in zip(tail, tail[1:])]
    return vertices, path_edges


def face_pairing_gens(pb: PartialBarycentric) -> FacePairingGens:
    tree = pb.tree_graph()
    pairings, loops = [], []
    for (i, k), (j, _) in triangle_classes(pb.source):
        if pb.dual_tree.contains((i, k)):
            continue
        centre = pb.point_index[(i, ("f", k))]
        loops.append(tuple(nx.shortest_path(tree, pb.base, pb.point_index[(j, ("b",))]) + [centre]
                           + nx.shortest_path(tree, pb.point_index[(i, ("b",))], pb.base)))
        pairings.append((i, k))
    return FacePairingGens(pb.dual_tree, tuple(pairings), tuple(loops))


def _witness(pb: PartialBarycentric, cut: CutComplex, tree: nx.Graph, edge: int, budget: int) -> Witness:
    vertices, path_edges = _loop(pb, tree, edge)
    start = cut.vertex(pb.dual_tree.root, ("b",))
    position = start
    steps = []
    collected: List[int] = []
    for a, b, n in zip(vertices, vertices[1:], path_edges):
        best: Optional[Tuple[int, Word, int, int]] = None
        for tet, p, q in pb.lifts[n]:
            for src_pt, dst_pt in ((p, q), (q, p)):
                if (pb.point_index[(tet, src_pt)], pb.point_index[(tet, dst_pt)]) != (a, b):
                    continue
                src, dst = cut.vertex(tet, src_pt), cut.vertex(tet, dst_pt)
                try:
                    word, _ = cut.connecting_word(src, position, budget)
                except NotFound:
                    continue
                key = (len(word), word, src, dst)
                if best is None or key < best:
                    best = key
        if best is None:
            raise NotFound(f"edge {n} of X' has no lift reaching the current point", edge=n)
        _, word, src, dst = best
        steps.append((src, dst, word))
        collected += word
        position = dst
    if position != start:
        raise NotFound(f"loop through edge {edge} does not close in Y", edge=edge)
    return Witness(edge, tuple(vertices), free_reduce(collected), tuple(steps), cut, start)


def face_pairing_words(t: Triangulation, pb: Optional[PartialBarycentric] = None, budget: int = 100000,
                       threads: int = 1) -> FacePairingWords:
    """Rewrite every simplicial generator of X' as a word in face pairings.

    Raises:
        BudgetExceeded: a connecting-word search visited more than ``budget`` points
    """
    pb = pb or partial_barycentric_subdivision(t)
    cut = CutComplex(t, pb.dual_tree)
    tree = pb.tree_graph()
    gens = face_pairing_gens(pb)
    generators = pb.simplicial_generators()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        witnesses = list(pool.map(lambda n: _witness(pb, cut, tree, n, budget), generators))
    for w in witnesses:
        if not w.replay():
            raise RuntimeError(f"witness for edge {w.generator} does not replay")
    result = FacePairingWords(gens, witnesses, 4 * t.size)
    longest = max((len(w.word) for w in witnesses), default=0)
    if not result.within_bound:
        logger.warning(f"longest face-pairing word has length {longest} > {result.bound}")
    logger.info(f"{len(witnesses)} simplicial generators rewritten; longest word {longest}")
    return result


# ---------------------------------------------------------------- representations

@dataclass
class Representation:
    """Matrices for the source generators satisfying every relator and the
    matching data. Surjectivity onto the target is not checked."""

    matrices: List[Isometry]
    residual: float
    relator_residual: float
    matching_residual: float
    start: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matrices": [m.to_dict() for m in self.matrices],
            "residual": self.residual,
            "relator_residual": self.relator_residual,
            "matching_residual": self.matching_residual,
            "start": self.start,
            "certificate": "relators and generator matching hold numerically; surjectivity not verified",
        }


def _word_matrix(word: Sequence[int], mats: np.ndarray) -> np.ndarray:
    out = np.eye(2, dtype=complex)
    for g in word:
        m = mats[abs(g) - 1]
        out = out @ (m if g > 0 else np.linalg.inv(m))
    return out


def _up_to_sign(m: np.ndarray, target: np.ndarray) -> np.ndarray:
    sign = 1.0 if np.real(np.vdot(target, m)) >= 0 else -1.0
    return m - sign * target


class _RepProblem:
    def __init__(self, source: Presentation, wanted: List[np.ndarray]):
        self.source = source
        self.k = len(source.generators)
        self.wanted = wanted

    def matrices(self, x: np.ndarray) -> np.ndarray:
        x = x.reshape(self.k, 2, 2, 2)
        return x[..., 0] + 1j * x[..., 1]

    @staticmethod
    def split(m: np.ndarray) -> List[float]:
        flat = np.asarray(m).ravel()
        return list(np.real(flat)) + list(np.imag(flat))

    def parts(self, x: np.ndarray) -> Tuple[List[float], List[float], List[float]]:
        mats = self.matrices(x)
        dets = []
        for m in mats:
            dets += self.split(np.linalg.det(m) - 1.0)
        relators = []
        for r in self.source.relators:
            relators += self.split(_up_to_sign(_word_matrix(r, mats), np.eye(2, dtype=complex)))
        matching = []
        for m, w in zip(mats, self.wanted):
            matching += self.split(_up_to_sign(m, w))
        return dets, relators, matching

    def __call__(self, x: np.ndarray) -> np.ndarray:
        dets, relators, matching = self.parts(x)
        return np.array(dets + relators + matching)


def rep_surjection_search(source: Presentation, images: Sequence[Sequence[int]], targets: Sequence[Isometry],
                          tolerances: Optional[Tolerances] = None, restarts: int = 10, seed: int = 0,
                          threads: int = 1) -> Representation:
    """Solve for SL(2, C) matrices H_1..H_k: each relator evaluates to +-Id and
    H_i matches the target word ``images[i]`` up to sign.

    Raises:
        NotFound: no start reached residual ``tolerances.solver``; inconclusive
    """
    tol = tolerances or Tolerances()
    if len(images) != len(source.generators):
        raise BadFormat("one image word per source generator is required",
                        generators=len(source.generators), images=len(images))
    target_mats = np.array([g.matrix for g in targets], dtype=complex)
    wanted = [_word_matrix(w, target_mats) if target_mats.size else np.eye(2, dtype=complex) for w in images]
    problem = _RepProblem(source, wanted)
    k = problem.k
    if k == 0:
        return Representation([], 0.0, 0.0, 0.0, 0)

    def attempt(n: int) -> Tuple[float, int, np.ndarray]:
        rng = np.random.default_rng(seed + n)
        x0 = rng.normal(size=(k, 2, 2, 2))
        fit = least_squares(problem, x0.ravel(), method="trf", ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=5000)
        worst = float(np.max(np.abs(problem(fit.x)), initial=0.0))
        logger.debug(f"representation start {n}: residual {worst:.3e}")
        return worst, n, fit.x

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(attempt, range(restarts)))
    worst, n, x = min(outcomes, key=lambda o: (o[0], o[1]))
    if not worst < tol.solver:
        logger.warning(f"no representation found: best residual {worst:.3e}")
        raise NotFound(f"no representation within {tol.solver} after {restarts} starts", best_residual=worst)
    dets, relators, matching = problem.parts(x)
    det_gap = float(np.max(np.abs(dets), initial=0.0))
    if det_gap >= tol.det:
        raise NotFound(f"matrices leave SL(2, C) by {det_gap:.3e}", det_gap=det_gap)
    mats = [Isometry.normalised(m) for m in problem.matrices(x)]
    return Representation(
        matrices=mats,
        residual=worst,
        relator_residual=float(np.max(np.abs(relators), initial=0.0)),
        matching_residual=float(np.max(np.abs(matching), initial=0.0)),
        start=n,
    )


def abelian_order(p: Presentation) -> float:
    """|H1|, or math.inf when H1 has a free part."""
    factors = abelianization(p)
    if 0 in factors:
        return math.inf
    return float(np.prod(factors)) if factors else 1.0
