"""
Numerical hyperbolic structures on a gluing.

Vertices are solved for directly: every tetrahedron gets four upper
half-space points, and a damped least-squares run drives the edge-length
and angle-sum residuals to zero while a barrier keeps each tetrahedron
oriented the way the gluing demands. Several starts run side by side and
the lowest residual wins. Failing to converge proves nothing.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import least_squares
from scipy.sparse import lil_matrix

from .config import Tolerances
from .error_handler import (
    BadFormat,
    DegeneratePoint,
    DegenerateTetrahedron,
    DevelopmentClash,
    NoSolutionFound,
    NotOrientable,
)
from .hypgeom import (
    TET_EDGES,
    Isometry,
    ModelTetrahedron,
    ball_to_uhs,
    dihedral_angles,
    hyperbolic_distance,
    isometry_between,
    minkowski_inner,
    orientation_measure,
    orientation_sign,
    regular_tetrahedron,
    uhs_to_hyperboloid,
)
from .polysystem import BoxChoice, PolySystem, assignment, box_bounds, evaluate, violation
from .tricore import (
    SpanningTree,
    Triangulation,
    dual_graph,
    edge_classes,
    is_orientable,
    spanning_tree,
    triangle_classes,
)

logger = logging.getLogger(__name__)

FORMAT = "hst/1"
# sparse Jacobians only pay off on larger gluings
DENSE_LIMIT = 8
LOG_HEIGHT = 40.0
# reflection in the x1 x3 plane
MIRROR = np.array([1.0, -1.0, 1.0])


@dataclass
class HyperbolicStructure:
    triangulation: Triangulation
    vertices: np.ndarray
    residual: float
    angle_defects: List[float]
    orientation: Tuple[int, ...]
    face_pairings: Dict[Tuple[int, int], Isometry] = field(default_factory=dict)
    start: Optional[int] = None
    systole: Optional[float] = None

    @property
    def tetrahedra(self) -> List[ModelTetrahedron]:
        return [ModelTetrahedron.from_points(v) for v in self.vertices]

    @property
    def lengths(self) -> List[float]:
        return [hyperbolic_distance(v[a], v[b]) for v in self.vertices for a, b in TET_EDGES]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": FORMAT,
            "vertices": np.asarray(self.vertices).tolist(),
            "residual": self.residual,
            "angle_defects": list(self.angle_defects),
            "orientation": list(self.orientation),
            "face_pairings": [[i, k, a.to_dict()] for (i, k), a in sorted(self.face_pairings.items())],
            "start": self.start,
            "systole": self.systole if self.systole is not None and math.isfinite(self.systole) else None,
        }

    @classmethod
    def from_dict(cls, data: Any, t: Triangulation) -> "HyperbolicStructure":
        """Rebuild a stored structure over the gluing it was solved on."""
        if not isinstance(data, dict) or data.get("format") != FORMAT:
            raise BadFormat(f"expected a {FORMAT} document")
        try:
            vertices = np.asarray(data["vertices"], dtype=float).reshape(t.size, 4, 3)
            pairings = {(int(i), int(k)): Isometry.from_dict(a) for i, k, a in data.get("face_pairings", [])}
        except (KeyError, TypeError, ValueError) as e:
            raise BadFormat(f"malformed structure: {e}", tetrahedra=t.size)
        return cls(
            triangulation=t,
            vertices=vertices,
            residual=float(data.get("residual", 0.0)),
            angle_defects=[float(x) for x in data.get("angle_defects", [])],
            orientation=tuple(int(s) for s in data.get("orientation", [])),
            face_pairings=pairings,
            start=data.get("start"),
            systole=data.get("systole"),
        )


class _Problem:
    """Residual vector over z = (x1, x2, log x3) for every vertex.

    With a box choice, every cos and sin of a dihedral angle also gets two
    rows measuring how far it sits outside its box.
    """

    def __init__(self, t: Triangulation, orientation: Sequence[int], barrier: float,
                 boxes: Optional[BoxChoice] = None):
        self.t = t
        self.size = t.size
        self.classes = edge_classes(t)
        self.orientation = tuple(orientation)
        self.barrier = barrier
        self.flip = 1
        self.cells = dict(boxes.cells) if boxes is not None else None
        self.bounds = [tuple(float(x) for x in box_bounds(t.size, j)) for j in range(4 * t.size)] if boxes else []
        rows = sum(len(c) - 1 for c in self.classes) + len(self.classes) + self.size
        if self.cells is not None:
            rows += 24 * self.size
        self.sparsity = lil_matrix((rows, 12 * self.size), dtype=int)
        r = 0
        for cls in self.classes:
            first = cls[0][0]
            for tet, _ in cls[1:]:
                self._touch(r, first, tet)
                r += 1
        for cls in self.classes:
            self._touch(r, *[tet for tet, _ in cls])
            r += 1
        for i in range(self.size):
            self._touch(r, i)
            r += 1
        if self.cells is not None:
            for i in range(self.size):
                for _ in range(24):
                    self._touch(r, i)
                    r += 1

    def _touch(self, row: int, *tets: int):
        for tet in tets:
            self.sparsity[row, 12 * tet:12 * tet + 12] = 1

    def pack(self, vertices: np.ndarray) -> np.ndarray:
        z = np.array(vertices, dtype=float).reshape(self.size, 4, 3)
        z[..., 2] = np.log(z[..., 2])
        return z.ravel()

    def unpack(self, z: np.ndarray) -> np.ndarray:
        v = np.array(z, dtype=float).reshape(self.size, 4, 3)
        v[..., 2] = np.exp(np.clip(v[..., 2], -LOG_HEIGHT, LOG_HEIGHT))
        return v

    def measure(self, vertices: np.ndarray):
        """Per tetrahedron: six lengths, six angles and the orientation measure."""
        lengths, angles, signs = [], [], []
        for tet in vertices:
            lengths.append([hyperbolic_distance(tet[a], tet[b]) for a, b in TET_EDGES])
            try:
                angles.append([math.atan2(s, c) for c, s in dihedral_angles(tet)])
                signs.append(orientation_measure(tet))
            except (DegenerateTetrahedron, DegeneratePoint):
                angles.append([0.0] * 6)
                signs.append(0.0)
        return lengths, angles, signs

    def outside_boxes(self, angles: Sequence[Sequence[float]]) -> np.ndarray:
        if self.cells is None:
            return np.zeros(0)
        excess = []
        for i in range(self.size):
            for m in range(6):
                for value, j in zip((math.cos(angles[i][m]), math.sin(angles[i][m])), self.cells[(i, m)]):
                    lo, hi = self.bounds[j]
                    excess += [max(0.0, lo - value), max(0.0, value - hi)]
        return np.array(excess)

    def split(self, vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        lengths, angles, signs = self.measure(vertices)
        spreads = []
        for cls in self.classes:
            first_tet, first_edge = cls[0]
            d0 = lengths[first_tet][TET_EDGES.index(first_edge)]
            spreads += [lengths[tet][TET_EDGES.index(e)] - d0 for tet, e in cls[1:]]
        sums = [sum(angles[tet][TET_EDGES.index(e)] for tet, e in cls) - 2.0 * math.pi for cls in self.classes]
        margins = [self.flip * s * m for s, m in zip(self.orientation, signs)]
        return np.array(spreads), np.array(sums), np.array(margins), self.outside_boxes(angles)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        spreads, sums, margins, excess = self.split(self.unpack(z))
        return np.concatenate([spreads, sums, np.maximum(0.0, self.barrier - margins), excess])

    def residual(self, vertices: np.ndarray) -> Tuple[float, float]:
        """(largest equality or box violation, smallest orientation margin)."""
        spreads, sums, margins, excess = self.split(vertices)
        worst = float(np.max(np.abs(np.concatenate([spreads, sums, excess])), initial=0.0))
        return worst, float(np.min(margins, initial=math.inf))


def system_residual(system: PolySystem, vertices: np.ndarray) -> Tuple[float, float]:
    """(largest violation, smallest strict-inequality value) of a system at vertex positions.

    Every variable is derived from the vertices, so face-pairing matrices,
    model transfers and box constraints are all checked. Vertices must carry
    the orientation the system was built for.
    """
    try:
        values = assignment(system, vertices)
    except (DegeneratePoint, DegenerateTetrahedron):
        return math.inf, -math.inf
    strict = [value for c, value in evaluate(system, values) if c.rel == "gt"]
    return violation(system, values, vertices), min(strict, default=math.inf)


def _orientation_of(t: Triangulation) -> Tuple[int, ...]:
    result = is_orientable(t)
    if not result:
        raise NotOrientable("hyperbolic structures need an orientable gluing")
    return result.assignment


def _flip_for(orientation: Sequence[int], vertices: np.ndarray) -> int:
    """Global sign making the seed agree with the combinatorial orientation."""
    total = 0.0
    for s, tet in zip(orientation, vertices):
        try:
            total += s * orientation_measure(tet)
        except (DegenerateTetrahedron, DegeneratePoint):
            continue
    return -1 if total < 0 else 1


def random_start(size: int, orientation: Sequence[int], rng: np.random.Generator, flip: int = 1) -> np.ndarray:
    """Independent regular tetrahedra with random edge lengths, slightly perturbed."""
    vertices = []
    for i in range(size):
        ball = regular_tetrahedron(float(rng.uniform(0.4, 1.6)))
        ball = ball + rng.normal(scale=0.02, size=ball.shape)
        if flip * orientation[i] < 0:
            ball = ball[[1, 0, 2, 3]]
        vertices.append([ball_to_uhs(b) for b in ball])
    return np.array(vertices)


def solve_structure(system: Union[PolySystem, Triangulation], seeds: Optional[Sequence[np.ndarray]] = None,
                    restarts: int = 20, tolerances: Optional[Tolerances] = None, seed: int = 0,
                    threads: int = 1, max_nfev: int = 2000) -> HyperbolicStructure:
    """Search for vertex positions satisfying the edge, angle and orientation conditions.

    Seeds are tried first, then ``restarts`` random starts drawn from
    ``seed``, ``seed + 1``, ... The accepted structure has residual below
    ``tolerances.solver`` and every tetrahedron oriented with margin at least
    ``tolerances.margin_min``; ties go to the lower start index. Given a
    PolySystem, a box-mode system also steers the search into its boxes, and
    a start is only accepted when every constraint of the system holds at it
    within the same tolerances.

    Raises:
        NoSolutionFound: no start converged. This is not a proof that no
            structure exists.
    """
    tol = tolerances or Tolerances()
    poly = system if isinstance(system, PolySystem) else None
    t = poly.triangulation if poly is not None else system
    orientation = _orientation_of(t)
    boxes = poly.boxes if poly is not None and poly.mode == "box" else None
    problem = _Problem(t, orientation, barrier=100.0 * tol.margin_min, boxes=boxes)
    seeds = [np.asarray(s, dtype=float).reshape(t.size, 4, 3) for s in (seeds or [])]
    if seeds:
        problem.flip = _flip_for(orientation, seeds[0])

    def accepted(vertices: np.ndarray) -> Tuple[bool, float]:
        worst, margin = problem.residual(vertices)
        ok = worst < tol.solver and margin >= tol.margin_min
        if ok and poly is not None:
            # the system fixes the orientation; a solution of the other one is checked as its mirror image
            mirrored = vertices * MIRROR if problem.flip < 0 else vertices
            system_worst, strict = system_residual(poly, mirrored)
            logger.debug(f"system residual {system_worst:.3e}, smallest strict value {strict:.3e}")
            ok = system_worst < tol.solver and strict >= tol.margin_min
            worst = max(worst, system_worst)
        return ok, worst

    for n, start in enumerate(seeds):
        ok, worst = accepted(start)
        if ok:
            logger.info(f"seed {n} already solves the system (residual {worst:.3e})")
            return _structure(t, problem, start, worst, n)

    def attempt(n: int) -> Tuple[float, int, np.ndarray, bool]:
        if n < len(seeds):
            x0 = seeds[n]
        else:
            rng = np.random.default_rng(seed + n - len(seeds))
            x0 = random_start(t.size, orientation, rng, problem.flip)
        fit = least_squares(
            problem,
            problem.pack(x0),
            jac_sparsity=problem.sparsity if t.size > DENSE_LIMIT else None,
            method="trf",
            ftol=1e-15,
            xtol=1e-15,
            gtol=1e-15,
            max_nfev=max_nfev,
        )
        vertices = problem.unpack(fit.x)
        ok, worst = accepted(vertices)
        logger.debug(f"start {n}: residual {worst:.3e}, accepted={ok}, nfev={fit.nfev}")
        return worst, n, vertices, ok

    if t.size == 0:
        return _structure(t, problem, np.zeros((0, 4, 3)), 0.0, None)

    total = len(seeds) + restarts
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(attempt, range(total)))
    good = [o for o in outcomes if o[3]]
    if not good:
        best = min((o[0] for o in outcomes), default=math.inf)
        logger.warning(f"no start converged: best residual {best:.3e} over {total} starts")
        raise NoSolutionFound(f"no structure found in {total} starts", starts=total, best_residual=best)
    worst, n, vertices, _ = min(good, key=lambda o: (o[0], o[1]))
    logger.info(f"structure found from start {n} with residual {worst:.3e}")
    return _structure(t, problem, vertices, worst, n)


def _structure(t: Triangulation, problem: _Problem, vertices: np.ndarray, worst: float,
               start: Optional[int]) -> HyperbolicStructure:
    _, sums, _, _ = problem.split(vertices)
    return HyperbolicStructure(
        triangulation=t,
        vertices=np.array(vertices, dtype=float),
        residual=worst,
        angle_defects=[abs(float(x)) for x in sums],
        orientation=tuple(problem.flip * s for s in problem.orientation),
        start=start,
    )


# ---------------------------------------------------------------- verification

@dataclass
class PoincareReport:
    length_spreads: List[float]
    angle_defects: List[float]
    orientation_signs: List[int]
    expected_signs: List[int]
    passed: bool
    model_gap: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "length_spreads": self.length_spreads,
            "angle_defects": self.angle_defects,
            "orientation_signs": self.orientation_signs,
            "expected_signs": self.expected_signs,
            "passed": self.passed,
            "model_gap": self.model_gap,
        }


def angle_sum_at_edge(tets: Sequence[Sequence], edges: Sequence[Tuple[int, int]]) -> float:
    """Total dihedral angle of a fan of tetrahedra, one edge (a, b) with a < b each."""
    total = 0.0
    for tet, edge in zip(tets, edges):
        c, s = dihedral_angles(tet)[TET_EDGES.index(tuple(edge))]
        total += math.atan2(s, c)
    return total


def _hyperboloid_gap(x: np.ndarray) -> float:
    """Relative distance of a vertex's hyperboloid image from the hyperboloid."""
    try:
        h = uhs_to_hyperboloid(x)
    except DegeneratePoint:
        return math.inf
    return abs(minkowski_inner(h, h) - 1.0) / max(1.0, float(h[3]) ** 2)


def verify_poincare_conditions(s: HyperbolicStructure, t: Optional[Triangulation] = None,
                               tolerances: Optional[Tolerances] = None) -> PoincareReport:
    """Edge lengths agree within each class, angles sum to 2 pi and every
    tetrahedron is oriented consistently with the gluing."""
    tol = tolerances or Tolerances()
    t = t or s.triangulation
    vertices = np.asarray(s.vertices, dtype=float)
    spreads, defects = [], []
    for cls in edge_classes(t):
        lengths = [hyperbolic_distance(vertices[tet][a], vertices[tet][b]) for tet, (a, b) in cls]
        spreads.append(max(lengths) - min(lengths))
        try:
            defects.append(abs(angle_sum_at_edge([vertices[tet] for tet, _ in cls], [e for _, e in cls])
                               - 2.0 * math.pi))
        except DegenerateTetrahedron:
            defects.append(math.inf)
    signs = []
    for tet in vertices:
        try:
            signs.append(orientation_sign(tet, tol.margin_min))
        except DegenerateTetrahedron:
            signs.append(0)
    model_gap = max((_hyperboloid_gap(x) for tet in vertices for x in tet), default=0.0)
    orientation = is_orientable(t)
    expected: List[int] = []
    if orientation:
        flip = signs[0] * orientation.assignment[0] if signs and signs[0] else 1
        expected = [flip * x for x in orientation.assignment]
    passed = (bool(orientation) and signs == expected and model_gap < tol.model
              and all(x < tol.length for x in spreads) and all(x < tol.angle for x in defects))
    if not passed:
        logger.info(f"Poincare check failed: spread {max(spreads, default=0.0):.3e}, "
                    f"defect {max(defects, default=0.0):.3e}")
    return PoincareReport(spreads, defects, signs, expected, passed, model_gap)


# ---------------------------------------------------------------- development

@dataclass
class Development:
    """Tetrahedra placed side by side along a spanning tree of the dual graph.

    ``placements[i]`` carries tetrahedron i from its own coordinates to the
    developed picture; ``pairings`` holds one isometry per non-tree face,
    keyed by the lower (tet, face) of the pair, carrying the developed face
    on the higher side onto the developed face on the lower side.
    """

    tree: SpanningTree
    placements: List[Isometry]
    developed: np.ndarray
    pairings: Dict[Tuple[int, int], Isometry]

    def generators(self) -> List[Isometry]:
        return [self.pairings[key] for key in sorted(self.pairings)]


def _same_side(face: Sequence[np.ndarray], a: np.ndarray, b: np.ndarray) -> bool:
    m1 = orientation_measure([face[0], face[1], face[2], a], origin=3)
    m2 = orientation_measure([face[0], face[1], face[2], b], origin=3)
    return m1 * m2 > 0


def _mismatch(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    return max(hyperbolic_distance(x, y) for x, y in zip(a, b))


def _check_det(g: Isometry, tol: float, **where: int):
    gap = abs(g.det - 1.0)
    if gap > tol:
        raise DevelopmentClash(f"isometry determinant is off by {gap:.3e}", det_gap=gap, **where)


def interior_tree(t: Triangulation, boundary: Sequence[Tuple[int, int]], root: int = 0) -> SpanningTree:
    """Spanning tree avoiding the given (tet, face) sides."""
    g = dual_graph(t)
    banned = set(boundary)
    for u, v, key, data in list(g.edges(keys=True, data=True)):
        if banned & set(data["faces"]):
            g.remove_edge(u, v, key=key)
    return spanning_tree(g, root)


def face_pairing_isometries(s: HyperbolicStructure, t: Optional[Triangulation] = None,
                            tree: Optional[SpanningTree] = None, base: int = 0,
                            tolerances: Optional[Tolerances] = None) -> Development:
    """Develop the structure along ``tree`` and read off the face pairings.

    Raises:
        DevelopmentClash: two tetrahedra land on the same side of a shared
            face, or a face pairing misses its target by more than tol_dev
    """
    tol = tolerances or Tolerances()
    t = t or s.triangulation
    tree = tree or spanning_tree(dual_graph(t), base)
    model = np.asarray(s.vertices, dtype=float)
    placements: List[Optional[Isometry]] = [None] * t.size
    developed = np.zeros_like(model)
    if tree.root is not None:
        placements[tree.root] = Isometry.identity()
        developed[tree.root] = model[tree.root]

    for child in tree.order[1:]:
        u, k, k2 = tree.parent[child]
        _, p = t.gluings[u][k]
        face = [y for y in range(4) if y != k]
        g = isometry_between([model[child][p[y]] for y in face], [developed[u][y] for y in face])
        _check_det(g, tol.det, tet=child, face=k2)
        placed = np.array([g.act_uhs(x) for x in model[child]])
        gap = _mismatch([placed[p[y]] for y in face], [developed[u][y] for y in face])
        if gap > tol.dev:
            raise DevelopmentClash(f"tetrahedron {child} does not fit face {k} of {u}", tet=child, gap=gap)
        if _same_side([developed[u][y] for y in face], developed[u][k], placed[k2]):
            raise DevelopmentClash(f"tetrahedra {u} and {child} overlap across face {k}", tet=child)
        placements[child] = g
        developed[child] = placed

    pairings: Dict[Tuple[int, int], Isometry] = {}
    for (i, k), (j, k2) in triangle_classes(t):
        if tree.contains((i, k)):
            continue
        _, p = t.gluings[i][k]
        face = [y for y in range(4) if y != k]
        src = [developed[j][p[y]] for y in face]
        dst = [developed[i][y] for y in face]
        g = isometry_between(src, dst)
        _check_det(g, tol.det, tet=i, face=k)
        gap = _mismatch([g.act_uhs(x) for x in src], dst)
        if gap > tol.dev:
            raise DevelopmentClash(f"face {k} of tetrahedron {i} is not congruent to its partner",
                                   tet=i, face=k, gap=gap)
        if _same_side(dst, developed[i][k], g.act_uhs(developed[j][k2])):
            raise DevelopmentClash(f"face pairing at ({i}, {k}) folds the tetrahedra together", tet=i, face=k)
        pairings[(i, k)] = g

    s.face_pairings = dict(pairings)
    logger.info(f"developed {t.size} tetrahedra; {len(pairings)} face pairings")
    return Development(tree, placements, developed, pairings)  # type: ignore[arg-type]


def edge_length_bound_check(s: Union[HyperbolicStructure, Sequence[float]], c: int, systole: float) -> bool:
    """Every edge strictly shorter than inj / c, with inj = systole / 2."""
    lengths = s.lengths if isinstance(s, HyperbolicStructure) else list(s)
    bound = (systole / 2.0) / c
    return all(x < bound for x in lengths)
