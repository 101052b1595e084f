"""
Small named triangulations used as inputs, fixtures and oracles.
"""

import itertools
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .error_handler import ConfigError, IllegalMove
from .hypgeom import ball_to_uhs, dihedral_angles, klein_to_ball
from .pachner import MoveSequence, apply_move, enumerate_moves
from .tricore import (
    Isomorphism,
    Perm4,
    Triangulation,
    iso_signature,
    relabel,
)

logger = logging.getLogger(__name__)

SWAP23 = (0, 1, 3, 2)
SWAP01 = (1, 0, 2, 3)


def double_of_tetrahedron() -> Triangulation:
    """Two tetrahedra glued face k to face k by the identity: the 3-sphere."""
    return Triangulation.from_records([
        [(1, (0, 1, 2, 3))] * 4,
        [(0, (0, 1, 2, 3))] * 4,
    ])


def lens_space(p: int, q: int) -> Triangulation:
    """L(p, q) as p tetrahedra around the axis of a lens.

    Tetrahedron i has vertices (N, S, a_i, a_{i+1}); the top face of
    tetrahedron i is glued to the bottom face of tetrahedron i + q.
    """
    if p < 2:
        raise ConfigError("lens_space needs p >= 2", p=p)
    if math.gcd(p, q) != 1:
        raise ConfigError("lens_space needs gcd(p, q) = 1", p=p, q=q)
    rows = []
    for i in range(p):
        rows.append([
            ((i - q) % p, SWAP01),
            ((i + q) % p, SWAP01),
            ((i + 1) % p, SWAP23),
            ((i - 1) % p, SWAP23),
        ])
    return Triangulation.from_records(rows)


def boundary_of_4_simplex() -> Triangulation:
    """Five tetrahedra, tetrahedron m being the facet missing label m of {0..4}."""
    labels = [[x for x in range(5) if x != m] for m in range(5)]
    rows = []
    for m in range(5):
        row = []
        for x, label in enumerate(labels[m]):
            images = []
            for y in range(4):
                target_label = labels[m][y] if y != x else m
                images.append(labels[label].index(target_label))
            row.append((label, tuple(images)))
        rows.append(row)
    return Triangulation.from_records(rows)


def one_tetrahedron_gluings() -> List[Triangulation]:
    """Every valid single-tetrahedron gluing, one per isomorphism class."""
    pairings = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
    found: Dict[str, Triangulation] = {}
    for pairing in pairings:
        choices = [[p for p in Perm4.all() if p[a] == b] for a, b in pairing]
        for p1, p2 in itertools.product(*choices):
            row: List[Optional[Tuple[int, Tuple[int, ...]]]] = [None] * 4
            for (a, b), p in zip(pairing, (p1, p2)):
                row[a] = (0, p.images)
                row[b] = (0, p.inverse().images)
            t = Triangulation.from_records([row])
            found.setdefault(iso_signature(t).canonical_string, t)
    return [found[key] for key in sorted(found)]


def disjoint_union(a: Triangulation, b: Triangulation) -> Triangulation:
    shift = a.size
    rows = [[(j, p) for j, p in row] for row in a.gluings]
    rows += [[(j + shift, p) for j, p in row] for row in b.gluings]
    return Triangulation(tuple(tuple(r) for r in rows))


def random_relabeling(t: Triangulation, rng: np.random.Generator) -> Tuple[Triangulation, Isomorphism]:
    tet_perm = [int(x) for x in rng.permutation(t.size)]
    perms = Perm4.all()
    vertex_perms = [perms[int(rng.integers(24))] for _ in range(t.size)]
    return relabel(t, tet_perm, vertex_perms), Isomorphism(tuple(tet_perm), tuple(vertex_perms))


def scramble(t: Triangulation, k: int, seed: int = 0):
    """Apply k random elementary moves; returns (triangulation, MoveSequence)."""
    rng = np.random.default_rng(seed)
    start = t
    moves = []
    for _ in range(k):
        options = enumerate_moves(t)
        if not options:
            break
        for n in rng.permutation(len(options)):
            move = options[int(n)]
            try:
                t = apply_move(t, move)
            except IllegalMove:
                continue
            moves.append(move)
            break
        else:
            break
    logger.debug(f"scrambled {start.size} -> {t.size} tetrahedra with {len(moves)} moves")
    return t, MoveSequence(iso_signature(start), tuple(moves), iso_signature(t))


# ---------------------------------------------------------------- Seifert-Weber

PHI = (1.0 + math.sqrt(5.0)) / 2.0


def dodecahedron_vertices() -> np.ndarray:
    verts = [np.array(v, dtype=float) for v in itertools.product((-1.0, 1.0), repeat=3)]
    for s1, s2 in itertools.product((-1.0, 1.0), repeat=2):
        verts.append(np.array([0.0, s1 / PHI, s2 * PHI]))
        verts.append(np.array([s1 / PHI, s2 * PHI, 0.0]))
        verts.append(np.array([s1 * PHI, 0.0, s2 / PHI]))
    return np.array(verts)


def dodecahedron_faces(verts: np.ndarray) -> List[Tuple[np.ndarray, List[int]]]:
    """(unit normal, vertex indices counterclockwise seen from outside) per face."""
    normals = []
    for s1, s2 in itertools.product((-1.0, 1.0), repeat=2):
        normals += [(0.0, s1 * PHI, s2), (s1 * PHI, s2, 0.0), (s1, 0.0, s2 * PHI)]
    faces = []
    for n in sorted(normals):
        n = np.array(n) / np.linalg.norm(n)
        heights = verts @ n
        members = [int(i) for i in np.argsort(-heights)[:5]]
        centre = verts[members].mean(axis=0)
        e1 = verts[members[0]] - centre
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        angle = {i: math.atan2((verts[i] - centre) @ e2, (verts[i] - centre) @ e1) for i in members}
        ring = sorted(members, key=lambda i: angle[i] % (2 * math.pi))
        faces.append((n, ring))
    return faces


def _rotate(v: np.ndarray, axis: np.ndarray, theta: float) -> np.ndarray:
    # Rodrigues
    return (v * math.cos(theta) + np.cross(axis, v) * math.sin(theta)
            + axis * (axis @ v) * (1.0 - math.cos(theta)))


def seifert_weber(twist: float = 3.0 * math.pi / 5.0) -> Tuple[Triangulation, np.ndarray]:
    """The dodecahedral space coned from the centre into 60 tetrahedra.

    Each face is glued to the opposite face after a rotation by ``twist``.
    Tetrahedron 5 f + a has vertices (centre, centre of face f, ring[a],
    ring[a + 1]). Returns the triangulation and upper half-space coordinates
    of a regular hyperbolic dodecahedron with dihedral angle 2 pi / 5.
    """
    verts = dodecahedron_vertices()
    faces = dodecahedron_faces(verts)
    centres = [verts[ring].mean(axis=0) for _, ring in faces]

    def find_vertex(point: np.ndarray) -> int:
        return int(np.argmin(np.linalg.norm(verts - point, axis=1)))

    def opposite(f: int) -> int:
        return int(np.argmin([np.linalg.norm(n + faces[f][0]) for n, _ in faces]))

    def tet_of(f: int, a: int, b: int) -> Tuple[int, Dict[int, int]]:
        """Tetrahedron on face f containing dodecahedron vertices a and b."""
        ring = faces[f][1]
        for m in range(5):
            pair = (ring[m], ring[(m + 1) % 5])
            if set(pair) == {a, b}:
                return 5 * f + m, {pair[0]: 2, pair[1]: 3}
        raise ValueError(f"vertices {a}, {b} are not adjacent on face {f}")

    rows = []
    for f, (n, ring) in enumerate(faces):
        g_face = opposite(f)
        c = centres[f]
        image = {v: find_vertex(-c + _rotate(verts[v] - c, n, twist)) for v in ring}
        for m in range(5):
            va, vb = ring[m], ring[(m + 1) % 5]
            row: List[Tuple[int, Tuple[int, ...]]] = []
            tet, local = tet_of(g_face, image[va], image[vb])
            row.append((tet, (0, 1, local[image[va]], local[image[vb]])))
            adjacent = [h for h, (_, r) in enumerate(faces) if h != f and va in r and vb in r][0]
            tet, local = tet_of(adjacent, va, vb)
            row.append((tet, (0, 1, local[va], local[vb])))
            row.append((5 * f + (m + 1) % 5, SWAP23))
            row.append((5 * f + (m - 1) % 5, SWAP23))
            rows.append(row)
    t = Triangulation.from_records(rows)

    def klein_points(scale: float) -> np.ndarray:
        coords = []
        for f, (_, ring) in enumerate(faces):
            for m in range(5):
                coords.append([np.zeros(3), scale * centres[f], scale * verts[ring[m]], scale * verts[ring[(m + 1) % 5]]])
        return np.array(coords)

    def to_uhs(points: np.ndarray) -> np.ndarray:
        return np.array([[ball_to_uhs(klein_to_ball(p)) for p in tet] for tet in points])

    def excess(scale: float) -> float:
        first = to_uhs(klein_points(scale)[:1])[0]
        c, s = dihedral_angles(first)[5]
        return math.atan2(s, c) - math.pi / 5.0

    limit = 1.0 / np.linalg.norm(verts[0])
    scale = brentq(excess, 1e-6 * limit, (1.0 - 1e-9) * limit, xtol=1e-15)
    logger.info(f"Seifert-Weber dodecahedron Klein scale {scale:.12f}")
    return t, to_uhs(klein_points(scale))


CENSUS = {
    "double": double_of_tetrahedron,
    "s4": boundary_of_4_simplex,
    "seifert-weber": lambda: seifert_weber()[0],
}


def by_name(name: str, *args: int) -> Triangulation:
    if name == "lens":
        if len(args) != 2:
            raise ConfigError("lens needs P and Q")
        return lens_space(*args)
    if name not in CENSUS:
        raise ConfigError(f"unknown census name {name}", known=sorted(list(CENSUS) + ["lens"]))
    return CENSUS[name]()
