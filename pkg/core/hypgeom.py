"""
Hyperbolic model geometry.

Points of the upper half-space model are arrays (x1, x2, x3) with x3 > 0,
ball points have norm < 1 and hyperboloid points are (x, y, z, t) with
t^2 - x^2 - y^2 - z^2 = 1. The involution I(x) = 2 (x + e3) / |x + e3|^2 - e3
exchanges the half-space and the ball.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .error_handler import DegeneratePoint, DegenerateTetrahedron

logger = logging.getLogger(__name__)

E3 = np.array([0.0, 0.0, 1.0])
ETA = np.diag([-1.0, -1.0, -1.0, 1.0])
TOL_MODEL = 1e-12
TET_EDGES: Tuple[Tuple[int, int], ...] = tuple(itertools.combinations(range(4), 2))


@dataclass(frozen=True)
class PointUHS:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not self.x3 > 0:
            raise DegeneratePoint(f"x3 must be positive, got {self.x3}", x3=self.x3)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)


def as_uhs(x) -> np.ndarray:
    if isinstance(x, PointUHS):
        return x.as_array()
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or not x[2] > 0:
        raise DegeneratePoint(f"not an upper half-space point: {x.tolist()}", point=x.tolist())
    return x


def edge_variable(x, y) -> float:
    """E = e^d, computed as (S1 + S2)^2 / (4 x3 y3)."""
    x, y = as_uhs(x), as_uhs(y)
    s1 = float(np.linalg.norm(x - y))
    s2 = float(np.linalg.norm(x - y * np.array([1.0, 1.0, -1.0])))
    return (s1 + s2) ** 2 / (4.0 * x[2] * y[2])


def hyperbolic_distance(x, y) -> float:
    x, y = as_uhs(x), as_uhs(y)
    s1 = float(np.linalg.norm(x - y))
    s2 = float(np.linalg.norm(x - y * np.array([1.0, 1.0, -1.0])))
    return 2.0 * math.log((s1 + s2) / (2.0 * math.sqrt(x[2] * y[2])))


def involution(x) -> np.ndarray:
    """I(x) = 2 (x + e3) / |x + e3|^2 - e3; its own inverse."""
    x = np.asarray(x, dtype=float)
    shifted = x + E3
    return 2.0 * shifted / float(shifted @ shifted) - E3


def uhs_to_ball(x, v0=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Translate v0 to (0, 0, 1), then apply I; v0 lands on the origin."""
    x, v0 = as_uhs(x), as_uhs(v0)
    moved = (x - np.array([v0[0], v0[1], 0.0])) / v0[2]
    return involution(moved)


def ball_to_uhs(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if not float(b @ b) < 1.0:
        raise DegeneratePoint(f"not a ball point: {b.tolist()}", point=b.tolist())
    return involution(b)


def ball_to_hyperboloid(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    r2 = float(b @ b)
    if not r2 < 1.0:
        raise DegeneratePoint(f"not a ball point: {b.tolist()}", point=b.tolist())
    return np.concatenate([2.0 * b, [1.0 + r2]]) / (1.0 - r2)


def hyperboloid_to_ball(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    return h[:3] / (1.0 + h[3])


def uhs_to_hyperboloid(x) -> np.ndarray:
    return ball_to_hyperboloid(uhs_to_ball(x))


def hyperboloid_to_uhs(h) -> np.ndarray:
    return ball_to_uhs(hyperboloid_to_ball(h))


def klein_to_ball(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return k / (1.0 + math.sqrt(1.0 - float(k @ k)))


def minkowski_inner(a, b) -> float:
    """<a, b> = t t' - x x' - y y' - z z' for (x, y, z, t)."""
    return float(np.asarray(a) @ ETA @ np.asarray(b))


def ball_distance(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    diff = a - b
    return float(np.arccosh(1.0 + 2.0 * (diff @ diff) / ((1.0 - a @ a) * (1.0 - b @ b))))


def hyperboloid_distance(a, b) -> float:
    return float(np.arccosh(max(1.0, minkowski_inner(a, b))))


def on_hyperboloid(h, tol: float = TOL_MODEL) -> bool:
    h = np.asarray(h, dtype=float)
    return bool(h[3] > 0 and abs(minkowski_inner(h, h) - 1.0) < tol * max(1.0, h[3] ** 2))


# ---------------------------------------------------------------- tetrahedra

def _ball_frame(tet: Sequence, origin: int) -> np.ndarray:
    base = as_uhs(tet[origin])
    return np.array([uhs_to_ball(x, base) for x in tet])


def dihedral_angles(tet: Sequence, margin: float = 1e-12) -> List[Tuple[float, float]]:
    """(cos, sin) of the dihedral angle at each edge, in TET_EDGES order.

    For edge (i, j) vertex i is moved to the ball origin, where the two faces
    through the edge are Euclidean planes.
    """
    points = [as_uhs(x) for x in tet]
    frames: Dict[int, np.ndarray] = {}
    angles = []
    for i, j in TET_EDGES:
        if i not in frames:
            frames[i] = _ball_frame(points, i)
        b = frames[i]
        k, l = [x for x in range(4) if x not in (i, j)]
        n1 = np.cross(b[j], b[k])
        n2 = np.cross(b[j], b[l])
        norm = float(np.linalg.norm(n1) * np.linalg.norm(n2))
        scale = float(np.linalg.norm(b[j]) ** 2 * np.linalg.norm(b[k]) * np.linalg.norm(b[l]))
        if scale == 0.0 or norm < margin * scale:
            raise DegenerateTetrahedron(f"faces at edge {(i, j)} are degenerate", edge=[i, j])
        c = float(np.clip(n1 @ n2 / norm, -1.0, 1.0))
        angles.append((c, math.sqrt(max(0.0, 1.0 - c * c))))
    return angles


def dihedral_angle_values(tet: Sequence) -> List[float]:
    return [math.atan2(s, c) for c, s in dihedral_angles(tet)]


def orientation_measure(tet: Sequence, origin: int = 0) -> float:
    """Normalised determinant of the other three vertices seen from ``origin``
    in the ball model; positive for positively oriented tetrahedra."""
    b = _ball_frame(tet, origin)
    j, k, l = [x for x in range(4) if x != origin]
    det = float(np.linalg.det(np.array([b[j], b[k], b[l]])))
    scale = float(np.linalg.norm(b[j]) * np.linalg.norm(b[k]) * np.linalg.norm(b[l]))
    if scale == 0.0:
        raise DegenerateTetrahedron("coincident vertices", origin=origin)
    return (-1) ** origin * det / scale


def orientation_sign(tet: Sequence, margin: float = 1e-8) -> int:
    m = orientation_measure(tet)
    if abs(m) < margin:
        return 0
    return 1 if m > 0 else -1


def edge_lengths(tet: Sequence) -> List[float]:
    return [hyperbolic_distance(tet[i], tet[j]) for i, j in TET_EDGES]


@dataclass
class ModelTetrahedron:
    vertices: np.ndarray
    lengths: List[float]
    edge_variables: List[float]
    angles: List[Tuple[float, float]]

    @classmethod
    def from_points(cls, points: Sequence) -> "ModelTetrahedron":
        vertices = np.array([as_uhs(x) for x in points])
        return cls(
            vertices=vertices,
            lengths=edge_lengths(vertices),
            edge_variables=[edge_variable(vertices[i], vertices[j]) for i, j in TET_EDGES],
            angles=dihedral_angles(vertices),
        )

    @property
    def oriented(self) -> int:
        return orientation_sign(self.vertices)


def regular_tetrahedron(edge_length: float) -> np.ndarray:
    """Ball-model vertices of a regular tetrahedron centred at the origin."""
    directions = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3.0)
    # positively oriented under orientation_measure after I
    directions = directions[[0, 2, 1, 3]]

    def gap(r: float) -> float:
        return ball_distance(r * directions[0], r * directions[1]) - edge_length

    radius = brentq(gap, 1e-15, 1.0 - 1e-15, xtol=1e-16)
    return radius * directions


# ---------------------------------------------------------------- isometries

def hermitian(h) -> np.ndarray:
    x, y, z, t = np.asarray(h, dtype=float)
    return np.array([[t + z, x - 1j * y], [x + 1j * y, t - z]])


def from_hermitian(m: np.ndarray) -> np.ndarray:
    t = float(np.real(m[0, 0] + m[1, 1])) / 2.0
    z = float(np.real(m[0, 0] - m[1, 1])) / 2.0
    x = float(np.real(m[1, 0]))
    y = float(np.imag(m[1, 0]))
    return np.array([x, y, z, t])


@dataclass(frozen=True)
class Isometry:
    """An element of SL(2, C) acting on the hyperboloid by X -> A X A*."""

    matrix: np.ndarray

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(2, dtype=complex))

    @classmethod
    def normalised(cls, m: np.ndarray) -> "Isometry":
        m = np.asarray(m, dtype=complex)
        det = np.linalg.det(m)
        if abs(det) < 1e-300:
            raise DegenerateTetrahedron("singular matrix")
        return cls(m / np.sqrt(det))

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        (a, b), (c, d) = self.matrix
        return Isometry(np.array([[d, -b], [-c, a]]))

    def act_hyperboloid(self, h) -> np.ndarray:
        a = self.matrix
        return from_hermitian(a @ hermitian(h) @ a.conj().T)

    def act_uhs(self, x) -> np.ndarray:
        return hyperboloid_to_uhs(self.act_hyperboloid(uhs_to_hyperboloid(x)))

    def conjugate(self, by: "Isometry") -> "Isometry":
        return by @ self @ by.inverse()

    def close_to(self, other: "Isometry", tol: float) -> bool:
        """Equal up to sign, as elements of PSL(2, C)."""
        d = min(np.abs(self.matrix - other.matrix).max(), np.abs(self.matrix + other.matrix).max())
        return bool(d < tol)

    def to_dict(self) -> Dict[str, List[List[float]]]:
        return {
            "re": np.real(self.matrix).tolist(),
            "im": np.imag(self.matrix).tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, List[List[float]]]) -> "Isometry":
        return cls(np.array(data["re"]) + 1j * np.array(data["im"]))


def _lorentz_frame(points: Sequence) -> np.ndarray:
    """Columns e0..e3 with e0 = P0, Minkowski Gram-Schmidt on P1, P2 and a
    last spacelike vector completing a positive frame."""
    p0, p1, p2 = [np.asarray(p, dtype=float) for p in points]
    e0 = p0
    frame = [e0]
    for p in (p1, p2):
        v = p - sum(minkowski_inner(p, e) / minkowski_inner(e, e) * e for e in frame)
        n = minkowski_inner(v, v)
        if n > -1e-14:
            raise DegenerateTetrahedron("face vertices are collinear")
        frame.append(v / math.sqrt(-n))
    rows = np.array([ETA @ e for e in frame])
    _, _, vt = np.linalg.svd(rows)
    e3 = vt[-1]
    e3 = e3 / math.sqrt(-minkowski_inner(e3, e3))
    matrix = np.column_stack(frame + [e3])
    if np.linalg.det(matrix) < 0:
        matrix[:, 3] = -matrix[:, 3]
    return matrix


_NULL_BASIS = [np.array([0.0, 0.0, 1.0, 1.0]), np.array([0.0, 0.0, -1.0, 1.0]), np.array([1.0, 0.0, 0.0, 1.0])]


def _spinor(null) -> np.ndarray:
    m = hermitian(null)
    if abs(m[0, 0]) >= abs(m[1, 1]):
        return m[:, 0] / np.sqrt(m[0, 0])
    return m[:, 1] / np.sqrt(m[1, 1])


def lorentz_to_sl2(lorentz: np.ndarray) -> Isometry:
    """The SL(2, C) lift of an orthochronous proper Lorentz map."""
    w_inf, w_0, w_1 = [_spinor(lorentz @ v) for v in _NULL_BASIS]
    lam = np.linalg.solve(np.column_stack([w_inf, w_0]), w_1)
    return Isometry.normalised(np.column_stack([lam[0] * w_inf, lam[1] * w_0]))


def isometry_between(src: Sequence, dst: Sequence) -> Isometry:
    """Orientation-preserving isometry carrying the UHS triple ``src`` onto ``dst``."""
    f_src = _lorentz_frame([uhs_to_hyperboloid(x) for x in src])
    f_dst = _lorentz_frame([uhs_to_hyperboloid(x) for x in dst])
    return lorentz_to_sl2(f_dst @ np.linalg.inv(f_src))


def translation_length(a: Isometry) -> float:
    """2 Re arccosh(tr / 2); zero for elliptic and parabolic elements."""
    tr = a.trace / np.sqrt(a.det)
    value = 2.0 * float(np.real(np.arccosh(complex(tr) / 2.0)))
    return abs(value)


def reduced_words(count: int, max_length: int) -> Iterable[Tuple[int, ...]]:
    """Freely reduced words in signed 1-based generator indices, shortest first."""
    letters = [g for n in range(1, count + 1) for g in (n, -n)]
    layer: List[Tuple[int, ...]] = [()]
    for _ in range(max_length):
        nxt = []
        for word in layer:
            for g in letters:
                if word and word[-1] == -g:
                    continue
                nxt.append(word + (g,))
        yield from nxt
        layer = nxt


def evaluate_word(word: Sequence[int], gens: Sequence[Isometry]) -> Isometry:
    result = Isometry.identity()
    for g in word:
        m = gens[abs(g) - 1]
        result = result @ (m if g > 0 else m.inverse())
    return result


def systole_estimate(gens: Sequence[Isometry], max_length: int, threshold: float = 1e-9) -> float:
    """Least positive translation length over reduced words of length <= L.

    An upper bound on the systole; math.inf when no loxodromic word was seen.
    """
    best = math.inf
    letters = {g: (gens[abs(g) - 1] if g > 0 else gens[abs(g) - 1].inverse())
               for n in range(1, len(gens) + 1) for g in (n, -n)}
    layer: List[Tuple[Tuple[int, ...], Isometry]] = [((), Isometry.identity())]
    for length in range(1, max_length + 1):
        nxt = []
        for word, value in layer:
            for g, m in letters.items():
                if word and word[-1] == -g:
                    continue
                product = value @ m
                nxt.append((word + (g,), product))
                tl = translation_length(product)
                if tl > threshold and tl < best:
                    best = tl
        layer = nxt
        logger.debug(f"systole estimate after length {length}: {best}")
    return best
