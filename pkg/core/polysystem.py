"""
Polynomial system whose real solutions are hyperbolic structures on a gluing.

Each tetrahedron is modelled independently in the upper half-space. The
system ties the copies together with edge equations, angle conditions and
face-pairing matrices, and keeps every tetrahedron non-degenerate and
positively oriented. Square roots are replaced by auxiliary variables v with
v^2 = Q and v >= 0.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from .error_handler import ConfigError, NotOrientable
from .hypgeom import (
    TET_EDGES,
    dihedral_angles,
    edge_variable,
    isometry_between,
    uhs_to_ball,
    uhs_to_hyperboloid,
)
from .tricore import Triangulation, edge_classes, is_orientable, triangle_classes

logger = logging.getLogger(__name__)

FORMAT = "psy/1"
FROZEN_C = 600
TAGS = ("edge", "angle", "box", "orientation", "nondegeneracy", "model-transfer", "face-pairing")
HYPERBOLOID_AXES = ("x", "y", "z", "t")


def frozen_constant() -> int:
    """Measured bound C with kappa <= C T^2 and N, d <= C T over the census."""
    return FROZEN_C


def box_count(size: int) -> int:
    """Boxes available to one dihedral angle: 4T intervals for cos times 4T for sin."""
    return (4 * size) ** 2


def box_bounds(size: int, j: int) -> Tuple[sp.Rational, sp.Rational]:
    lo = sp.Integer(-1) + sp.Rational(j, 2 * size)
    return lo, lo + sp.Rational(1, 2 * size)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    provenance: Tuple[Any, ...]


@dataclass
class Constraint:
    tag: str
    family: str
    rel: str
    expr: sp.Expr

    @cached_property
    def poly(self) -> sp.Poly:
        symbols = sorted(self.expr.free_symbols, key=lambda s: s.name)
        if not symbols:
            return sp.Poly(self.expr, sp.Symbol("_"))
        return sp.Poly(self.expr, *symbols)

    @property
    def degree(self) -> int:
        return int(self.poly.total_degree())

    def monomials(self) -> List[List[Any]]:
        gens = [g.name for g in self.poly.gens]
        terms = []
        for exps, coeff in sorted(self.poly.terms()):
            terms.append([str(coeff), [[gens[n], int(e)] for n, e in enumerate(exps) if e]])
        return terms

    @cached_property
    def function(self) -> Callable[..., float]:
        symbols = sorted(self.expr.free_symbols, key=lambda s: s.name)
        fn = sp.lambdify(symbols, self.expr, "math")
        names = [s.name for s in symbols]
        return lambda values: float(fn(*(values[n] for n in names)))

    def to_dict(self) -> Dict[str, Any]:
        return {"tag": self.tag, "family": self.family, "rel": self.rel, "monomials": self.monomials()}


@dataclass(frozen=True)
class AngleChannel:
    """Sum of dihedral angles around one edge class minus 2 pi; not polynomial."""

    edge_class: int
    members: Tuple[Tuple[int, Tuple[int, int]], ...]

    def residual(self, vertices: np.ndarray) -> float:
        total = 0.0
        for tet, edge in self.members:
            c, s = dihedral_angles(vertices[tet])[TET_EDGES.index(edge)]
            total += math.atan2(s, c)
        return total - 2.0 * math.pi

    def to_dict(self) -> Dict[str, Any]:
        return {"edge_class": self.edge_class, "members": [[tet, list(e)] for tet, e in self.members]}


@dataclass(frozen=True)
class PolyStats:
    kappa: int
    n: int
    degree: int
    coefficient: int

    def within(self, size: int, c: int = FROZEN_C) -> bool:
        return self.kappa <= c * size ** 2 and self.n <= c * size and self.degree <= c * size

    def to_dict(self) -> Dict[str, int]:
        return {"kappa": self.kappa, "N": self.n, "d": self.degree, "M": self.coefficient}


@dataclass(frozen=True)
class BoxChoice:
    """One (cos box, sin box) index pair per (tetrahedron, edge)."""

    size: int
    cells: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...]

    def cell(self, tet: int, edge_index: int) -> Tuple[int, int]:
        return dict(self.cells)[(tet, edge_index)]

    @classmethod
    def around(cls, size: int, angles: Dict[Tuple[int, int], float]) -> "BoxChoice":
        """Boxes containing the given angles, keyed by (tet, edge index)."""
        width = 1.0 / (2 * size)
        top = 4 * size - 1

        def index(v: float) -> int:
            return min(top, max(0, int(math.floor((v + 1.0) / width))))

        cells = tuple(sorted(
            (key, (index(math.cos(theta)), index(math.sin(theta)))) for key, theta in angles.items()
        ))
        return cls(size, cells)

    @classmethod
    def default(cls, t: Triangulation) -> "BoxChoice":
        """Each angle guessed as 2 pi / degree of its edge."""
        angles = {}
        for cls_members in edge_classes(t):
            theta = 2.0 * math.pi / len(cls_members)
            for tet, edge in cls_members:
                angles[(tet, TET_EDGES.index(edge))] = theta
        return cls.around(t.size, angles)


@dataclass
class PolySystem:
    triangulation: Triangulation
    mode: str
    variables: List[Variable]
    constraints: List[Constraint]
    channels: List[AngleChannel] = field(default_factory=list)
    orientation: Tuple[int, ...] = ()
    boxes: Optional[BoxChoice] = None

    @cached_property
    def stats(self) -> PolyStats:
        if not self.constraints:
            return PolyStats(0, len(self.variables), 0, 0)
        degree = max(c.degree for c in self.constraints)
        bits = 0
        for c in self.constraints:
            for coeff in c.poly.coeffs():
                q = sp.Rational(coeff)
                bits = max(bits, int(abs(q.p)).bit_length(), int(q.q).bit_length())
        return PolyStats(len(self.constraints), len(self.variables), degree, bits)

    def by_tag(self, tag: str) -> List[Constraint]:
        return [c for c in self.constraints if c.tag == tag]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": FORMAT,
            "mode": self.mode,
            "vars": [v.name for v in self.variables],
            "cons": [c.to_dict() for c in self.constraints],
            "channels": [ch.to_dict() for ch in self.channels],
            "stats": self.stats.to_dict(),
        }


class _Builder:
    def __init__(self):
        self.variables: List[Variable] = []
        self.symbols: Dict[str, sp.Symbol] = {}
        self.constraints: List[Constraint] = []

    def var(self, name: str, kind: str, *provenance: Any) -> sp.Symbol:
        if name not in self.symbols:
            self.symbols[name] = sp.Symbol(name, real=True)
            self.variables.append(Variable(name, kind, tuple(provenance)))
        return self.symbols[name]

    def add(self, tag: str, family: str, rel: str, expr: sp.Expr):
        self.constraints.append(Constraint(tag, family, rel, sp.expand(expr)))


def build_poly_system(t: Triangulation, mode: str = "direct", boxes: Optional[BoxChoice] = None) -> PolySystem:
    """The polynomial system of a closed orientable gluing.

    ``mode`` is "direct" (angle sums as a transcendental residual channel,
    excluded from the stats) or "box" (unit-modulus product per edge class plus
    the box constraints of ``boxes``, defaulting to ``BoxChoice.default``).
    """
    if mode not in ("direct", "box"):
        raise ConfigError("mode must be 'direct' or 'box'", mode=mode)
    if t.size == 0:
        return PolySystem(t, mode, [], [])
    orientation = is_orientable(t)
    if not orientation:
        raise NotOrientable("the polynomial system needs an orientable gluing")
    signs = orientation.assignment
    b = _Builder()

    for i in range(t.size):
        x = [[b.var(f"x{i}_{v}_{n}", "coord", i, v, n) for n in (1, 2, 3)] for v in range(4)]
        for v in range(4):
            b.add("nondegeneracy", "height", "gt", x[v][2])

        for a, c in TET_EDGES:
            tag = f"{a}{c}"
            q1 = b.var(f"q{i}_{tag}_1", "sqrt", i, a, c, 1)
            q2 = b.var(f"q{i}_{tag}_2", "sqrt", i, a, c, 2)
            e = b.var(f"E{i}_{tag}", "E", i, a, c)
            d1 = sum((x[a][n] - x[c][n]) ** 2 for n in range(3))
            d2 = (x[a][0] - x[c][0]) ** 2 + (x[a][1] - x[c][1]) ** 2 + (x[a][2] + x[c][2]) ** 2
            b.add("model-transfer", "sqrt", "eq", q1 ** 2 - d1)
            b.add("model-transfer", "sqrt", "ge", q1)
            b.add("model-transfer", "sqrt", "eq", q2 ** 2 - d2)
            b.add("model-transfer", "sqrt", "gt", q2)
            b.add("model-transfer", "edge_var", "eq", 4 * e * x[a][2] * x[c][2] - (q1 + q2) ** 2)
            b.add("nondegeneracy", "nondegeneracy", "gt", e - 1)

        # ball coordinates seen from origins 0, 1, 2
        ball: Dict[Tuple[int, int], List[sp.Symbol]] = {}
        for o in (0, 1, 2):
            for w in range(4):
                if w == o:
                    continue
                y = [b.var(f"b{i}_{o}_{w}_{n}", "ball", i, o, w, n) for n in (1, 2, 3)]
                v = [x[w][0] - x[o][0], x[w][1] - x[o][1], x[w][2] + x[o][2]]
                norm = sum(comp ** 2 for comp in v)
                for n in range(3):
                    lift = 1 if n == 2 else 0
                    b.add("model-transfer", "ball", "eq", (y[n] + lift) * norm - 2 * x[o][2] * v[n])
                ball[(o, w)] = y

        for a, c in TET_EDGES:
            tag = f"{a}{c}"
            k, l = [z for z in range(4) if z not in (a, c)]
            bj, bk, bl = (sp.Matrix(ball[(a, z)]) for z in (c, k, l))
            n1, n2 = bj.cross(bk), bj.cross(bl)
            r1 = b.var(f"r{i}_{tag}_1", "normal", i, a, c, 1)
            r2 = b.var(f"r{i}_{tag}_2", "normal", i, a, c, 2)
            b.add("model-transfer", "sqrt", "eq", r1 ** 2 - n1.dot(n1))
            b.add("model-transfer", "sqrt", "gt", r1)
            b.add("model-transfer", "sqrt", "eq", r2 ** 2 - n2.dot(n2))
            b.add("model-transfer", "sqrt", "gt", r2)
            cos = b.var(f"c{i}_{tag}", "cos", i, a, c)
            sin = b.var(f"s{i}_{tag}", "sin", i, a, c)
            b.add("angle", "cos", "eq", cos * r1 * r2 - n1.dot(n2))
            b.add("angle", "sin", "eq", cos ** 2 + sin ** 2 - 1)
            b.add("angle", "sin", "ge", sin)

        for k in range(4):
            o = min(z for z in (0, 1, 2) if z != k)
            rows = [ball[(o, z)] for z in range(4) if z != o]
            det = sp.Matrix(rows).det()
            b.add("orientation", "orient", "gt", signs[i] * (-1) ** o * det)

        for v in range(4):
            h = [b.var(f"h{i}_{v}_{axis}", "hyperboloid", i, v, axis) for axis in HYPERBOLOID_AXES]
            x1, x2, x3 = x[v]
            b.add("model-transfer", "hyperboloid", "eq", x3 * h[0] - x1)
            b.add("model-transfer", "hyperboloid", "eq", x3 * h[1] - x2)
            b.add("model-transfer", "hyperboloid", "eq", 2 * x3 * h[2] - (1 - x1 ** 2 - x2 ** 2 - x3 ** 2))
            b.add("model-transfer", "hyperboloid", "eq", 2 * x3 * h[3] - (1 + x1 ** 2 + x2 ** 2 + x3 ** 2))

    classes = edge_classes(t)
    channels = []
    for n, members in enumerate(classes):
        first_tet, (a0, c0) = members[0]
        e0 = b.symbols[f"E{first_tet}_{a0}{c0}"]
        for tet, (a, c) in members[1:]:
            b.add("edge", "edge_eq", "eq", b.symbols[f"E{tet}_{a}{c}"] - e0)
        if mode == "direct":
            channels.append(AngleChannel(n, tuple(members)))
        else:
            product = sp.Integer(1)
            for tet, (a, c) in members:
                product *= b.symbols[f"c{tet}_{a}{c}"] + sp.I * b.symbols[f"s{tet}_{a}{c}"]
            re, im = sp.expand(product).as_real_imag()
            b.add("angle", "angle_product", "eq", re - 1)
            b.add("angle", "angle_product", "eq", im)

    if mode == "box":
        boxes = boxes or BoxChoice.default(t)
        for i in range(t.size):
            for m, (a, c) in enumerate(TET_EDGES):
                jc, js = boxes.cell(i, m)
                for sym, j in ((b.symbols[f"c{i}_{a}{c}"], jc), (b.symbols[f"s{i}_{a}{c}"], js)):
                    lo, hi = box_bounds(t.size, j)
                    b.add("box", "box", "ge", sym - lo)
                    b.add("box", "box", "ge", hi - sym)

    for (i, k), (j, _) in triangle_classes(t):
        _, p = t.gluings[i][k]
        entries = {}
        for r in (0, 1):
            for s in (0, 1):
                entries[(r, s)] = (b.var(f"A{i}_{k}_{r}{s}_re", "matrix", i, k, r, s, "re")
                                   + sp.I * b.var(f"A{i}_{k}_{r}{s}_im", "matrix", i, k, r, s, "im"))
        A = sp.Matrix(2, 2, lambda r, s: entries[(r, s)])
        det_re, det_im = sp.expand(A.det() - 1).as_real_imag()
        b.add("face-pairing", "det", "eq", det_re)
        b.add("face-pairing", "det", "eq", det_im)
        a_star = A.conjugate().T
        for v in range(4):
            if v == k:
                continue
            hx = [b.symbols[f"h{i}_{v}_{axis}"] for axis in HYPERBOLOID_AXES]
            hy = [b.symbols[f"h{j}_{p[v]}_{axis}"] for axis in HYPERBOLOID_AXES]
            X = _hermitian(hx)
            Y = _hermitian(hy)
            diff = (A * X * a_star - Y).applyfunc(sp.expand)
            b.add("face-pairing", "pairing", "eq", sp.re(diff[0, 0]))
            b.add("face-pairing", "pairing", "eq", sp.re(diff[1, 1]))
            b.add("face-pairing", "pairing", "eq", sp.re(diff[1, 0]))
            b.add("face-pairing", "pairing", "eq", sp.im(diff[1, 0]))

    system = PolySystem(t, mode, b.variables, b.constraints, channels, tuple(signs),
                        boxes if mode == "box" else None)
    logger.info(f"poly system ({mode}) for {t.size} tetrahedra: {system.stats.to_dict()}")
    return system


def _hermitian(h: Sequence[sp.Symbol]) -> sp.Matrix:
    x, y, z, t = h
    return sp.Matrix([[t + z, x - sp.I * y], [x + sp.I * y, t - z]])


def assignment(system: PolySystem, vertices: np.ndarray) -> Dict[str, float]:
    """Values of every variable induced by per-tetrahedron UHS vertices."""
    t = system.triangulation
    values: Dict[str, float] = {}
    for i in range(t.size):
        pts = np.asarray(vertices[i], dtype=float)
        for v in range(4):
            for n in range(3):
                values[f"x{i}_{v}_{n + 1}"] = float(pts[v][n])
            h = uhs_to_hyperboloid(pts[v])
            for axis, value in zip(HYPERBOLOID_AXES, h):
                values[f"h{i}_{v}_{axis}"] = float(value)
        frames = {o: {w: uhs_to_ball(pts[w], pts[o]) for w in range(4) if w != o} for o in (0, 1, 2)}
        for o, frame in frames.items():
            for w, y in frame.items():
                for n in range(3):
                    values[f"b{i}_{o}_{w}_{n + 1}"] = float(y[n])
        angles = dihedral_angles(pts)
        for m, (a, c) in enumerate(TET_EDGES):
            tag = f"{a}{c}"
            values[f"q{i}_{tag}_1"] = float(np.linalg.norm(pts[a] - pts[c]))
            values[f"q{i}_{tag}_2"] = float(np.linalg.norm(pts[a] - pts[c] * np.array([1.0, 1.0, -1.0])))
            values[f"E{i}_{tag}"] = edge_variable(pts[a], pts[c])
            k, l = [z for z in range(4) if z not in (a, c)]
            frame = frames[a]
            values[f"r{i}_{tag}_1"] = float(np.linalg.norm(np.cross(frame[c], frame[k])))
            values[f"r{i}_{tag}_2"] = float(np.linalg.norm(np.cross(frame[c], frame[l])))
            values[f"c{i}_{tag}"], values[f"s{i}_{tag}"] = angles[m]
    for (i, k), (j, _) in triangle_classes(t):
        _, p = t.gluings[i][k]
        face = [v for v in range(4) if v != k]
        a = isometry_between([vertices[i][v] for v in face], [vertices[j][p[v]] for v in face])
        for r in (0, 1):
            for s in (0, 1):
                values[f"A{i}_{k}_{r}{s}_re"] = float(np.real(a.matrix[r, s]))
                values[f"A{i}_{k}_{r}{s}_im"] = float(np.imag(a.matrix[r, s]))
    return values


def evaluate(system: PolySystem, values: Dict[str, float]) -> List[Tuple[Constraint, float]]:
    """Each constraint with its value at ``values`` (0 for satisfied equalities)."""
    return [(c, c.function(values)) for c in system.constraints]


def violation(system: PolySystem, values: Dict[str, float], vertices: Optional[np.ndarray] = None) -> float:
    """Largest violation over the polynomial constraints and, given vertices, the angle channels."""
    worst = 0.0
    for c, value in evaluate(system, values):
        if c.rel == "eq":
            worst = max(worst, abs(value))
        elif c.rel == "gt" and value <= 0:
            worst = max(worst, -value, 1e-300)
        elif c.rel == "ge" and value < 0:
            worst = max(worst, -value)
    if vertices is not None:
        for ch in system.channels:
            worst = max(worst, abs(ch.residual(vertices)))
    return worst
