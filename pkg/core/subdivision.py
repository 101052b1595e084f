"""
Move sequences from a triangulation to one of its subdivisions.

The sequence first builds the coned subdivision, then splits the original
edges at the target's points, then rebuilds each original triangle and
each original tetrahedron from the target's cells. A cell already coned
from one interior point costs nothing: its apex is simply renamed.
Everything else is driven by shellings run backwards.
"""

import logging
from collections import Counter, defaultdict
from fractions import Fraction
from typing import Dict, FrozenSet, Hashable, List, Optional, Sequence, Set, Tuple

import sympy as sp

from .error_handler import BudgetExceeded, LengthBoundExceeded, NotASubdivision, NotShellable
from .pachner import (
    Move,
    MoveSequence,
    Session,
    cone_shelling,
    replay,
    replay_states,
    shelling_order,
    walk_back,
)
from .tricore import (
    Subdivision,
    Triangulation,
    canonical_point,
    edge_classes,
    iso_signature,
    subdivide_barycentric,
    triangle_classes,
)

logger = logging.getLogger(__name__)

Name = Hashable


def _unit(x: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(int(y == x)) for y in range(4))


def _pt(tet: int, position: Sequence[Fraction]) -> Tuple:
    """Name of a point in the chart of one coarse tetrahedron."""
    return ("pt", tet, tuple(Fraction(x) for x in position))


def _support(name: Tuple) -> List[int]:
    return [y for y in range(4) if name[2][y] != 0]


def _across(t: Triangulation, tet: int, face: int, name: Tuple) -> Tuple:
    j, p = t.gluings[tet][face]
    pos = name[2]
    if pos[face] != 0:
        raise NotASubdivision(f"{name!r} is not on face {face} of tetrahedron {tet}", tet=tet, face=face)
    image = [Fraction(0)] * 4
    for x in range(4):
        image[p[x]] = pos[x]
    return ("pt", j, tuple(image))


def _settle(session: Session, t: Triangulation, i: int, k: int):
    """After a move across face k of i, name every point in the chart of its row's body."""
    j, p = t.gluings[i][k]
    sides = {("apex3", j): (i, k), ("apex3", i): (j, p[k])}
    for n, row in enumerate(session.names):
        for body, (other, face) in sides.items():
            if body in row:
                session.names[n] = tuple(
                    _across(t, other, face, name) if name[0] == "pt" and name[1] == other else name
                    for name in row)


def _split_name(x: Tuple, u: Tuple, v: Tuple) -> Tuple:
    # x = ("split", fraction of the way from u to v)
    lam = x[1]
    return ("pt", u[1], tuple(a + lam * (b - a) for a, b in zip(u[2], v[2])))


def length_bound(t: int, T: int) -> int:
    """Upper bound on the elementary length for t -> T tetrahedra."""
    return 48 * t * T + 9 * T + 9 * t


def first_coned_subdivision(t: Triangulation) -> Tuple[Triangulation, MoveSequence]:
    """t (1-4) moves followed by one suspended (1-3) per triangle: 5 t moves."""
    session = Session(t, [[("c", i, v) for v in range(4)] for i in range(t.size)])
    for i in range(t.size):
        # survivors keep their order, so the next original tetrahedron is always 0
        session.record(Move.make("1-4", tet=0), ("body", i))
    for (i, k), _ in triangle_classes(t):
        up = session.find({("c", i, v) for v in range(4) if v != k} | {("body", i)})
        session.record(Move.make("2D-(1-3)", tet=up, face=session.local(up, ("body", i))), ("face", (i, k)))
    logger.info(f"first coned subdivision: {t.size} -> {session.t.size} tetrahedra, "
                f"{len(session.elementary)} elementary moves")
    return session.t, MoveSequence(iso_signature(t), tuple(session.moves), iso_signature(session.t))


def _check_faces_between_distinct(t1: Triangulation):
    for i in range(t1.size):
        for k, (j, _) in enumerate(t1.gluings[i]):
            if j == i:
                raise NotASubdivision("a face is glued to its own tetrahedron", tet=i, face=k)


def _check_carriers(t1: Triangulation, sub: Subdivision):
    t2 = sub.triangulation
    if len(sub.carriers) != t2.size:
        raise NotASubdivision("one carrier per tetrahedron is required",
                              tetrahedra=t2.size, carriers=len(sub.carriers))
    volume: Dict[int, sp.Rational] = defaultdict(lambda: sp.Integer(0))
    for n, (c, positions) in enumerate(sub.carriers):
        if not 0 <= c < t1.size:
            raise NotASubdivision(f"carrier {c} of tetrahedron {n} does not exist", tet=n)
        if any(sum(pos) != 1 or min(pos) < 0 for pos in positions):
            raise NotASubdivision(f"tetrahedron {n} has invalid barycentric coordinates", tet=n)
        det = sp.Matrix([[sp.Rational(x.numerator, x.denominator) for x in pos] for pos in positions]).det()
        if det == 0:
            raise NotASubdivision(f"tetrahedron {n} is degenerate in its carrier", tet=n)
        volume[c] += abs(det)
    for c in range(t1.size):
        if volume[c] != 1:
            raise NotASubdivision(f"tetrahedron {c} is not exactly covered", tet=c, volume=str(volume[c]))


def _is_trivial(sub: Subdivision) -> bool:
    units = set(_unit(x) for x in range(4))
    return all(set(positions) == units for _, positions in sub.carriers)


def subdivision_move_sequence(t1: Triangulation, sub: Subdivision,
                              allow_barycentric_fallback: bool = True,
                              shelling_budget: int = 100000) -> MoveSequence:
    """Elementary-move witness that ``sub.triangulation`` is a subdivision of ``t1``.

    Args:
        t1: coarse triangulation; no face may be glued to its own tetrahedron
        sub: the finer triangulation with carrier data into t1
        allow_barycentric_fallback: when a cell cannot be shelled within
            ``shelling_budget``, go through the barycentric subdivision of the
            target instead of giving up

    Raises:
        NotASubdivision: the carriers do not describe a subdivision
        NotShellable, BudgetExceeded: a cell could not be shelled and the
            fallback is disabled
        LengthBoundExceeded: the direct sequence is longer than ``length_bound``
    """
    t2 = sub.triangulation
    _check_faces_between_distinct(t1)
    _check_carriers(t1, sub)
    if t2.size == t1.size and _is_trivial(sub) and iso_signature(t1) == iso_signature(t2):
        return MoveSequence(iso_signature(t1), (), iso_signature(t2))
    try:
        return _sequence(t1, sub, shelling_budget)
    except (NotShellable, BudgetExceeded) as e:
        if not allow_barycentric_fallback:
            raise
        logger.warning(f"{type(e).__name__} ({e}); retrying through the barycentric subdivision")
    bary = subdivide_barycentric(t2)
    there = subdivision_move_sequence(t1, sub.compose(bary), False, shelling_budget)
    back = subdivision_move_sequence(t2, bary, False, shelling_budget)
    current = replay(t1, there)
    states, inverses = replay_states(t2, back.moves)
    _, moves = walk_back(current, states, inverses)
    return MoveSequence(iso_signature(t1), there.moves + tuple(moves), iso_signature(t2))


def _sequence(t1: Triangulation, sub: Subdivision, shelling_budget: int) -> MoveSequence:
    # Every point is named in the chart of the coarse tetrahedron whose body
    # its row is coned from; _settle restores that after moves across a face.
    t2 = sub.triangulation
    corner = [[_pt(i, _unit(v)) for v in range(4)] for i in range(t1.size)]
    target = [tuple(_pt(c, pos) for pos in positions) for c, positions in sub.carriers]
    canon: Dict[Tuple, Tuple] = {}

    def where(name: Tuple) -> Tuple:
        if name not in canon:
            canon[name] = canonical_point(t1, name[1], name[2])
        return canon[name]

    for n, names in enumerate(target):
        if len(set(names)) != 4:
            raise NotASubdivision(f"tetrahedron {n} has coincident vertices", tet=n)
        for k, (m, p) in enumerate(t2.gluings[n]):
            if any(where(names[x]) != where(target[m][p[x]]) for x in range(4) if x != k):
                raise NotASubdivision(f"face {k} of tetrahedron {n} disagrees with its carrier", tet=n, face=k)

    edge_of = {}
    edge_reps = []
    for n, cls in enumerate(edge_classes(t1)):
        edge_reps.append(cls[0])
        for member in cls:
            edge_of[member] = n
    face_of = {}
    face_keys = []
    for cls in triangle_classes(t1):
        face_keys.append(cls[0])
        for member in cls:
            face_of[member] = cls[0]

    session = Session(t1, corner)
    session.split_name = _split_name

    # coned subdivision
    for i in range(t1.size):
        session.record(Move.make("1-4", tet=0), ("apex3", i))
    for i, k in face_keys:
        up = session.find({corner[i][v] for v in range(4) if v != k} | {("apex3", i)})
        session.record(Move.make("2D-(1-3)", tet=up, face=session.local(up, ("apex3", i))), ("apex2", (i, k)))
        _settle(session, t1, i, k)
    coned = len(session.elementary)

    # split original edges at the target's points, in order along each edge
    on_edge: Dict[int, Dict[Tuple, Fraction]] = defaultdict(dict)
    for name in {n for names in target for n in names}:
        support = _support(name)
        if len(support) != 2:
            continue
        e = edge_of[(name[1], tuple(support))]
        i, (a, b) = edge_reps[e]
        for s in {name[2][y] for y in support}:
            if where(_pt(i, _on_edge(a, b, s))) == where(name):
                on_edge[e][where(name)] = s
                break
        else:
            raise NotASubdivision(f"{name!r} is not on its edge", tet=name[1])
    for e in sorted(on_edge):
        i, (a, b) = edge_reps[e]
        k = min(x for x in range(4) if x not in (a, b))
        apex2, apex3 = ("apex2", face_of[(i, k)]), ("apex3", i)
        last, far, s_last = corner[i][a], corner[i][b], Fraction(0)
        for s in sorted(on_edge[e].values()):
            tet = session.find({last, far, apex2, apex3})
            session.record(Move.make("VERTEX-ADD", tet=tet, edge=(session.local(tet, last), session.local(tet, far))),
                           ("split", (s - s_last) / (1 - s_last)))
            last, s_last = _pt(i, _on_edge(a, b, s)), s
    edges = len(session.elementary) - coned

    # triangles, read from the side of each class key
    keys = set(face_keys)
    in_face: Dict[Tuple[int, int], Set[FrozenSet[Name]]] = defaultdict(set)
    for n, (c, positions) in enumerate(sub.carriers):
        for x in range(4):
            others = [y for y in range(4) if y != x]
            for k in range(4):
                if (c, k) in keys and all(positions[y][k] == 0 for y in others):
                    in_face[(c, k)].add(frozenset(target[n][y] for y in others))
    renamed = 0
    for key in face_keys:
        i, k = key
        cells = sorted(in_face[key], key=lambda s: sorted(s))
        apex = ("apex2", key)
        centre = _cone_centre(cells, 3)
        if centre is not None:
            session.rename(apex, centre)
            _settle(session, t1, i, k)
            renamed += 1
            continue
        order = shelling_order(cells, shelling_budget)
        for sm in reversed(cone_shelling(cells, order, apex)):
            session.apply_set_move(sm.inverse(), up=("apex3", i))
            _settle(session, t1, i, k)
    faces = len(session.elementary) - coned - edges

    # tetrahedra
    in_tet: Dict[int, List[FrozenSet[Name]]] = defaultdict(list)
    for n, (c, _) in enumerate(sub.carriers):
        in_tet[c].append(frozenset(target[n]))
    for i in range(t1.size):
        cells = sorted(in_tet[i], key=lambda s: sorted(s))
        apex = ("apex3", i)
        centre = _cone_centre(cells, 4)
        if centre is not None:
            session.rename(apex, centre)
            renamed += 1
            continue
        order = shelling_order(cells, shelling_budget)
        for sm in reversed(cone_shelling(cells, order, apex)):
            session.apply_set_move(sm.inverse())
    bodies = len(session.elementary) - coned - edges - faces

    got = Counter(frozenset(names) for names in session.names)
    want = Counter(frozenset(names) for names in target)
    if got != want or iso_signature(session.t) != iso_signature(t2):
        raise NotASubdivision("moves did not reproduce the target subdivision")

    total = len(session.elementary)
    bound = length_bound(t1.size, t2.size)
    logger.info(f"subdivision sequence: {coned} coning, {edges} edge, {faces} triangle, {bodies} body moves; "
                f"{renamed} cells renamed; {total} <= {bound}")
    if total > bound:
        raise LengthBoundExceeded(f"elementary length {total} exceeds the bound {bound}",
                                  length=total, bound=bound, tetrahedra=[t1.size, t2.size])
    return MoveSequence(iso_signature(t1), tuple(session.moves), iso_signature(session.t))


def _on_edge(a: int, b: int, s: Fraction) -> Tuple[Fraction, ...]:
    pos = [Fraction(0)] * 4
    pos[a], pos[b] = 1 - s, s
    return tuple(pos)


def _cone_centre(cells: List[FrozenSet[Name]], support: int) -> Optional[Name]:
    """The interior point every cell is coned from, if there is one."""
    interior = {n for cell in cells for n in cell if len(_support(n)) == support}
    if len(interior) != 1:
        return None
    (centre,) = interior
    if not all(centre in cell for cell in cells):
        return None
    return centre
