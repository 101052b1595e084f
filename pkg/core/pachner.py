"""
Pachner moves on 3-dimensional gluings.

Every elementary move is read off the boundary of the 4-simplex with labels
0..4, facets named by their missing label. A move of kind a-b replaces the
facets in ``D_FACETS[kind]`` by the complementary facets. Composite moves
(suspended 2-dimensional moves, vertex adding, cone shelling) expand
deterministically into elementary ones through a ``Session``.
"""

import itertools
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

from .error_handler import BudgetExceeded, GluError, IllegalMove, NotFound, NotShellable
from .tricore import (
    Isomorphism,
    IsoSignature,
    Perm4,
    Triangulation,
    edge_classes,
    edge_star,
    find_isomorphism,
    iso_signature,
    triangle_classes,
    validate,
    vertex_classes,
)

logger = logging.getLogger(__name__)

FORMAT = "mvs/1"

ELEMENTARY = ("1-4", "2-3", "3-2", "4-1")
COMPOSITE = ("2D-(1-3)", "2D-(2-2)", "2D-(3-1)", "VERTEX-ADD", "CONE-SHELL")
KIND_ORDER = {kind: n for n, kind in enumerate(ELEMENTARY + COMPOSITE)}

D_FACETS: Dict[str, Tuple[int, ...]] = {
    "1-4": (4,),
    "2-3": (3, 4),
    "3-2": (0, 1, 2),
    "4-1": (0, 1, 2, 3),
}
INVERSE_KIND = {"1-4": "4-1", "4-1": "1-4", "2-3": "3-2", "3-2": "2-3"}
TET_DELTA = {"1-4": 3, "4-1": -3, "2-3": 1, "3-2": -1}


def _freeze(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return tuple(_freeze(v) for v in value)
    return value


def _thaw(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value


@dataclass(frozen=True, order=True)
class Move:
    """A move kind plus its site, e.g. ``Move.make("2-3", tet=0, face=1)``."""

    kind: str
    site: Tuple[Tuple[str, Any], ...] = ()

    @classmethod
    def make(cls, kind: str, **site: Any) -> "Move":
        if kind not in KIND_ORDER:
            raise IllegalMove(f"unknown move kind {kind}", kind=kind)
        return cls(kind, tuple(sorted((k, _freeze(v)) for k, v in site.items())))

    def __getitem__(self, key: str) -> Any:
        for k, v in self.site:
            if k == key:
                return v
        raise IllegalMove(f"{self.kind} site needs '{key}'", kind=self.kind, site=self.site_dict())

    def get(self, key: str, default: Any = None) -> Any:
        return dict(self.site).get(key, default)

    def site_dict(self) -> Dict[str, Any]:
        return {k: _thaw(v) for k, v in self.site}

    @property
    def is_elementary(self) -> bool:
        return self.kind in ELEMENTARY

    def sort_key(self) -> Tuple[int, Tuple[Tuple[str, Any], ...]]:
        return KIND_ORDER[self.kind], self.site

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "site": self.site_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Move":
        return cls.make(data["kind"], **data.get("site", {}))


@dataclass(frozen=True)
class MoveSequence:
    initial: IsoSignature
    moves: Tuple[Move, ...]
    final: IsoSignature

    def __len__(self) -> int:
        return len(self.moves)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": FORMAT,
            "initial": self.initial.canonical_string,
            "moves": [m.to_dict() for m in self.moves],
            "final": self.final.canonical_string,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MoveSequence":
        from .error_handler import BadFormat

        if not isinstance(data, dict) or data.get("format") != FORMAT:
            raise BadFormat(f"expected a {FORMAT} document")
        return cls(
            IsoSignature(data["initial"]),
            tuple(Move.from_dict(m) for m in data["moves"]),
            IsoSignature(data["final"]),
        )


@dataclass(frozen=True)
class MoveTrace:
    """How an elementary move relabelled the triangulation.

    ``survivors`` maps old to new indices of untouched tetrahedra, ``labels``
    gives each removed tetrahedron's (missing label, local -> label map) and
    ``created`` the new index of each added facet by its missing label.
    """

    move: Move
    survivors: Dict[int, int]
    labels: Dict[int, Tuple[int, Tuple[int, ...]]]
    created: Dict[int, int]
    inverse: Move

    def created_labels(self, missing: int) -> List[int]:
        return [x for x in range(5) if x != missing]


# ---------------------------------------------------------------- sites

def _check_site(t: Triangulation, move: Move):
    tet = move["tet"]
    if not isinstance(tet, int) or not 0 <= tet < t.size:
        raise IllegalMove(f"no tetrahedron {tet}", tet=tet)
    for key in ("face", "vertex", "apex"):
        value = move.get(key)
        if value is not None and value not in range(4):
            raise IllegalMove(f"bad {key} {value}", key=key, value=value)
    edge = move.get("edge")
    if edge is not None and (len(edge) != 2 or edge[0] == edge[1] or not set(edge) <= set(range(4))):
        raise IllegalMove(f"bad edge {edge}", edge=_thaw(edge))


def _vertex_corners(t: Triangulation, tet: int, v: int) -> List[Tuple[int, int]]:
    seen = {(tet, v)}
    queue = deque([(tet, v)])
    while queue:
        i, x = queue.popleft()
        for k in range(4):
            if k == x:
                continue
            j, p = t.gluings[i][k]
            nxt = (j, p[x])
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return sorted(seen)


def canonical_site(t: Triangulation, move: Move) -> Move:
    """The smallest equivalent site for an elementary move."""
    _check_site(t, move)
    kind, i = move.kind, move["tet"]
    if kind == "1-4":
        return Move.make(kind, tet=i)
    if kind == "2-3":
        k = move["face"]
        j, p = t.gluings[i][k]
        if j == i:
            raise IllegalMove("2-3 needs two distinct tetrahedra", tet=i, face=k)
        tet, face = min((i, k), (j, p[k]))
        return Move.make(kind, tet=tet, face=face)
    if kind == "3-2":
        a, b = move["edge"]
        tet, edge = min((e.tet, tuple(sorted((e.u, e.v)))) for e in edge_star(t, i, a, b))
        return Move.make(kind, tet=tet, edge=edge)
    if kind == "4-1":
        tet, vertex = _vertex_corners(t, i, move["vertex"])[0]
        return Move.make(kind, tet=tet, vertex=vertex)
    raise IllegalMove(f"{kind} is not an elementary move", kind=kind)


def _start_labeling(move: Move) -> Tuple[int, int, Tuple[int, ...]]:
    kind, i = move.kind, move["tet"]
    if kind == "1-4":
        return i, 4, (0, 1, 2, 3)
    if kind == "2-3":
        k = move["face"]
        labels = [0] * 4
        for n, x in enumerate(x for x in range(4) if x != k):
            labels[x] = n
        labels[k] = 3
        return i, 4, tuple(labels)
    if kind == "3-2":
        a, b = move["edge"]
        labels = [0] * 4
        labels[a], labels[b] = 3, 4
        for n, x in enumerate(x for x in range(4) if x not in (a, b)):
            labels[x] = n
        return i, 2, tuple(labels)
    v = move["vertex"]
    labels = [0] * 4
    labels[v] = 4
    for n, x in enumerate(x for x in range(4) if x != v):
        labels[x] = n
    return i, 3, tuple(labels)


def _propagate(t: Triangulation, move: Move) -> Dict[int, Tuple[int, Tuple[int, ...]]]:
    """Label the tetrahedra of D as facets of the 4-simplex, or raise IllegalMove."""
    d_set = D_FACETS[move.kind]
    start, missing, labels = _start_labeling(move)
    assigned = {start: (missing, labels)}
    facet_tet = {missing: start}
    queue = deque([start])
    while queue:
        d = queue.popleft()
        m, lab = assigned[d]
        for w in range(4):
            lw = lab[w]
            if lw not in d_set:
                continue
            j, p = t.gluings[d][w]
            want = [0] * 4
            for u in range(4):
                want[p[u]] = lab[u] if u != w else m
            entry = (lw, tuple(want))
            if j in assigned:
                if assigned[j] != entry:
                    raise IllegalMove(f"{move.kind} site is not embedded", site=move.site_dict())
            else:
                if lw in facet_tet:
                    raise IllegalMove(f"{move.kind} site is not embedded", site=move.site_dict())
                assigned[j] = entry
                facet_tet[lw] = j
                queue.append(j)
    if set(facet_tet) != set(d_set):
        raise IllegalMove(f"{move.kind} site has the wrong star", site=move.site_dict())
    return assigned


def apply_elementary(t: Triangulation, move: Move) -> Tuple[Triangulation, MoveTrace]:
    """Apply one elementary move, returning the result and its trace."""
    if move.kind not in ELEMENTARY:
        raise IllegalMove(f"{move.kind} is not elementary", kind=move.kind)
    _check_site(t, move)
    if move.kind == "2-3" and t.gluings[move["tet"]][move["face"]][0] == move["tet"]:
        raise IllegalMove("2-3 needs two distinct tetrahedra", site=move.site_dict())
    assigned = _propagate(t, move)
    kind = move.kind
    d_set = D_FACETS[kind]

    survivors = [i for i in range(t.size) if i not in assigned]
    new_index = {old: n for n, old in enumerate(survivors)}
    c_missing = [c for c in range(5) if c not in d_set]
    c_index = {c: len(survivors) + n for n, c in enumerate(c_missing)}
    c_labels = {c: [x for x in range(5) if x != c] for c in c_missing}
    rows: List[List[Any]] = [[None] * 4 for _ in range(len(survivors) + len(c_missing))]

    for old in survivors:
        for k, (j, p) in enumerate(t.gluings[old]):
            if j not in assigned:
                rows[new_index[old]][k] = (new_index[j], p)

    for c1, c2 in itertools.permutations(c_missing, 2):
        images = [c_labels[c2].index(c1 if y == c2 else y) for y in c_labels[c1]]
        rows[c_index[c1]][c_labels[c1].index(c2)] = (c_index[c2], Perm4(tuple(images)))

    def c_face(d: int, w: int) -> Tuple[int, int, Perm4]:
        m, lab = assigned[d]
        cl = c_labels[lab[w]]
        phi = tuple(w if y == m else lab.index(y) for y in cl)
        return lab[w], cl.index(m), Perm4(phi)

    for d in sorted(assigned):
        _, lab = assigned[d]
        for w in range(4):
            if lab[w] in d_set:
                continue
            c, face, phi = c_face(d, w)
            j, p = t.gluings[d][w]
            if j in assigned:
                c2, _, phi2 = c_face(j, p[w])
                rows[c_index[c]][face] = (c_index[c2], phi2.inverse() * p * phi)
            else:
                q = p * phi
                rows[c_index[c]][face] = (new_index[j], q)
                rows[new_index[j]][p[w]] = (c_index[c], q.inverse())

    try:
        result = validate(Triangulation(tuple(tuple(r) for r in rows)))
    except GluError as e:
        raise IllegalMove(f"{kind} would produce an invalid gluing: {e}", site=move.site_dict())

    common = set.intersection(*(set(c_labels[c]) for c in c_missing))
    inverse_kind = INVERSE_KIND[kind]
    first = c_missing[0]
    locals_first = c_labels[first]
    if inverse_kind == "1-4":
        inverse = Move.make("1-4", tet=c_index[first])
    elif inverse_kind == "4-1":
        (v,) = common
        inverse = Move.make("4-1", tet=c_index[first], vertex=locals_first.index(v))
    elif inverse_kind == "3-2":
        inverse = Move.make("3-2", tet=c_index[first], edge=sorted(locals_first.index(v) for v in common))
    else:
        (off,) = set(locals_first) - common
        inverse = Move.make("2-3", tet=c_index[first], face=locals_first.index(off))
    inverse = canonical_site(result, inverse)

    trace = MoveTrace(
        move=move,
        survivors=new_index,
        labels=dict(assigned),
        created={c: c_index[c] for c in c_missing},
        inverse=inverse,
    )
    return result, trace


def enumerate_moves(t: Triangulation) -> List[Move]:
    """All legal elementary moves in the order 1-4, 2-3, 3-2, 4-1, sites ascending."""
    moves = [Move.make("1-4", tet=i) for i in range(t.size)]

    for (i, k), (j, _) in triangle_classes(t):
        if i != j:
            moves.append(Move.make("2-3", tet=i, face=k))

    three_two = []
    for cls in edge_classes(t):
        if len(cls) != 3:
            continue
        i, (a, b) = cls[0]
        star = edge_star(t, i, a, b)
        if len(star) != 3 or len({e.tet for e in star}) != 3:
            continue
        move = Move.make("3-2", tet=i, edge=(a, b))
        try:
            _propagate(t, move)
        except IllegalMove:
            continue
        three_two.append(canonical_site(t, move))
    moves += sorted(three_two)

    four_one = []
    for cls in vertex_classes(t):
        if len(cls) != 4 or len({i for i, _ in cls}) != 4:
            continue
        i, v = cls[0]
        move = Move.make("4-1", tet=i, vertex=v)
        try:
            _propagate(t, move)
        except IllegalMove:
            continue
        four_one.append(move)
    moves += sorted(four_one)
    return moves


def apply_move(t: Triangulation, move: Move) -> Triangulation:
    if move.is_elementary:
        return apply_elementary(t, move)[0]
    session = Session(t)
    session.run(move)
    return session.t


def expand_move(t: Triangulation, move: Move) -> List[Move]:
    """The elementary moves a (possibly composite) move stands for."""
    if move.is_elementary:
        return [move]
    session = Session(t)
    session.run(move)
    return list(session.elementary)


def transport_move(move: Move, iso: Isomorphism, target: Triangulation) -> Move:
    """Carry an elementary move through an isomorphism onto ``target``."""
    sigma = iso.vertex_maps[move["tet"]]
    site: Dict[str, Any] = {"tet": iso.tet_map[move["tet"]]}
    for key in ("face", "vertex"):
        if move.get(key) is not None:
            site[key] = sigma[move[key]]
    if move.get("edge") is not None:
        site["edge"] = tuple(sorted(sigma[x] for x in move["edge"]))
    return canonical_site(target, Move.make(move.kind, **site))


# ---------------------------------------------------------------- shelling

@dataclass(frozen=True)
class SetMove:
    """A Pachner move on an abstract simplicial complex given by vertex sets."""

    kind: str
    removed: Tuple[FrozenSet[Hashable], ...]
    added: Tuple[FrozenSet[Hashable], ...]

    def inverse(self) -> "SetMove":
        a, b = self.kind.split("-")
        return SetMove(f"{b}-{a}", self.added, self.removed)


def _order_key(simplex: Iterable[Hashable]) -> Tuple[str, ...]:
    return tuple(sorted(repr(v) for v in simplex))


def _facets(simplex: FrozenSet[Hashable]) -> List[FrozenSet[Hashable]]:
    return [simplex - {v} for v in sorted(simplex, key=repr)]


def _proper_faces(simplex: FrozenSet[Hashable]) -> List[FrozenSet[Hashable]]:
    items = sorted(simplex, key=repr)
    return [frozenset(c) for r in range(1, len(items)) for c in itertools.combinations(items, r)]


def shelling_order(ball: Sequence[Iterable[Hashable]], budget: int = 100000) -> List[int]:
    """A shelling of a pure simplicial ball, as indices into ``ball``.

    Depth-first search with a table of failed partial shellings. Each new
    simplex must meet the earlier ones in j of its facets, 1 <= j <= d, and in
    nothing outside those facets.
    """
    simplices = [frozenset(s) for s in ball]
    if not simplices:
        return []
    d = len(simplices[0]) - 1
    if any(len(s) != d + 1 for s in simplices):
        raise NotShellable("ball is not pure")
    n = len(simplices)
    faces_of = [_proper_faces(s) for s in simplices]
    present: Counter = Counter()
    failed = set()
    nodes = 0

    def fits(idx: int) -> bool:
        s = simplices[idx]
        shared = [f for f in _facets(s) if present[f]]
        if not 1 <= len(shared) <= d:
            return False
        return all(any(face <= f for f in shared) for face in faces_of[idx] if present[face])

    def search(order: List[int], used: FrozenSet[int]) -> Optional[List[int]]:
        nonlocal nodes
        if len(order) == n:
            return list(order)
        if used in failed:
            return None
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"shelling search exceeded {budget} nodes", budget=budget)
        for idx in range(n):
            if idx in used or not (not order or fits(idx)):
                continue
            present.update(faces_of[idx])
            order.append(idx)
            found = search(order, used | {idx})
            order.pop()
            present.subtract(faces_of[idx])
            if found is not None:
                return found
        failed.add(used)
        return None

    result = search([], frozenset())
    if result is None:
        raise NotShellable(f"no shelling of a {n}-simplex complex", simplices=n)
    logger.debug(f"shelling of {n} simplices found after {nodes} nodes")
    return result


def cone_shelling(ball: Sequence[Iterable[Hashable]], order: Sequence[int], apex: Hashable) -> List[SetMove]:
    """Moves turning a shelled ball into the cone from ``apex`` on its boundary.

    Exactly one move per simplex: a 1-(d+1) move on the first, then for a
    simplex meeting the earlier ones in j facets, a (1+j)-(d+1-j) move.
    """
    simplices = [frozenset(s) for s in ball]
    if not order:
        return []
    d = len(simplices[0]) - 1
    first = simplices[order[0]]
    moves = [SetMove(f"1-{d + 1}", (first,), tuple(f | {apex} for f in _facets(first)))]
    seen = set(_facets(first))
    for idx in order[1:]:
        s = simplices[idx]
        shared = [f for f in _facets(s) if f in seen]
        unshared = [f for f in _facets(s) if f not in seen]
        j = len(shared)
        if not 1 <= j <= d:
            raise NotShellable("order is not a shelling", simplex=sorted(map(repr, s)))
        moves.append(SetMove(
            f"{1 + j}-{d + 1 - j}",
            (s,) + tuple(f | {apex} for f in shared),
            tuple(f | {apex} for f in unshared),
        ))
        seen.update(_facets(s))
    return moves


# ---------------------------------------------------------------- sessions

Name = Hashable


class Session:
    """A triangulation being edited move by move, with vertex names per corner.

    Names follow the vertices through every move; composite moves and
    set-level moves find their tetrahedra by name.
    """

    def __init__(self, t: Triangulation, names: Optional[Sequence[Sequence[Name]]] = None):
        self.t = t
        if names is None:
            names = [[("t", i, v) for v in range(4)] for i in range(t.size)]
        self.names: List[Tuple[Name, ...]] = [tuple(n) for n in names]
        self.moves: List[Move] = []
        self.elementary: List[Move] = []
        self.traces: List[MoveTrace] = []
        # names the vertex a VERTEX-ADD inserts, per star tetrahedron, from its endpoints
        self.split_name: Optional[Callable[[Name, Name, Name], Name]] = None
        self._fresh = 0

    def fresh(self) -> Name:
        self._fresh += 1
        return ("new", self._fresh)

    # -- lookup

    def find(self, names: Iterable[Name], among: Optional[Iterable[int]] = None) -> int:
        wanted = frozenset(names)
        pool = range(self.t.size) if among is None else among
        hits = [i for i in pool if len(set(self.names[i])) == 4 and frozenset(self.names[i]) == wanted]
        if len(hits) != 1:
            raise IllegalMove(f"{len(hits)} tetrahedra carry the names {sorted(map(repr, wanted))}")
        return hits[0]

    def local(self, tet: int, name: Name) -> int:
        try:
            return self.names[tet].index(name)
        except ValueError:
            raise IllegalMove(f"tetrahedron {tet} has no vertex {name!r}")

    def rename(self, old: Name, new: Name):
        self.names = [tuple(new if n == old else n for n in row) for row in self.names]

    # -- elementary

    def apply(self, kind: str, new_name: Optional[Name] = None, **site: Any) -> MoveTrace:
        move = Move.make(kind, **site)
        result, trace = apply_elementary(self.t, move)
        names: List[Optional[Tuple[Name, ...]]] = [None] * result.size
        for old, new in trace.survivors.items():
            names[new] = self.names[old]
        label_name: Dict[int, Name] = {}
        for d in sorted(trace.labels):
            _, lab = trace.labels[d]
            for x in range(4):
                label_name.setdefault(lab[x], self.names[d][x])
        if kind == "1-4":
            label_name[4] = new_name if new_name is not None else self.fresh()
        for c, idx in trace.created.items():
            names[idx] = tuple(label_name[y] for y in range(5) if y != c)
        self.t = result
        self.names = names  # type: ignore[assignment]
        self.elementary.append(move)
        self.traces.append(trace)
        return trace

    def record(self, move: Move, new_name: Optional[Name] = None) -> "Session":
        """Apply a move (elementary or composite) and log it as one step."""
        self.run(move, new_name)
        self.moves.append(move)
        return self

    def run(self, move: Move, new_name: Optional[Name] = None):
        if move.is_elementary:
            self.apply(move.kind, new_name, **move.site_dict())
            return
        handler = {
            "2D-(1-3)": self._two_dim_13,
            "2D-(2-2)": self._two_dim_22,
            "2D-(3-1)": self._two_dim_31,
            "VERTEX-ADD": self._vertex_add,
            "CONE-SHELL": self._cone_shell,
        }[move.kind]
        if move.kind != "CONE-SHELL":
            _check_site(self.t, move)
        handler(move, new_name)

    # -- composites

    def _two_dim_13(self, move: Move, new_name: Optional[Name]):
        """(1-4) on the upper tetrahedron, then (2-3) through the old face."""
        i, k = move["tet"], move["face"]
        if self.t.gluings[i][k][0] == i:
            raise IllegalMove("suspension cones coincide", tet=i, face=k)
        first = self.apply("1-4", new_name, tet=i)
        self.apply("2-3", tet=first.created[k], face=3)

    def _two_dim_31(self, move: Move, new_name: Optional[Name]):
        """(3-2) on the edge from the centre to the lower apex, then (4-1)."""
        i, x, up = move["tet"], move["vertex"], move["apex"]
        if x == up:
            raise IllegalMove("vertex and apex coincide", tet=i)
        j, p = self.t.gluings[i][up]
        first = self.apply("3-2", tet=j, edge=(p[x], p[up]))
        _, lab = first.labels[j]
        label_x, label_down = lab[p[x]], lab[p[up]]
        c = first.created[label_down]
        self.apply("4-1", tet=c, vertex=[y for y in range(5) if y != label_down].index(label_x))

    def _two_dim_22(self, move: Move, new_name: Optional[Name]):
        """(2-3) through the upper face over the edge, then (3-2) on the old edge."""
        i, f = move["tet"], move["face"]
        a, b = move["edge"]
        if f in (a, b):
            raise IllegalMove("2D-(2-2) needs a face vertex off the edge", tet=i)
        (up,) = [x for x in range(4) if x not in (a, b, f)]
        first = self.apply("2-3", tet=i, face=f)
        _, lab = first.labels[i]
        la, lb, lu = lab[a], lab[b], lab[up]
        c = first.created[lu]
        locals_c = [y for y in range(5) if y != lu]
        self.apply("3-2", tet=c, edge=sorted((locals_c.index(la), locals_c.index(lb))))

    def _vertex_add(self, move: Move, new_name: Optional[Name]):
        """Bisect an edge of degree k with exactly k elementary moves.

        The star is worked on under role names. Each entry gets its own names
        back once its two final tetrahedra exist, so stars whose tetrahedra
        name the edge differently come out named as they went in.
        """
        i = move["tet"]
        a, b = move["edge"]
        star = edge_star(self.t, i, a, b)
        k = len(star)
        if k < 2 or len({e.tet for e in star}) != k:
            raise IllegalMove("edge star is not embedded", tet=i, edge=[a, b], degree=k)
        u_name, v_name = ("edge", 0), ("edge", 1)
        w = [("ring", m) for m in range(k)]
        x = new_name if new_name is not None else self.fresh()
        restore: List[Dict[Name, Name]] = []
        for m, e in enumerate(star):
            own = self.names[e.tet]
            split = x if self.split_name is None else self.split_name(x, own[e.u], own[e.v])
            restore.append({u_name: own[e.u], v_name: own[e.v], w[m]: own[e.prev], w[(m + 1) % k]: own[e.next],
                            x: split})
            row = list(own)
            row[e.u], row[e.v], row[e.prev], row[e.next] = u_name, v_name, w[m], w[(m + 1) % k]
            self.names[e.tet] = tuple(row)

        def settle(m: int, created: List[int]):
            for end in (u_name, v_name):
                tet = self.find({end, x, w[m], w[(m + 1) % k]}, among=created)
                self.names[tet] = tuple(restore[m][n] for n in self.names[tet])

        trace = self.apply("1-4", x, tet=star[0].tet)
        created = list(trace.created.values())
        settle(0, created)
        cur = self.find({u_name, v_name, x, w[1]}, among=created)
        for m in range(1, k - 1):
            trace = self.apply("2-3", tet=cur, face=self.local(cur, x))
            created = list(trace.created.values())
            settle(m, created)
            cur = self.find({u_name, v_name, x, w[m + 1]}, among=created)
        trace = self.apply("3-2", tet=cur, edge=sorted((self.local(cur, u_name), self.local(cur, v_name))))
        settle(k - 1, list(trace.created.values()))

    def _cone_shell(self, move: Move, new_name: Optional[Name]):
        """Cone a shelled ball of tetrahedra, given in building order, on its boundary."""
        tets = list(move["tets"])
        if len(set(tets)) != len(tets) or not all(0 <= i < self.t.size for i in tets):
            raise IllegalMove("CONE-SHELL needs distinct tetrahedra", tets=tets)
        members = set(tets)
        parent: Dict[Tuple[int, int], Tuple[int, int]] = {}

        def root(c):
            while parent.get(c, c) != c:
                c = parent[c]
            return c

        for i in tets:
            for k, (j, p) in enumerate(self.t.gluings[i]):
                if j in members:
                    for v in range(4):
                        if v != k:
                            ra, rb = root((i, v)), root((j, p[v]))
                            if ra != rb:
                                parent[max(ra, rb)] = min(ra, rb)
        for i in tets:
            self.names[i] = tuple(("ball",) + root((i, v)) for v in range(4))
        ball = [frozenset(self.names[i]) for i in tets]
        if any(len(s) != 4 for s in ball) or len(set(ball)) != len(ball):
            raise IllegalMove("CONE-SHELL region is not simplicial", tets=tets)
        apex = new_name if new_name is not None else self.fresh()
        for set_move in cone_shelling(ball, list(range(len(ball))), apex):
            self.apply_set_move(set_move)

    # -- set-level moves

    def apply_set_move(self, sm: SetMove, up: Optional[Name] = None):
        """Realise a set-level move; 2-dimensional ones act in the suspension below ``up``."""
        removed = [frozenset(s) for s in sm.removed]
        if len(removed[0]) == 4:
            self._apply_set_move_3d(sm, removed)
        else:
            self._apply_set_move_2d(sm, removed, up)

    def _apply_set_move_3d(self, sm: SetMove, removed: List[FrozenSet[Name]]):
        tet = self.find(removed[0])
        if sm.kind == "1-4":
            (x,) = set().union(*sm.added) - removed[0]
            trace = self.apply("1-4", x, tet=tet)
        elif sm.kind == "2-3":
            (x,) = removed[0] - removed[1]
            trace = self.apply("2-3", tet=tet, face=self.local(tet, x))
        elif sm.kind == "3-2":
            edge = frozenset.intersection(*removed)
            trace = self.apply("3-2", tet=tet, edge=sorted(self.local(tet, n) for n in edge))
        else:
            (v,) = frozenset.intersection(*removed)
            trace = self.apply("4-1", tet=tet, vertex=self.local(tet, v))
        made = Counter(frozenset(self.names[i]) for i in trace.created.values())
        if made != Counter(frozenset(s) for s in sm.added):
            raise IllegalMove(f"{sm.kind} did not produce the expected tetrahedra")

    def _apply_set_move_2d(self, sm: SetMove, removed: List[FrozenSet[Name]], up: Optional[Name]):
        if up is None:
            raise IllegalMove("2-dimensional moves need a suspension apex")
        tet = self.find(removed[0] | {up})
        if sm.kind == "1-3":
            (x,) = set().union(*sm.added) - removed[0]
            self.record(Move.make("2D-(1-3)", tet=tet, face=self.local(tet, up)), x)
        elif sm.kind == "3-1":
            (x,) = frozenset.intersection(*removed)
            self.record(Move.make("2D-(3-1)", tet=tet, vertex=self.local(tet, x), apex=self.local(tet, up)))
        elif sm.kind == "2-2":
            edge = removed[0] & removed[1]
            (p1,) = removed[0] - edge
            self.record(Move.make("2D-(2-2)", tet=tet, face=self.local(tet, p1),
                                  edge=sorted(self.local(tet, n) for n in edge)))
        else:
            raise IllegalMove(f"unknown 2-dimensional move {sm.kind}")


def two_dim_move(t: Triangulation, site: Dict[str, Any], kind: str) -> Triangulation:
    """Suspended 2-dimensional move of kind '1-3', '2-2' or '3-1'."""
    return apply_move(t, Move.make(f"2D-({kind})", **site))


def vertex_add_move(t: Triangulation, tet: int, edge: Sequence[int]) -> Triangulation:
    return apply_move(t, Move.make("VERTEX-ADD", tet=tet, edge=tuple(edge)))


# ---------------------------------------------------------------- sequences

def replay(t: Triangulation, sequence: MoveSequence, check: bool = True) -> Triangulation:
    if check and iso_signature(t) != sequence.initial:
        raise IllegalMove("sequence does not start at this triangulation")
    for move in sequence.moves:
        t = apply_move(t, move)
    if check and iso_signature(t) != sequence.final:
        raise IllegalMove("replay did not reach the recorded final signature")
    return t


def elementary_length(t: Triangulation, sequence: MoveSequence) -> int:
    count = 0
    for move in sequence.moves:
        expanded = expand_move(t, move)
        count += len(expanded)
        t = apply_move(t, move)
    return count


def replay_states(t: Triangulation, moves: Sequence[Move]) -> Tuple[List[Triangulation], List[Move]]:
    """Intermediate triangulations and elementary inverse moves along a path."""
    states, inverses = [t], []
    for move in moves:
        for elem in expand_move(t, move):
            t, trace = apply_elementary(t, elem)
            states.append(t)
            inverses.append(trace.inverse)
    return states, inverses


def walk_back(current: Triangulation, states: Sequence[Triangulation],
              inverses: Sequence[Move]) -> Tuple[Triangulation, List[Move]]:
    """Undo a recorded path starting from a triangulation isomorphic to its end.

    Each inverse move is carried through the isomorphism between the recorded
    state and the current one.
    """
    moves = []
    for n in range(len(inverses) - 1, -1, -1):
        iso = find_isomorphism(states[n + 1], current)
        if iso is None:
            raise IllegalMove("walk back lost track of the path")
        move = transport_move(inverses[n], iso, current)
        current = apply_elementary(current, move)[0]
        moves.append(move)
    return current, moves


def invert_sequence(t: Triangulation, sequence: MoveSequence) -> MoveSequence:
    """Elementary sequence leading from the end of ``sequence`` back to ``t``."""
    states, inverses = replay_states(t, sequence.moves)
    moves = [inverses[n] for n in range(len(inverses) - 1, -1, -1)]
    return MoveSequence(sequence.final, tuple(moves), sequence.initial)


# ---------------------------------------------------------------- search

@dataclass
class _Visit:
    triangulation: Triangulation
    parent: Optional[str]
    move: Optional[Move]
    inverse: Optional[Move]


def _path(visits: Dict[str, _Visit], sig: str) -> Tuple[List[Triangulation], List[Move], List[Move]]:
    states, moves, inverses = [], [], []
    while True:
        v = visits[sig]
        states.append(v.triangulation)
        if v.parent is None:
            break
        moves.append(v.move)
        inverses.append(v.inverse)
        sig = v.parent
    states.reverse()
    moves.reverse()
    inverses.reverse()
    return states, moves, inverses


def bounded_pachner_search(a: Triangulation, b: Triangulation, budget: int, node_cap: int = 100000) -> MoveSequence:
    """Bidirectional breadth-first search for a move sequence a -> b.

    Frontiers are expanded in signature order and moves in enumeration order,
    so the witness is deterministic. Raises NotFound when every sequence of
    length <= budget has been tried and BudgetExceeded at the node cap;
    neither is a proof that no sequence exists.
    """
    sa, sb = iso_signature(a), iso_signature(b)
    if sa == sb:
        return MoveSequence(sa, (), sb)
    sides = [
        {sa.canonical_string: _Visit(a, None, None, None)},
        {sb.canonical_string: _Visit(b, None, None, None)},
    ]
    fronts = [[sa.canonical_string], [sb.canonical_string]]
    depths = [0, 0]
    nodes = 2

    while depths[0] + depths[1] < budget:
        side = 0 if depths[0] <= depths[1] else 1
        if not fronts[side]:
            side = 1 - side
            if not fronts[side]:
                break
        visits, other = sides[side], sides[1 - side]
        new_front = []
        meet = None
        for sig in sorted(fronts[side]):
            tri = visits[sig].triangulation
            for move in enumerate_moves(tri):
                try:
                    nt, trace = apply_elementary(tri, move)
                except IllegalMove:
                    continue
                ns = iso_signature(nt).canonical_string
                if ns in visits:
                    continue
                visits[ns] = _Visit(nt, sig, move, trace.inverse)
                nodes += 1
                if nodes > node_cap:
                    raise BudgetExceeded(f"search exceeded {node_cap} nodes", node_cap=node_cap)
                new_front.append(ns)
                if ns in other:
                    meet = ns
                    break
            if meet:
                break
        depths[side] += 1
        fronts[side] = new_front
        logger.debug(f"search depth {depths}, {nodes} nodes")
        if meet:
            _, fwd_moves, _ = _path(sides[0], meet)
            states, _, inverses = _path(sides[1], meet)
            current = sides[0][meet].triangulation
            current, back = walk_back(current, states, inverses)
            witness = MoveSequence(sa, tuple(fwd_moves + back), sb)
            logger.info(f"witness of length {len(witness)} after {nodes} nodes")
            return witness
    raise NotFound(f"no sequence of length <= {budget}", budget=budget, nodes=nodes)
