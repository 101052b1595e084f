"""
Pipeline orchestration behind the ``glu`` subcommands.

Every stage returns a plain report dictionary carrying a ``format`` key and
a ``status`` of ``completed`` or ``inconclusive``. Reports hold no
timestamps or thread counts, so a fixed configuration and fixed inputs give
identical reports.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import PipelineConfig
from .error_handler import BudgetExceeded, ConfigError, ErrorHandler, GluError, NoSolutionFound, NotFound
from .hypgeom import systole_estimate
from .pachner import MoveSequence, bounded_pachner_search, elementary_length, enumerate_moves, replay
from .pi1 import abelianization, face_pairing_words, presentation_from_triangulation
from .polysystem import BoxChoice, PolySystem, build_poly_system
from .quotient import candidate_count, enumerate_quotients
from .structure import (
    HyperbolicStructure,
    edge_length_bound_check,
    face_pairing_isometries,
    solve_structure,
    verify_poincare_conditions,
)
from .subdivision import length_bound, subdivision_move_sequence
from .tricore import (
    Triangulation,
    is_closed_3_manifold,
    is_connected,
    is_orientable,
    iso_signature,
    skeleton,
    subdivide_barycentric,
    subdivide_coned,
    vertex_links,
)

logger = logging.getLogger(__name__)

REPORT_FORMAT = "rep/1"
COMPLETED = "completed"
INCONCLUSIVE = "inconclusive"
EXACT_DIGITS = 1000


@dataclass(frozen=True)
class ReferenceBound:
    """f = coefficient * 24^exponent with exponent = 4 + 3m.

    f is only expanded to an integer while it has at most EXACT_DIGITS
    digits; beyond that it is carried by its exponent and log10.
    """

    m: int
    coefficient: int
    exponent: int

    @property
    def log10_f(self) -> float:
        if self.coefficient == 0:
            return -math.inf
        return math.log10(self.coefficient) + self.exponent * math.log10(24)

    @property
    def f(self) -> Optional[int]:
        if self.log10_f > EXACT_DIGITS:
            return None
        return self.coefficient * 24 ** self.exponent

    def cap(self, move_cap: int) -> int:
        f = self.f
        return move_cap if f is None else min(f, move_cap)

    def to_dict(self) -> Dict[str, Any]:
        f = self.f
        return {
            "m": self.m,
            "f": str(f) if f is not None else None,
            "f_base": 24,
            "f_exponent": self.exponent,
            "f_coefficient": self.coefficient,
            "f_log10": round(self.log10_f, 6) if self.coefficient else None,
        }


def kalelkar_phanse_bound(t1: int, t2: int, L: float, inj: float) -> ReferenceBound:
    """m = max(0, ceil((2 cosh^2 L + 1) ln(L / inj))) and
    f = 32 * 24^(4 + 3m) * t1 * t2 * (t1 + t2).

    Raises:
        ConfigError: non-positive or non-finite inputs, or an L so large
            that m overflows a float
    """
    if min(t1, t2) < 0:
        raise ConfigError("tetrahedron counts must be non-negative", t1=t1, t2=t2)
    if not (math.isfinite(L) and math.isfinite(inj) and L > 0 and inj > 0):
        raise ConfigError("L and inj must be positive and finite", L=L, inj=inj)
    if L <= inj:
        m = 0
    else:
        try:
            m = max(0, math.ceil((math.cosh(2.0 * L) + 2.0) * math.log(L / inj)))
        except OverflowError:
            raise ConfigError(f"edge length {L} is too large for the reference bound", L=L)
    return ReferenceBound(m, 32 * t1 * t2 * (t1 + t2), 4 + 3 * m)


@dataclass
class CompareReport:
    verdict: str
    signatures: Tuple[str, str]
    cap: int
    bound_m: Optional[int]
    bound: ReferenceBound
    witness: Optional[MoveSequence] = None
    gates: Dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None

    @property
    def status(self) -> str:
        return COMPLETED if self.verdict == "homeomorphic-witness" else INCONCLUSIVE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": REPORT_FORMAT,
            "command": "compare",
            "status": self.status,
            "verdict": self.verdict,
            "signatures": list(self.signatures),
            "bounds": {**self.bound.to_dict(), "m": self.bound_m, "cap": self.cap},
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "gates": self.gates,
            "reason": self.reason,
        }


def _finite(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


class Pipeline:
    """Runs the stages with one configuration and one error log."""

    def __init__(self, config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig.from_env()
        self.error_handler = ErrorHandler()

    def _report(self, command: str, status: str = COMPLETED, **body: Any) -> Dict[str, Any]:
        report = {"format": REPORT_FORMAT, "command": command, "status": status}
        report.update(body)
        return report

    def validate(self, t: Triangulation) -> Dict[str, Any]:
        orientation = is_orientable(t)
        links = vertex_links(t)
        return self._report(
            "validate",
            size=t.size,
            signature=iso_signature(t).canonical_string,
            skeleton=skeleton(t).to_dict(),
            connected=is_connected(t),
            orientable=orientation.orientable,
            closed_manifold=is_closed_3_manifold(t),
            links=[link.to_dict() for link in links],
        )

    def moves(self, t: Triangulation, sequence: Optional[MoveSequence] = None) -> Dict[str, Any]:
        if sequence is None:
            options = enumerate_moves(t)
            return self._report("moves", moves=[m.to_dict() for m in options], count=len(options))
        result = replay(t, sequence)
        return self._report(
            "moves",
            applied=len(sequence),
            result=result.to_dict(),
            signature=iso_signature(result).canonical_string,
        )

    def subdivide(self, t: Triangulation, kind: str = "coned") -> Tuple[MoveSequence, Dict[str, Any]]:
        """Subdivide t and witness the subdivision with Pachner moves."""
        builders = {"coned": subdivide_coned, "barycentric": subdivide_barycentric}
        if kind not in builders:
            raise ConfigError("subdivision kind must be 'coned' or 'barycentric'", kind=kind)
        sub = builders[kind](t)
        sequence = subdivision_move_sequence(t, sub, shelling_budget=self.config.shelling_budget)
        return sequence, self._report(
            "subdivide",
            kind=kind,
            size=sub.triangulation.size,
            result=sub.triangulation.to_dict(),
            signature=sequence.final.canonical_string,
            moves=len(sequence),
            elementary=elementary_length(t, sequence),
            bound=length_bound(t.size, sub.triangulation.size),
        )

    def quotients(self, t: Triangulation, oriented: bool = True, degree_one: bool = False,
                  manifold: bool = True, budget: Optional[int] = None) -> Dict[str, Any]:
        stream = enumerate_quotients(t, oriented, degree_one, manifold,
                                     budget or self.config.quotient_budget, self.config.threads)
        found = [r.to_dict() for r in stream]
        return self._report(
            "quotients",
            COMPLETED if stream.complete else INCONCLUSIVE,
            quotients=found,
            scanned=stream.scanned,
            rejected=dict(sorted(stream.rejected.items())),
            complete=stream.complete,
            candidates=candidate_count(t, oriented),
        )

    def pi1(self, t: Triangulation, words: bool = False, budget: Optional[int] = None) -> Dict[str, Any]:
        p = presentation_from_triangulation(t)
        body: Dict[str, Any] = {"presentation": p.to_dict(), "abelianization": list(abelianization(p))}
        if words:
            try:
                body["face_pairing_words"] = face_pairing_words(
                    t, budget=budget or self.config.word_budget, threads=self.config.threads).to_dict()
            except BudgetExceeded as e:
                body["face_pairing_words"] = None
                return self._report("pi1", INCONCLUSIVE, reason=str(e), **body)
        return self._report("pi1", **body)

    def poly_system(self, t: Triangulation) -> PolySystem:
        boxes = BoxChoice.default(t) if self.config.mode == "box" else None
        return build_poly_system(t, self.config.mode, boxes)

    def geometrize(self, t: Triangulation, seeds: Optional[Sequence[np.ndarray]] = None,
                   system: bool = True, poly: Optional[PolySystem] = None,
                   ) -> Tuple[Optional[HyperbolicStructure], Dict[str, Any]]:
        """Solve, verify, develop and gate one structure.

        A prebuilt system may be passed as poly. Returns the structure (None
        when the solver gave up) with its report.
        """
        cfg = self.config
        body: Dict[str, Any] = {"mode": cfg.mode}
        if poly is None and system:
            poly = self.poly_system(t)
        if poly is not None:
            body["stats"] = poly.stats.to_dict()
        try:
            s = solve_structure(poly or t, seeds=seeds, restarts=cfg.restarts, tolerances=cfg.tolerances,
                                seed=cfg.seed, threads=cfg.threads)
        except NoSolutionFound as e:
            self.error_handler.handle_error(e, "geometrize")
            return None, self._report("geometrize", INCONCLUSIVE, reason=str(e), **body)

        poincare = verify_poincare_conditions(s, t, cfg.tolerances)
        body["poincare"] = poincare.to_dict()
        try:
            development = face_pairing_isometries(s, t, tolerances=cfg.tolerances)
        except GluError as e:
            self.error_handler.handle_error(e, "develop")
            return s, self._report("geometrize", INCONCLUSIVE, reason=str(e),
                                   structure=s.to_dict(), **body)
        systole = systole_estimate(development.generators(), cfg.word_length)
        s.systole = systole
        body.update(
            structure=s.to_dict(),
            systole=_finite(systole),
            max_edge=max(s.lengths, default=0.0),
            edge_gate=bool(math.isfinite(systole) and edge_length_bound_check(s, cfg.c, systole)),
        )
        return s, self._report("geometrize", COMPLETED if poincare.passed else INCONCLUSIVE, **body)

    def _structure_or_none(self, t: Triangulation) -> Optional[HyperbolicStructure]:
        try:
            return self.geometrize(t, system=False)[0]
        except GluError as e:
            self.error_handler.handle_error(e, "compare")
            return None

    def compare(self, a: Triangulation, b: Triangulation,
                structures: Optional[Tuple[Optional[HyperbolicStructure], Optional[HyperbolicStructure]]] = None,
                geometry: bool = True) -> CompareReport:
        """Search for a Pachner witness between a and b, within the configured cap.

        Never concludes that a and b differ: an unsuccessful search is reported
        as inconclusive together with the full reference bound.
        """
        cfg = self.config
        sigs = (iso_signature(a).canonical_string, iso_signature(b).canonical_string)
        gates: Dict[str, Any] = {}
        lengths: List[float] = []
        systoles: List[float] = []
        if structures is None and geometry:
            structures = (self._structure_or_none(a), self._structure_or_none(b))
        for name, s in zip(("a", "b"), structures or (None, None)):
            if s is None:
                gates[name] = None
                continue
            systole = s.systole if s.systole is not None else math.inf
            lengths += s.lengths
            systoles.append(systole)
            gates[name] = {
                "max_edge": max(s.lengths, default=0.0),
                "systole": _finite(systole),
                "edge_gate": bool(math.isfinite(systole) and edge_length_bound_check(s, cfg.c, systole)),
            }

        if lengths and systoles and all(math.isfinite(x) for x in systoles):
            bound = kalelkar_phanse_bound(a.size, b.size, max(lengths), min(systoles) / 2.0)
            m: Optional[int] = bound.m
        else:
            bound, m = kalelkar_phanse_bound(a.size, b.size, 1.0, 1.0), None
        cap = bound.cap(cfg.move_cap)
        logger.info(f"compare: {a.size} and {b.size} tetrahedra, cap {cap}, reference bound m={m}")
        try:
            witness = bounded_pachner_search(a, b, cap, cfg.node_cap)
        except (NotFound, BudgetExceeded) as e:
            self.error_handler.handle_error(e, "compare")
            return CompareReport("inconclusive", sigs, cap, m, bound, None, gates, str(e))
        return CompareReport("homeomorphic-witness", sigs, cap, m, bound, witness, gates)
