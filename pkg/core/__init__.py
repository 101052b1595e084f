"""
Core modules for triangulated 3-manifolds: gluings, Pachner moves,
quotients, hyperbolic structures and fundamental groups.
"""

from .config import PipelineConfig, Tolerances, setup_logging
from .error_handler import ErrorHandler, GluError
from .tricore import Perm4, Triangulation, iso_signature, validate
from .pachner import Move, MoveSequence, Session, bounded_pachner_search
from .quotient import QuotientSpec, apply_identifications, enumerate_quotients
from .hypgeom import Isometry, PointUHS
from .structure import HyperbolicStructure, face_pairing_isometries, solve_structure
from .pi1 import Presentation, face_pairing_words, presentation_from_triangulation
from .pipeline import Pipeline, kalelkar_phanse_bound

__all__ = [
    'PipelineConfig',
    'Tolerances',
    'setup_logging',
    'ErrorHandler',
    'GluError',
    'Perm4',
    'Triangulation',
    'iso_signature',
    'validate',
    'Move',
    'MoveSequence',
    'Session',
    'bounded_pachner_search',
    'QuotientSpec',
    'apply_identifications',
    'enumerate_quotients',
    'Isometry',
    'PointUHS',
    'HyperbolicStructure',
    'face_pairing_isometries',
    'solve_structure',
    'Presentation',
    'face_pairing_words',
    'presentation_from_triangulation',
    'Pipeline',
    'kalelkar_phanse_bound',
]
