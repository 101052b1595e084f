"""
Error Handler module for structured errors and input validation.
"""

import json
import logging
import traceback
from datetime import datetime
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INCONCLUSIVE = 2


class GluError(Exception):
    """Base class for every error raised by the toolkit."""

    code = EXIT_INVALID

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.__class__.__name__)
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "details": {k: _jsonable(v) for k, v in sorted(self.details.items())},
            "code": self.code,
        }


# Gluing validation
class UnpairedFace(GluError):
    pass


class NonInvolutive(GluError):
    pass


class SelfGluedFace(GluError):
    pass


class BadPermutation(GluError):
    pass


class BadFormat(GluError):
    pass


class DisconnectedGraph(GluError):
    pass


Disconnected = DisconnectedGraph


class IllegalMove(GluError):
    pass


class NotASubdivision(GluError):
    pass


# a produced sequence broke its proven length bound
class LengthBoundExceeded(GluError):
    pass


# Search sentinels: never a proof of absence
class BudgetExceeded(GluError):
    code = EXIT_INCONCLUSIVE


class NotFound(GluError):
    code = EXIT_INCONCLUSIVE


class NotShellable(GluError):
    code = EXIT_INCONCLUSIVE


class NoSolutionFound(GluError):
    code = EXIT_INCONCLUSIVE


# Quotients
class SelfIdentification(GluError):
    pass


class FaceOvercrowding(GluError):
    pass


class InconsistentMaps(GluError):
    pass


class NotOrientable(GluError):
    pass


class DegreeMismatch(GluError):
    pass


# Geometry
class DegeneratePoint(GluError):
    pass


class DegenerateTetrahedron(GluError):
    pass


class DevelopmentClash(GluError):
    pass


class ConfigError(GluError):
    pass


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


class ErrorHandler:
    """Validates raw documents and records structured error information."""

    def __init__(self):
        self.error_log: List[Dict[str, Any]] = []
        self.validation_rules: Dict[str, Dict[str, Any]] = {}
        self.recovery_strategies: Dict[str, str] = {}
        self._setup_default_validation_rules()
        self._setup_recovery_strategies()

    def _setup_default_validation_rules(self):
        """Setup default validation rules."""
        self.validation_rules = {
            "glu3/1": {
                "required_fields": ["format", "tetrahedra", "gluings"],
                "max_tetrahedra": 100000,
                "warn_tetrahedra": 500,
            },
            "quo/1": {"required_fields": ["format", "ids"]},
            "mvs/1": {"required_fields": ["format", "initial", "moves", "final"]},
        }

    def _setup_recovery_strategies(self):
        """Setup suggestions shown next to each error family."""
        self.recovery_strategies = {
            "unpairedface": "Every face needs exactly one partner record; check the gluings table size.",
            "noninvolutive": "The record for the partner face must carry the inverse permutation.",
            "selfgluedface": "A face may not be glued to itself; pair it with a different face.",
            "badpermutation": "Permutations are lists of the four labels 0..3, each used once.",
            "badformat": "Documents need a 'format' key naming a supported version.",
            "disconnectedgraph": "Pipeline commands need a connected gluing; split the input first.",
            "budgetexceeded": "Raise the budget; a partial result is not evidence of absence.",
            "notfound": "Nothing was found within the caps; the answer is inconclusive.",
            "nosolutionfound": "Try more restarts or a different seed; this is not a proof of nonexistence.",
            "notshellable": "Retry on the barycentric subdivision.",
            "notasubdivision": "Carriers must tile each tetrahedron, and no face may be glued to its own tetrahedron.",
            "lengthboundexceeded": "The subdivision sequence outgrew its length bound; report the input gluing.",
            "configerror": "Budgets and tolerances must all be positive.",
        }

    def validate_gluing_document(self, raw: Any) -> Dict[str, Any]:
        """Check a glu3/1 document without raising."""
        from .tricore import validate

        validation_result = {
            "valid": True,
            "errors": [],
            "warnings": [],
            "suggestions": []
        }

        if not isinstance(raw, dict):
            validation_result["valid"] = False
            validation_result["errors"].append("Document must be a JSON object.")
            return validation_result

        rules = self.validation_rules["glu3/1"]
        missing = [f for f in rules["required_fields"] if f not in raw]
        if missing:
            validation_result["valid"] = False
            validation_result["errors"].append(f"Missing fields: {', '.join(missing)}")
            return validation_result

        count = raw.get("tetrahedra")
        if isinstance(count, int) and count > rules["max_tetrahedra"]:
            validation_result["valid"] = False
            validation_result["errors"].append("Too many tetrahedra for an in-memory gluing.")
            return validation_result
        if isinstance(count, int) and count > rules["warn_tetrahedra"]:
            validation_result["warnings"].append(
                "Large gluing: signatures and searches scale badly past a few hundred tetrahedra."
            )

        try:
            validate(raw)
        except GluError as e:
            validation_result["valid"] = False
            validation_result["errors"].append(f"{type(e).__name__}: {e}")
            suggestion = self.recovery_strategies.get(type(e).__name__.lower())
            if suggestion:
                validation_result["suggestions"].append(suggestion)

        return validation_result

    def handle_error(self, error: Exception, context: str = "") -> Dict[str, Any]:
        """Record an error and return its structured description."""
        if isinstance(error, GluError):
            details = error.to_dict()["details"]
            code = error.code
        else:
            details = {}
            code = EXIT_INVALID

        error_info = {
            "timestamp": datetime.now().isoformat(),
            "error_type": type(error).__name__,
            "error_message": str(error),
            "context": context,
            "details": details,
            "code": code,
            "traceback": traceback.format_exc(),
            "suggestion": self.recovery_strategies.get(type(error).__name__.lower()),
        }

        self.error_log.append(error_info)
        if code == EXIT_INCONCLUSIVE:
            logger.warning(f"Inconclusive in {context}: {error}")
        else:
            logger.error(f"Error in {context}: {error}")

        return error_info

    @staticmethod
    def public_view(error_info: Dict[str, Any]) -> Dict[str, Any]:
        """The stable part of an error record, suitable for stderr."""
        return {
            "format": "err/1",
            "error": error_info["error_type"],
            "message": error_info["error_message"],
            "context": error_info["context"],
            "details": error_info["details"],
            "suggestion": error_info["suggestion"],
        }

    def get_error_summary(self) -> Dict[str, Any]:
        """Get summary of all errors."""
        if not self.error_log:
            return {"total_errors": 0, "inconclusive": 0}

        error_types: Dict[str, int] = {}
        for error in self.error_log:
            error_type = error.get("error_type", "Unknown")
            error_types[error_type] = error_types.get(error_type, 0) + 1

        return {
            "total_errors": len(self.error_log),
            "inconclusive": sum(1 for e in self.error_log if e["code"] == EXIT_INCONCLUSIVE),
            "error_types": error_types,
            "recent_errors": self.error_log[-5:]
        }

    def clear_error_log(self):
        """Clear the error log."""
        self.error_log.clear()

    def export_error_log(self, file_path: Optional[str] = None) -> str:
        """Export error log to file."""
        if not file_path:
            file_path = f"error_log_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"

        with open(file_path, 'w') as f:
            json.dump(self.error_log, f, indent=2)

        return file_path
