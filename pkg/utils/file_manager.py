"""
File Manager utility for reading and writing the toolkit's JSON documents.
"""

import json
import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.error_handler import BadFormat
from core.pachner import MoveSequence
from core.pi1 import Presentation
from core.polysystem import PolySystem
from core.quotient import QuotientSpec
from core.structure import HyperbolicStructure
from core.tricore import Triangulation, validate

logger = logging.getLogger(__name__)

JSON_INDENT = 2


def dumps(document: Any) -> str:
    """Canonical text for any document: sorted keys, fixed indent."""
    return json.dumps(document, sort_keys=True, indent=JSON_INDENT, ensure_ascii=False)


class FileManager:
    """Loads input documents and stores reports, structures and move sequences."""

    def __init__(self, base_dir: str = "runs"):
        self.base_dir = Path(base_dir)
        self.report_dir = self.base_dir / "reports"
        self.structure_dir = self.base_dir / "structures"
        self.sequence_dir = self.base_dir / "sequences"

    def _ensure_directories(self):
        """Ensure all output directories exist."""
        for directory in [self.base_dir, self.report_dir, self.structure_dir, self.sequence_dir]:
            directory.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------ reading

    def read_document(self, path: str) -> Any:
        """Parse a JSON document from a path, or from stdin when path is '-'."""
        try:
            if path == "-":
                return json.load(sys.stdin)
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise BadFormat(f"{path} is not valid JSON: {e.msg}", path=path, line=e.lineno)
        except OSError as e:
            raise BadFormat(f"cannot read {path}: {e.strerror}", path=path)

    def load_triangulation(self, path: str) -> Triangulation:
        return validate(self.read_document(path))

    def load_sequence(self, path: str) -> MoveSequence:
        try:
            return MoveSequence.from_dict(self.read_document(path))
        except (KeyError, TypeError, ValueError) as e:
            raise BadFormat(f"malformed move sequence in {path}: {e}", path=path)

    def load_quotient_spec(self, path: str) -> QuotientSpec:
        return QuotientSpec.from_dict(self.read_document(path))

    def load_presentation(self, path: str) -> Presentation:
        return Presentation.from_dict(self.read_document(path))

    def load_structure(self, path: str, t: Triangulation) -> HyperbolicStructure:
        return HyperbolicStructure.from_dict(self.read_document(path), t)

    # ------------------------------------------------------------ writing

    def write_document(self, document: Any, path: Optional[str] = None) -> Optional[str]:
        """Write canonical JSON to ``path``, or to stdout when no path is given."""
        text = dumps(document)
        if path is None or path == "-":
            sys.stdout.write(text + "\n")
            return None
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8') as f:
            f.write(text + "\n")
        logger.debug(f"wrote {target}")
        return str(target)

    def save_report(self, name: str, report: Dict[str, Any]) -> str:
        """Store a report under reports/, named after the command and the run time."""
        self._ensure_directories()
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        command = report.get("command", "report")
        return self.write_document(report, str(self.report_dir / f"{timestamp}_{command}_{name}.json"))

    def save_structure(self, name: str, structure: HyperbolicStructure) -> str:
        self._ensure_directories()
        return self.write_document(structure.to_dict(), str(self.structure_dir / f"{name}.hst.json"))

    def save_sequence(self, name: str, sequence: MoveSequence) -> str:
        self._ensure_directories()
        return self.write_document(sequence.to_dict(), str(self.sequence_dir / f"{name}.mvs.json"))

    def save_poly_system(self, name: str, system: PolySystem) -> str:
        """Write a psy/1 dump next to the structures."""
        self._ensure_directories()
        return self.write_document(system.to_dict(), str(self.structure_dir / f"{name}.psy.json"))

    # ------------------------------------------------------------ listing

    def list_outputs(self) -> Dict[str, List[str]]:
        """List stored files organized by kind."""
        files: Dict[str, List[str]] = {"reports": [], "structures": [], "sequences": []}
        for kind, directory in [("reports", self.report_dir), ("structures", self.structure_dir),
                                ("sequences", self.sequence_dir)]:
            if directory.exists():
                files[kind] = sorted(str(p) for p in directory.glob("*.json"))
        return files

    def get_file_info(self, file_path: str) -> Dict[str, Any]:
        """Get size, modification time and document format of a stored file."""
        try:
            stat = os.stat(file_path)
            document = self.read_document(file_path)
        except (OSError, BadFormat) as e:
            return {"error": str(e)}
        return {
            "name": os.path.basename(file_path),
            "path": file_path,
            "size": stat.st_size,
            "modified": datetime.fromtimestamp(stat.st_mtime).isoformat(),
            "format": document.get("format") if isinstance(document, dict) else None,
        }
