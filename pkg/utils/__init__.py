"""
Utility modules for document I/O and report rendering.
"""

from .file_manager import FileManager, dumps
from .templates import TemplateManager

__all__ = [
    'FileManager',
    'TemplateManager',
    'dumps',
]
