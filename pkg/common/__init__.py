"""
Common module for the FastMel toolkit.

This module contains shared settings, the object registry, the error
hierarchy and the FDT1 tensor container.
"""

from .app_data import AppData, app_data
from .errors import (
    FastMelError, UsageError, DataError, ShapeError, ContainerError, SpecError,
    DegenerateDirectionError, OverPrunedError, AudioFormatError,
    InvariantError, ThreadLimitError,
)
from .registry import Registry
from .tensor import as_tensor, container_read, container_write

__all__ = [
    'AppData',
    'app_data',
    'Registry',
    'as_tensor',
    'container_read',
    'container_write',
    'FastMelError',
    'UsageError',
    'DataError',
    'ShapeError',
    'ContainerError',
    'SpecError',
    'DegenerateDirectionError',
    'OverPrunedError',
    'AudioFormatError',
    'InvariantError',
    'ThreadLimitError',
]
