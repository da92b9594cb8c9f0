"""
Main console module.

Contains the argument parser and the per-command handlers.
"""

from .main_console import MainConsole
from .command_handler import CommandHandler, load_model

__all__ = ['MainConsole', 'CommandHandler', 'load_model']
