"""
Post-hoc model compression: filter pruning and the weight-norm fold.
"""

from .prune import (
    SCORES, ChannelUnit, PruneReport, UnitReport,
    filter_importance, find_units, unit_scores, apply_removal, prune,
)
from .fold import fold_weight_norm

__all__ = [
    "SCORES",
    "ChannelUnit",
    "PruneReport",
    "UnitReport",
    "filter_importance",
    "find_units",
    "unit_scores",
    "apply_removal",
    "prune",
    "fold_weight_norm",
]
