"""
Speech fidelity metrics: MFCCs, MCD and the elastic (weighted DTW) EMCD.
"""

from .mfcc import MfccSequence, mel_to_mfcc, mcd_frame, mcd_matrix, mcd_scale
from .emcd import Move, StepRule, TransitionWeights, EmcdReport, accumulate, backtrack, emcd, emcd_distance
from .corpus import FeatureConfig, CorpusRow, CorpusResult, load_mfcc, read_pairs, score_pair, emcd_corpus

__all__ = [
    "MfccSequence",
    "mel_to_mfcc",
    "mcd_frame",
    "mcd_matrix",
    "mcd_scale",
    "Move",
    "StepRule",
    "TransitionWeights",
    "EmcdReport",
    "accumulate",
    "backtrack",
    "emcd",
    "emcd_distance",
    "FeatureConfig",
    "CorpusRow",
    "CorpusResult",
    "load_mfcc",
    "read_pairs",
    "score_pair",
    "emcd_corpus",
]
