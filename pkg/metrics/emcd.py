"""
Elastic mel cepstral distortion.

Weighted DTW over the (T_syn x T_gt) grid of MCD local costs. Row index i walks
the synthesized sequence, column index j the ground truth. A horizontal move
comes from (i, j-1), a vertical move from (i-1, j) and a diagonal move from
(i-1, j-1); each adds w_move * MCD(x_i, y_j). The start cell is weighted as a
diagonal move. Indices are 0-based.
"""

from __future__ import annotations

import logging

import math

from dataclasses import dataclass

from enum import Enum

from typing import List, Optional, Tuple, Union

import numba

import numpy as np

from common.errors import DataError, ShapeError

from .mfcc import as_mfcc, mcd_matrix

logger = logging.getLogger(__name__)

# step codes stored in the traceback matrix; also the tie-break order
_DIAG, _VER, _HOR = 0, 1, 2

_RULE_PATH_MIN, _RULE_PREDECESSOR = 0, 1


class Move(str, Enum):

    HORIZONTAL = "horizontal"

    VERTICAL = "vertical"

    DIAGONAL = "diagonal"


_MOVES = {_DIAG: Move.DIAGONAL, _VER: Move.VERTICAL, _HOR: Move.HORIZONTAL}

_OFFSETS = {_DIAG: (1, 1), _VER: (1, 0), _HOR: (0, 1)}


class StepRule(str, Enum):

    # D(i,j) = min_m D(pred_m) + w_m * c(i,j)
    PATH_MIN = "path_min"

    # m = argmin D(pred_m), then D(i,j) = D(pred_m) + w_m * c(i,j)
    PREDECESSOR = "predecessor"


_RULE_CODES = {StepRule.PATH_MIN: _RULE_PATH_MIN, StepRule.PREDECESSOR: _RULE_PREDECESSOR}


@dataclass(frozen=True)
class TransitionWeights:

    w_hor: float = 1.0

    w_ver: float = 1.0

    w_diag: float = math.sqrt(2.0)

    def __post_init__(self):

        for name in ("w_hor", "w_ver", "w_diag"):
            value = float(getattr(self, name))

            if not math.isfinite(value) or value < 0:
                raise DataError(f"transition weight {name} must be finite and >= 0, got {value}")

            object.__setattr__(self, name, value)

        if not self.w_diag > 0:
            raise DataError("diagonal transition weight must be > 0")

    @classmethod
    def parse(cls, text: str) -> "TransitionWeights":

        """Parse "w_hor,w_ver,w_diag"."""

        parts = [p.strip() for p in str(text).split(",")]

        if len(parts) != 3:
            raise DataError(f"expected three comma-separated weights, got '{text}'")

        try:
            return cls(*(float(p) for p in parts))
        except ValueError as e:
            if isinstance(e, DataError):
                raise

            raise DataError(f"bad transition weights '{text}': {e}") from None

    def scaled(self, c: float) -> "TransitionWeights":
        return TransitionWeights(self.w_hor * c, self.w_ver * c, self.w_diag * c)

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.w_hor, self.w_ver, self.w_diag


@dataclass(frozen=True)
class EmcdReport:

    emcd_raw: float

    emcd_normalized: Optional[float]

    path: List[Tuple[int, int]]

    moves: List[Move]

    t_syn: int

    t_gt: int

    def counts(self) -> dict:
        return {m.value: sum(1 for x in self.moves if x is m) for m in Move}

    def to_dict(self) -> dict:
        return {
            "t_syn": self.t_syn,
            "t_gt": self.t_gt,
            "emcd_raw": self.emcd_raw,
            "emcd_norm": self.emcd_normalized,
            "moves": self.counts(),
        }


@numba.njit(nogil=True, cache=False)
def _accumulate(cost, w_hor, w_ver, w_diag, rule):

    n, m = cost.shape

    acc = np.empty((n, m), dtype=np.float64)

    steps = np.empty((n, m), dtype=np.int64)

    acc[0, 0] = w_diag * cost[0, 0]

    steps[0, 0] = 0

    for j in range(1, m):
        acc[0, j] = acc[0, j - 1] + w_hor * cost[0, j]

        steps[0, j] = 2

    for i in range(1, n):
        acc[i, 0] = acc[i - 1, 0] + w_ver * cost[i, 0]

        steps[i, 0] = 1

    for i in range(1, n):
        for j in range(1, m):
            c = cost[i, j]

            if rule == 0:
                best = acc[i - 1, j - 1] + w_diag * c

                step = 0

                v = acc[i - 1, j] + w_ver * c

                if v < best:
                    best = v

                    step = 1

                h = acc[i, j - 1] + w_hor * c

                if h < best:
                    best = h

                    step = 2
            else:
                prev = acc[i - 1, j - 1]

                w = w_diag

                step = 0

                if acc[i - 1, j] < prev:
                    prev = acc[i - 1, j]

                    w = w_ver

                    step = 1

                if acc[i, j - 1] < prev:
                    prev = acc[i, j - 1]

                    w = w_hor

                    step = 2

                best = prev + w * c

            acc[i, j] = best

            steps[i, j] = step

    return acc, steps


@numba.njit(nogil=True, cache=False)
def _accumulate_last(cost, w_hor, w_ver, w_diag, rule):

    n, m = cost.shape

    prev = np.empty(m, dtype=np.float64)

    cur = np.empty(m, dtype=np.float64)

    prev[0] = w_diag * cost[0, 0]

    for j in range(1, m):
        prev[j] = prev[j - 1] + w_hor * cost[0, j]

    for i in range(1, n):
        cur[0] = prev[0] + w_ver * cost[i, 0]

        for j in range(1, m):
            c = cost[i, j]

            if rule == 0:
                best = prev[j - 1] + w_diag * c

                v = prev[j] + w_ver * c

                if v < best:
                    best = v

                h = cur[j - 1] + w_hor * c

                if h < best:
                    best = h
            else:
                p = prev[j - 1]

                w = w_diag

                if prev[j] < p:
                    p = prev[j]

                    w = w_ver

                if cur[j - 1] < p:
                    p = cur[j - 1]

                    w = w_hor

                best = p + w * c

            cur[j] = best

        prev, cur = cur, prev

    return prev[m - 1]


def _rule_code(step_rule: Union[StepRule, str]) -> int:

    try:
        return _RULE_CODES[StepRule(step_rule)]
    except ValueError:
        raise DataError(f"unknown step rule '{step_rule}' (known: {', '.join(r.value for r in StepRule)})") from None


def _local_costs(x, y, scale) -> np.ndarray:

    x, y = as_mfcc(x), as_mfcc(y)

    if x.dim != y.dim:
        raise ShapeError(f"MFCC dimension mismatch: syn has {x.dim}, gt has {y.dim}")

    return np.ascontiguousarray(mcd_matrix(x, y, scale), dtype=np.float64)


def accumulate(cost: np.ndarray, w: TransitionWeights = TransitionWeights(),
               step_rule: Union[StepRule, str] = StepRule.PATH_MIN) -> Tuple[np.ndarray, np.ndarray]:

    """Accumulated cost matrix and per-cell step codes for a local-cost matrix."""

    cost = np.ascontiguousarray(cost, dtype=np.float64)

    if cost.ndim != 2 or cost.size == 0:
        raise ShapeError(f"local cost matrix must be non-empty 2D, got {cost.shape}")

    return _accumulate(cost, w.w_hor, w.w_ver, w.w_diag, _rule_code(step_rule))


def backtrack(steps: np.ndarray) -> Tuple[List[Tuple[int, int]], List[Move]]:

    i, j = steps.shape[0] - 1, steps.shape[1] - 1

    path = [(i, j)]

    moves = [_MOVES[int(steps[i, j])]]

    while (i, j) != (0, 0):
        di, dj = _OFFSETS[int(steps[i, j])]

        i, j = i - di, j - dj

        path.append((i, j))

        moves.append(_MOVES[int(steps[i, j])])

    path.reverse()

    moves.reverse()

    return path, moves


def emcd(x, y, w: TransitionWeights = TransitionWeights(), normalize: bool = True,
         step_rule: Union[StepRule, str] = StepRule.PATH_MIN, scale: Union[str, float] = 1.0) -> EmcdReport:

    """
    EMCD of a synthesized MFCC sequence x against ground truth y, each [D, T].

    The report carries the raw accumulated cost at the last cell, the value
    divided by T_gt when normalize is set, and the backtracked alignment. The
    first entry of moves labels the start cell (always diagonal).
    """

    cost = _local_costs(x, y, scale)

    acc, steps = accumulate(cost, w, step_rule)

    raw = float(acc[-1, -1])

    path, moves = backtrack(steps)

    t_syn, t_gt = cost.shape

    logger.debug("emcd %dx%d raw=%.6f", t_syn, t_gt, raw)

    return EmcdReport(raw, raw / t_gt if normalize else None, path, moves, t_syn, t_gt)


def emcd_distance(x, y, w: TransitionWeights = TransitionWeights(),
                  step_rule: Union[StepRule, str] = StepRule.PATH_MIN, scale: Union[str, float] = 1.0) -> float:

    """Raw EMCD only, keeping two rows of the accumulation."""

    cost = _local_costs(x, y, scale)

    return float(_accumulate_last(cost, w.w_hor, w.w_ver, w.w_diag, _rule_code(step_rule)))
