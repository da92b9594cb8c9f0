import json

import math

from pathlib import Path

import numpy as np

import pytest

from common.errors import DataError, ShapeError
from metrics.emcd import (
    EmcdReport, Move, StepRule, TransitionWeights, accumulate, emcd, emcd_distance,
)
from metrics.mfcc import mcd_matrix

FIXTURES = Path(__file__).resolve().parents[1] / "res" / "fixtures"

SQRT2 = math.sqrt(2.0)


def brute_force(cost, w):

    """Minimum over every monotone path, each summed in path order."""

    n, m = cost.shape
    best = math.inf
    stack = [(0, 0, w.w_diag * cost[0, 0])]

    while stack:
        i, j, total = stack.pop()
        if (i, j) == (n - 1, m - 1):
            best = min(best, total)
            continue
        if j + 1 < m:
            stack.append((i, j + 1, total + w.w_hor * cost[i, j + 1]))
        if i + 1 < n:
            stack.append((i + 1, j, total + w.w_ver * cost[i + 1, j]))
        if i + 1 < n and j + 1 < m:
            stack.append((i + 1, j + 1, total + w.w_diag * cost[i + 1, j + 1]))

    return best


def path_cost(cost, report, w):

    weight = {Move.HORIZONTAL: w.w_hor, Move.VERTICAL: w.w_ver, Move.DIAGONAL: w.w_diag}
    total = 0.0

    for (i, j), move in zip(report.path, report.moves):
        total += weight[move] * cost[i, j]

    return total


def test_dynamic_program_matches_enumeration():

    rng = np.random.default_rng(2024)

    for _ in range(500):
        d = int(rng.integers(1, 4))
        x = rng.standard_normal((d, int(rng.integers(1, 9))))
        y = rng.standard_normal((d, int(rng.integers(1, 9))))
        w = TransitionWeights(*rng.uniform(0.1, 2.0, size=3))

        report = emcd(x, y, w)
        cost = mcd_matrix(x, y)

        assert report.emcd_raw == brute_force(cost, w)
        assert report.emcd_raw == path_cost(cost, report, w)


def test_path_shape(rng):

    x = rng.standard_normal((13, 7))
    y = rng.standard_normal((13, 5))

    report = emcd(x, y)

    assert report.path[0] == (0, 0)
    assert report.path[-1] == (6, 4)
    assert len(report.moves) == len(report.path)
    assert report.moves[0] is Move.DIAGONAL

    for (i0, j0), (i1, j1), move in zip(report.path, report.path[1:], report.moves[1:]):
        step = (i1 - i0, j1 - j0)
        assert step == {Move.DIAGONAL: (1, 1), Move.VERTICAL: (1, 0), Move.HORIZONTAL: (0, 1)}[move]


def test_identical_sequences(rng):

    x = rng.standard_normal((13, 6))

    report = emcd(x, x)

    assert report.emcd_raw == 0.0
    assert report.emcd_normalized == 0.0
    assert report.path == [(i, i) for i in range(6)]
    assert report.counts() == {"horizontal": 0, "vertical": 0, "diagonal": 6}


def test_single_frame():

    x = np.array([[0.0], [1.0]])
    y = np.array([[1.0], [1.0]])

    report = emcd(x, y, TransitionWeights(1, 1, 3.0))

    assert report.emcd_raw == pytest.approx(3.0 * SQRT2, abs=1e-12)
    assert report.path == [(0, 0)]


def test_weight_homogeneity(rng):

    x = rng.standard_normal((13, 9))
    y = rng.standard_normal((13, 6))
    w = TransitionWeights(0.7, 1.3, 1.9)

    base = emcd_distance(x, y, w)

    for c in (0.5, 2.0, 10.0):
        assert emcd_distance(x, y, w.scaled(c)) == pytest.approx(c * base, rel=1e-9)


def test_swap_symmetry_with_equal_side_weights(rng):

    x = rng.standard_normal((13, 9))
    y = rng.standard_normal((13, 6))

    forward, backward = emcd(x, y), emcd(y, x)

    assert forward.emcd_raw == pytest.approx(backward.emcd_raw, rel=1e-9)
    assert forward.emcd_normalized != pytest.approx(backward.emcd_normalized)


def test_exact_duplicate_costs_nothing(rng):

    y = rng.standard_normal((13, 5))
    x = np.insert(y, 2, y[:, 2], axis=1)

    report = emcd(x, y)

    assert report.emcd_raw == 0.0
    assert report.counts()["vertical"] == 1


def test_noisy_insertion_costs_more(rng):

    y = rng.standard_normal((13, 5))
    x = np.insert(y, 2, y[:, 2] + rng.standard_normal(13) * 0.5, axis=1)

    assert emcd(y, y).emcd_raw == 0.0
    assert emcd(x, y).emcd_raw > 0.0


def test_two_by_two_detour():

    cost = np.array([[0.5, 0.0], [0.0, 2.0]])
    w = TransitionWeights()

    acc, _ = accumulate(cost, w)

    # hor + ver through zero-cost cells beats the diagonal step
    assert acc[1, 1] == SQRT2 * 0.5 + 1.0 * 2.0
    assert acc[1, 1] < SQRT2 * 0.5 + SQRT2 * 2.0
    assert acc[1, 1] == brute_force(cost, w)


def test_step_rules_differ():

    cost = np.array([[1.0, 0.0], [0.0, 10.0]])

    acc, steps = accumulate(cost, step_rule=StepRule.PATH_MIN)

    assert acc[1, 1] == pytest.approx(SQRT2 + 10.0)
    assert steps[1, 1] == 1

    acc, steps = accumulate(cost, step_rule="predecessor")

    # every predecessor ties at sqrt(2), so the diagonal is taken
    assert acc[1, 1] == pytest.approx(SQRT2 + SQRT2 * 10.0)
    assert steps[1, 1] == 0


def test_distance_matches_full_report(rng):

    for rule in StepRule:
        for _ in range(20):
            x = rng.standard_normal((5, int(rng.integers(1, 12))))
            y = rng.standard_normal((5, int(rng.integers(1, 12))))

            assert emcd_distance(x, y, step_rule=rule) == emcd(x, y, step_rule=rule).emcd_raw


def test_normalization_and_report_dict(rng):

    x = rng.standard_normal((3, 4))
    y = rng.standard_normal((3, 8))

    report = emcd(x, y)
    raw_only = emcd(x, y, normalize=False)

    assert report.emcd_normalized == report.emcd_raw / 8
    assert raw_only.emcd_normalized is None

    d = report.to_dict()

    assert d["t_syn"] == 4 and d["t_gt"] == 8
    assert sum(d["moves"].values()) == len(report.path)


def test_db_scale(rng):

    x = rng.standard_normal((3, 4))
    y = rng.standard_normal((3, 5))

    assert emcd(x, y, scale="db").emcd_raw == pytest.approx(10 / math.log(10) * emcd(x, y).emcd_raw, rel=1e-12)


def test_ramp_fixture():

    case = json.loads((FIXTURES / "emcd_8x8.json").read_text())

    report = emcd(np.array(case["syn"]), np.array(case["gt"]), TransitionWeights(*case["weights"]))

    assert isinstance(report, EmcdReport)
    assert report.emcd_raw == pytest.approx(case["emcd_raw"], rel=1e-12)
    assert report.emcd_normalized == pytest.approx(case["emcd_norm"], rel=1e-12)


def test_weights_parse():

    assert TransitionWeights.parse("1, 2, 3").as_tuple() == (1.0, 2.0, 3.0)

    with pytest.raises(DataError, match="three comma-separated"):
        TransitionWeights.parse("1,2")

    with pytest.raises(DataError, match="bad transition weights"):
        TransitionWeights.parse("1,x,2")

    with pytest.raises(DataError, match="must be > 0"):
        TransitionWeights(1, 1, 0)

    with pytest.raises(DataError, match="finite"):
        TransitionWeights(-1, 1, 1)

    with pytest.raises(DataError, match="finite"):
        TransitionWeights.parse("1,inf,1")


def test_errors(rng):

    with pytest.raises(ShapeError):
        emcd(rng.standard_normal((13, 3)), rng.standard_normal((12, 3)))

    with pytest.raises(ShapeError):
        emcd(np.zeros((13, 0)), np.zeros((13, 3)))

    with pytest.raises(DataError, match="unknown step rule"):
        emcd_distance(np.zeros((2, 2)), np.zeros((2, 2)), step_rule="greedy")
