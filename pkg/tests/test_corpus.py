import csv

import numpy as np

import pytest

from audio.features import MelSpectrogram, write_wav
from common.errors import ContainerError, DataError
from common.tensor import container_write
from metrics.corpus import (
    CSV_FIELDS, FeatureConfig, emcd_corpus, load_mfcc, read_pairs, score_pair, summarize,
)
from metrics.emcd import emcd


def write_mel(path, rng, frames):

    MelSpectrogram(rng.random((20, frames)).astype(np.float32) + 0.01).save(path)

    return path


def test_load_mfcc_sources(tmp_path, rng):

    mel = write_mel(tmp_path / "a.fdt1", rng, 6)
    mfcc = tmp_path / "b.fdt1"
    container_write(mfcc, [("mfcc", rng.standard_normal((13, 4)).astype(np.float32))])

    assert load_mfcc(mel).coeffs.shape == (13, 6)
    assert load_mfcc(mfcc).coeffs.shape == (13, 4)

    other = tmp_path / "c.fdt1"
    container_write(other, [("w", np.ones(2, np.float32))])

    with pytest.raises(ContainerError, match="neither"):
        load_mfcc(other)


def test_load_mfcc_from_wav(tmp_path):

    t = np.arange(4096) / 22050.0
    path = tmp_path / "tone.wav"
    write_wav(path, 0.5 * np.sin(2 * np.pi * 440.0 * t), 22050)

    mfcc = load_mfcc(path, FeatureConfig(n_coeffs=20))

    assert mfcc.dim == 20
    assert mfcc.frames == 1 + (4096 - 1024) // 256


def test_read_pairs_resolves_relative_paths(tmp_path):

    sub = tmp_path / "lists"
    sub.mkdir()
    (sub / "pairs.csv").write_text("syn_path,gt_path\nsyn/a.fdt1,gt/a.fdt1\n\n/abs/b.fdt1,gt/b.fdt1\n")

    pairs = read_pairs(sub / "pairs.csv")

    assert pairs == [
        (sub / "syn" / "a.fdt1", sub / "gt" / "a.fdt1"),
        (sub.joinpath("/abs/b.fdt1"), sub / "gt" / "b.fdt1"),
    ]


def test_read_pairs_errors(tmp_path):

    bad_header = tmp_path / "h.csv"
    bad_header.write_text("syn,gt\na,b\n")

    with pytest.raises(DataError, match="header"):
        read_pairs(bad_header)

    bad_row = tmp_path / "r.csv"
    bad_row.write_text("syn_path,gt_path\na,b,c\n")

    with pytest.raises(DataError, match=r"r\.csv:2: expected 2 columns"):
        read_pairs(bad_row)


def test_duplicate_pairs_score_zero(tmp_path, rng):

    f = write_mel(tmp_path / "f.fdt1", rng, 5)

    result = emcd_corpus([(f, f)] * 3)

    assert [r.emcd_raw for r in result.rows] == [0.0, 0.0, 0.0]
    assert result.mean == 0.0
    assert result.std == 0.0
    assert result.failed == 0


def test_unreadable_pair_is_reported_and_skipped(tmp_path, rng):

    a = write_mel(tmp_path / "a.fdt1", rng, 5)
    b = write_mel(tmp_path / "b.fdt1", rng, 7)
    broken = tmp_path / "broken.fdt1"
    broken.write_bytes(b"not a container")

    result = emcd_corpus([(a, b), (broken, b), (b, a)])

    assert result.failed == 1
    assert result.scored == 2
    assert not result.rows[1].ok
    assert "ContainerError" in result.rows[1].error

    values = [result.rows[0].emcd_norm, result.rows[2].emcd_norm]

    assert result.mean == pytest.approx(np.mean(values))
    assert result.std == pytest.approx(np.std(values))


def test_row_matches_direct_computation(tmp_path, rng):

    a = write_mel(tmp_path / "a.fdt1", rng, 5)
    b = write_mel(tmp_path / "b.fdt1", rng, 8)

    row = score_pair(a, b)
    report = emcd(load_mfcc(a), load_mfcc(b))

    assert (row.t_syn, row.t_gt) == (5, 8)
    assert row.emcd_raw == report.emcd_raw
    assert row.emcd_norm == report.emcd_normalized


def test_parallel_jobs_keep_order(tmp_path, rng):

    files = [write_mel(tmp_path / f"m{i}.fdt1", rng, 3 + i) for i in range(6)]
    pairs = [(files[i], files[-1 - i]) for i in range(6)]

    serial = emcd_corpus(pairs, jobs=1)
    parallel = emcd_corpus(pairs, jobs=3)

    assert [r.syn for r in parallel.rows] == [str(p[0]) for p in pairs]
    assert [r.emcd_raw for r in parallel.rows] == [r.emcd_raw for r in serial.rows]


def test_arguments_checked(tmp_path, rng):

    with pytest.raises(DataError, match="empty pair list"):
        emcd_corpus([])

    f = write_mel(tmp_path / "f.fdt1", rng, 2)

    with pytest.raises(DataError, match="jobs"):
        emcd_corpus([(f, f)], jobs=0)


def test_all_failed_summary():

    result = summarize([score_pair("missing_a.fdt1", "missing_b.fdt1")])

    assert result.mean is None
    assert result.failed == 1


def test_csv_output(tmp_path, rng):

    a = write_mel(tmp_path / "a.fdt1", rng, 5)
    b = write_mel(tmp_path / "b.fdt1", rng, 6)

    result = emcd_corpus([(a, b), (a, tmp_path / "missing.fdt1")])
    out = tmp_path / "scores.csv"
    result.write_csv(out)

    with open(out, newline="") as f:
        rows = list(csv.reader(f))

    assert tuple(rows[0]) == CSV_FIELDS
    assert float(rows[1][5]) == result.rows[0].emcd_norm
    assert rows[2][6] != ""
    assert rows[3][0] == "mean" and float(rows[3][5]) == result.mean
    assert rows[4][0] == "std" and float(rows[4][5]) == 0.0
