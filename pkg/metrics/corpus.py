"""
Corpus-level EMCD scoring over a list of (synthesized, ground truth) pairs.
"""

from __future__ import annotations

import csv

import logging

from concurrent.futures import ThreadPoolExecutor

from dataclasses import dataclass, field

from pathlib import Path

from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tqdm import tqdm

from audio.features import MelParams, MelSpectrogram, wav_to_mel

from common.app_data import app_data

from common.errors import ContainerError, DataError, FastMelError

from common.tensor import container_read

from .emcd import StepRule, TransitionWeights, emcd_distance

from .mfcc import MfccSequence, mel_to_mfcc

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PAIRS_HEADER = ("syn_path", "gt_path")

CSV_FIELDS = ("syn", "gt", "t_syn", "t_gt", "emcd_raw", "emcd_norm", "error")


@dataclass(frozen=True)
class FeatureConfig:

    n_coeffs: int = 13

    floor: float = 1e-5

    include_c0: bool = False

    lifter: int = 0

    mel: Optional[MelParams] = None

    @classmethod
    def from_app_data(cls, **overrides) -> "FeatureConfig":
        values = dict(n_coeffs=app_data.mfcc_coeffs, floor=app_data.mel_floor)

        values.update(overrides)

        return cls(**values)

    def from_mel(self, mel: MelSpectrogram) -> MfccSequence:
        return mel_to_mfcc(mel, self.n_coeffs, self.floor, self.include_c0, self.lifter)


def load_mfcc(path: PathLike, features: FeatureConfig = FeatureConfig()) -> MfccSequence:

    """Read a .wav, an FDT1 mel container or an FDT1 "mfcc" container as MFCCs."""

    path = Path(path)

    if path.suffix.lower() == ".wav":
        return features.from_mel(wav_to_mel(path, features.mel))

    tensors, meta = container_read(path)

    if "mfcc" in tensors:
        return MfccSequence(tensors["mfcc"])

    if "mel" in tensors:
        return features.from_mel(MelSpectrogram.from_container(tensors, meta, str(path)))

    raise ContainerError(f"{path}: neither 'mel' nor 'mfcc' tensor present")


def read_pairs(csv_path: PathLike) -> List[Tuple[Path, Path]]:

    csv_path = Path(csv_path)

    base = csv_path.parent

    with open(csv_path, newline="", encoding="utf-8") as f:

        reader = csv.reader(f)

        header = next(reader, None)

        if header is None or tuple(h.strip() for h in header) != PAIRS_HEADER:
            raise DataError(f"{csv_path}: header must be '{','.join(PAIRS_HEADER)}'")

        pairs = []

        for line, row in enumerate(reader, start=2):

            if not row or all(not cell.strip() for cell in row):
                continue

            if len(row) != 2:
                raise DataError(f"{csv_path}:{line}: expected 2 columns, got {len(row)}")

            pairs.append(tuple(base / cell.strip() for cell in row))

    return pairs


@dataclass(frozen=True)
class CorpusRow:

    syn: str

    gt: str

    t_syn: Optional[int] = None

    t_gt: Optional[int] = None

    emcd_raw: Optional[float] = None

    emcd_norm: Optional[float] = None

    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def to_csv(self) -> list:
        cells = [self.syn, self.gt, self.t_syn, self.t_gt, self.emcd_raw, self.emcd_norm, self.error]

        return ["" if c is None else repr(c) if isinstance(c, float) else c for c in cells]


@dataclass(frozen=True)
class CorpusResult:

    rows: List[CorpusRow]

    mean: Optional[float] = None

    std: Optional[float] = None

    failed: int = field(default=0)

    @property
    def scored(self) -> int:
        return len(self.rows) - self.failed

    def write_csv(self, path: PathLike) -> None:

        with open(path, "w", newline="", encoding="utf-8") as f:

            writer = csv.writer(f, lineterminator="\n")

            writer.writerow(CSV_FIELDS)

            for row in self.rows:
                writer.writerow(row.to_csv())

            for label, value in (("mean", self.mean), ("std", self.std)):
                writer.writerow([label, "", "", "", "", "" if value is None else repr(value), ""])


def score_pair(syn: PathLike, gt: PathLike, w: TransitionWeights = TransitionWeights(),
               features: FeatureConfig = FeatureConfig(),
               step_rule: Union[StepRule, str] = StepRule.PATH_MIN, scale: Union[str, float] = 1.0) -> CorpusRow:

    try:
        x = load_mfcc(syn, features)

        y = load_mfcc(gt, features)

        raw = emcd_distance(x, y, w, step_rule, scale)
    except (FastMelError, OSError) as e:
        logger.warning("skipping pair %s / %s: %s", syn, gt, e)

        return CorpusRow(str(syn), str(gt), error=f"{type(e).__name__}: {e}")

    return CorpusRow(str(syn), str(gt), x.frames, y.frames, raw, raw / y.frames)


def emcd_corpus(pairs: Sequence[Tuple[PathLike, PathLike]], w: TransitionWeights = TransitionWeights(),
                features: FeatureConfig = FeatureConfig(), jobs: int = 1,
                step_rule: Union[StepRule, str] = StepRule.PATH_MIN, scale: Union[str, float] = 1.0,
                progress: Optional[bool] = None) -> CorpusResult:

    """
    Score every pair; rows keep input order whatever the worker count.

    A pair whose files cannot be read gets an error row and the run continues.
    Mean and (population) standard deviation cover the normalized values of
    the scored rows only.
    """

    pairs = list(pairs)

    if not pairs:
        raise DataError("empty pair list")

    if jobs < 1:
        raise DataError(f"jobs must be >= 1, got {jobs}")

    def task(pair):
        return score_pair(pair[0], pair[1], w, features, step_rule, scale)

    bar = tqdm(total=len(pairs), desc="emcd", unit="pair", disable=not progress if progress is not None else None)

    rows: List[CorpusRow] = []

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for row in pool.map(task, pairs):
            rows.append(row)

            bar.update(1)

    bar.close()

    return summarize(rows)


def summarize(rows: Iterable[CorpusRow]) -> CorpusResult:

    rows = list(rows)

    values = np.array([r.emcd_norm for r in rows if r.ok], dtype=np.float64)

    failed = sum(1 for r in rows if not r.ok)

    if values.size == 0:
        logger.warning("no pair could be scored")

        return CorpusResult(rows, None, None, failed)

    return CorpusResult(rows, float(np.mean(values)), float(np.std(values)), failed)
