"""
Single-thread synthesis benchmark.

BLAS and OpenMP pools must already be limited to one thread through the
environment before numpy is imported (main.py and the test conftest do
this). enforce_single_thread() verifies that, pins the process to one CPU
where the platform allows it, and ThreadWatch fails the run if the process
grows extra threads during warm-up.
"""

from __future__ import annotations

import hashlib

import logging

import os

import time

from dataclasses import dataclass, field

from typing import Optional, Sequence, Union

import numpy as np

import psutil

from common.errors import DataError, ThreadLimitError

from net.cost import count_params

from net.graph import synthesize

from net.model import Model, init_model

from net.spec import ModelSpec

from net.text import text_to_ids

logger = logging.getLogger(__name__)

THREAD_ENV = (
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

BENCH_TEXT = "the birch canoe slid on the smooth planks."

CSV_FIELDS = ("model", "run", "frames", "threads", "seconds")


def enforce_single_thread(pin: bool = True) -> None:

    loose = {name: os.environ.get(name) for name in THREAD_ENV if os.environ.get(name) != "1"}

    if loose:
        detail = ", ".join(f"{k}={v!r}" for k, v in loose.items())

        raise ThreadLimitError(f"cannot restrict parallelism to one thread: {detail}")

    if not pin:
        return

    proc = psutil.Process()

    if not hasattr(proc, "cpu_affinity"):
        logger.info("cpu affinity not supported on this platform; relying on thread env")

        return

    try:
        allowed = proc.cpu_affinity()

        proc.cpu_affinity(allowed[:1])

        logger.info("pinned benchmark to cpu %d", allowed[0])
    except (psutil.Error, OSError, IndexError) as e:
        logger.warning("could not pin cpu affinity: %s", e)


class ThreadWatch:

    """Raises ThreadLimitError when the process thread count grows past its start value."""

    def __init__(self):

        self.proc = psutil.Process()

        self.start = self.proc.num_threads()

    def check(self, stage: str) -> None:

        now = self.proc.num_threads()

        if now > self.start:
            raise ThreadLimitError(
                f"thread count grew from {self.start} to {now} during {stage}; "
                f"a numeric library is running its own pool"
            )


@dataclass(frozen=True)
class BenchRow:

    model: str

    run: int

    frames: int

    threads: int

    seconds: float

    def to_csv(self) -> list[str]:
        return [self.model, str(self.run), str(self.frames), str(self.threads), f"{self.seconds:.6f}"]


@dataclass(frozen=True)
class BenchSummary:

    model: str

    frames: int

    repeats: int

    params: int

    median: float

    p10: float

    p90: float

    digest: str

    rows: tuple[BenchRow, ...] = field(default_factory=tuple, repr=False)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "frames": self.frames,
            "repeats": self.repeats,
            "params": self.params,
            "median": self.median,
            "p10": self.p10,
            "p90": self.p90,
            "digest": self.digest,
        }


def mel_digest(bins: np.ndarray) -> str:

    return hashlib.sha256(np.ascontiguousarray(bins, dtype="<f4").tobytes()).hexdigest()


def bench_synthesize(source: Union[ModelSpec, Model], seed: int = 0, frames: int = 200,
                     repeats: int = 5, *, warmup: int = 1, ids: Optional[Sequence[int]] = None,
                     enforce: bool = True) -> BenchSummary:

    if frames < 1 or repeats < 1 or warmup < 0:
        raise DataError("frames and repeats must be >= 1, warmup >= 0")

    if enforce:
        enforce_single_thread()

    model = source if isinstance(source, Model) else init_model(source, seed)

    ids = list(ids) if ids is not None else text_to_ids(BENCH_TEXT)

    name = model.spec.name

    _ = model.compiled

    watch = ThreadWatch()

    for _ in range(warmup):
        synthesize(model, ids, frames, early_stop=False)

    if enforce:
        watch.check("warm-up")

    rows: list[BenchRow] = []

    digest = ""

    for run in range(repeats):

        start = time.perf_counter()

        mel = synthesize(model, ids, frames, early_stop=False)

        seconds = time.perf_counter() - start

        rows.append(BenchRow(name, run, frames, 1, seconds))

        digest = mel_digest(mel.bins)

        logger.info("%s run %d: %.4f s", name, run, seconds)

    if enforce:
        watch.check("timed runs")

    p10, median, p90 = np.percentile([r.seconds for r in rows], [10, 50, 90])

    return BenchSummary(
        model=name, frames=frames, repeats=repeats, params=count_params(model.spec),
        median=float(median), p10=float(p10), p90=float(p90), digest=digest, rows=tuple(rows),
    )
