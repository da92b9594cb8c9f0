"""
MFCC extraction from mel-spectrograms and the MCD frame distance.

c = DCT-II(ln(max(mel, floor))) with the orthonormal DCT over the mel axis.
Coefficient 0 is dropped unless include_c0 is set.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

from typing import Union

import numpy as np

from scipy.fft import dct

from scipy.spatial.distance import cdist

from audio.features import MelSpectrogram

from common.errors import DataError, ShapeError

DB_SCALE = 10.0 / math.log(10.0)

SCALES = {"unit": 1.0, "db": DB_SCALE}


@dataclass(frozen=True)
class MfccSequence:

    coeffs: np.ndarray

    def __post_init__(self):

        c = np.asarray(self.coeffs, dtype=np.float64)

        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ShapeError(f"MFCC sequence must be [D>=1, T>=1], got {c.shape}")

        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def frames(self) -> int:
        return self.coeffs.shape[1]


def as_mfcc(value) -> MfccSequence:

    return value if isinstance(value, MfccSequence) else MfccSequence(value)


def mel_to_mfcc(mel: Union[MelSpectrogram, np.ndarray], n_coeffs: int = 13, floor: float = 1e-5,
                include_c0: bool = False, lifter: int = 0) -> MfccSequence:

    bins = mel.bins if isinstance(mel, MelSpectrogram) else np.asarray(mel)

    if bins.ndim != 2:
        raise ShapeError(f"mel must be [n_mels, T], got {bins.shape}")

    if not floor > 0:
        raise DataError(f"mel floor must be > 0, got {floor}")

    n_mels = bins.shape[0]

    first = 0 if include_c0 else 1

    if not 1 <= n_coeffs <= n_mels - first:
        raise DataError(f"coefficient count {n_coeffs} out of range for {n_mels} mel bins")

    log_mel = np.log(np.maximum(bins.astype(np.float64), floor))

    c = dct(log_mel, type=2, norm="ortho", axis=0)[first:first + n_coeffs]

    if lifter > 0:
        k = np.arange(first, first + n_coeffs, dtype=np.float64)

        c = c * (1.0 + (lifter / 2.0) * np.sin(np.pi * k / lifter))[:, None]

    return MfccSequence(c)


def mcd_scale(scale: Union[str, float]) -> float:

    if isinstance(scale, str):
        if scale not in SCALES:
            raise DataError(f"unknown MCD scale '{scale}' (known: {', '.join(SCALES)})")

        return SCALES[scale]

    return float(scale)


def mcd_frame(x: np.ndarray, y: np.ndarray, scale: Union[str, float] = 1.0) -> float:

    """scale * sqrt(2 * sum_d (x_d - y_d)^2)."""

    x = np.asarray(x, dtype=np.float64)

    y = np.asarray(y, dtype=np.float64)

    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"frames must be equal-length vectors, got {x.shape} and {y.shape}")

    return mcd_scale(scale) * math.sqrt(2.0 * float(np.sum(np.square(x - y))))


def mcd_matrix(x, y, scale: Union[str, float] = 1.0) -> np.ndarray:

    """Local costs [T_x, T_y] between every frame pair of two MFCC sequences."""

    x, y = as_mfcc(x), as_mfcc(y)

    if x.dim != y.dim:
        raise ShapeError(f"MFCC dims differ: {x.dim} vs {y.dim}")

    return mcd_scale(scale) * np.sqrt(2.0 * cdist(x.coeffs.T, y.coeffs.T, "sqeuclidean"))
