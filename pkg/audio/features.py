"""
WAV ingestion and mel-spectrogram extraction.

Frames are taken without centering padding, so a signal of n samples gives
1 + (n - n_fft) // hop frames. The filterbank is applied to the STFT
magnitude (power on request): scaling the samples by c scales every mel bin
by c.
"""

from __future__ import annotations

import logging

from dataclasses import dataclass

from pathlib import Path

from typing import Optional, Union

import librosa

import numpy as np

from scipy.io import wavfile

from common.app_data import app_data

from common.errors import AudioFormatError, ContainerError, DataError, ShapeError

from common.tensor import as_tensor, container_read, container_write

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class MelSpectrogram:

    bins: np.ndarray

    sample_rate: int = 22050

    hop: int = 256

    n_fft: int = 1024

    fmin: float = 0.0

    fmax: Optional[float] = None

    def __post_init__(self):

        bins = as_tensor(self.bins)

        if bins.ndim != 2:
            raise ShapeError(f"mel bins must be [n_mels, T], got {bins.shape}")

        if np.any(bins < 0) or not np.all(np.isfinite(bins)):
            raise DataError("mel bins must be finite and non-negative")

        object.__setattr__(self, "bins", bins)

        if self.fmax is None:
            object.__setattr__(self, "fmax", self.sample_rate / 2.0)

    @property
    def n_mels(self) -> int:
        return self.bins.shape[0]

    @property
    def frames(self) -> int:
        return self.bins.shape[1]

    def meta(self) -> dict[str, str]:
        return {
            "sr": str(self.sample_rate),
            "hop": str(self.hop),
            "n_fft": str(self.n_fft),
            "fmin": repr(float(self.fmin)),
            "fmax": repr(float(self.fmax)),
        }

    def save(self, path: PathLike) -> None:
        container_write(path, [("mel", self.bins)], self.meta())

    @classmethod
    def from_container(cls, tensors: dict, meta: dict, source: str = "") -> "MelSpectrogram":

        if "mel" not in tensors:
            raise ContainerError(f"{source}: no 'mel' tensor")

        try:
            return cls(
                bins=tensors["mel"],
                sample_rate=int(meta.get("sr", app_data.sample_rate)),
                hop=int(meta.get("hop", app_data.hop)),
                n_fft=int(meta.get("n_fft", app_data.n_fft)),
                fmin=float(meta.get("fmin", app_data.fmin)),
                fmax=float(meta["fmax"]) if "fmax" in meta else None,
            )
        except ValueError as e:
            if isinstance(e, DataError):
                raise

            raise ContainerError(f"{source}: bad mel meta ({e})") from None

    @classmethod
    def load(cls, path: PathLike) -> "MelSpectrogram":
        tensors, meta = container_read(path)

        return cls.from_container(tensors, meta, str(path))


@dataclass(frozen=True)
class MelParams:

    n_fft: int = 1024

    hop: int = 256

    n_mels: int = 80

    fmin: float = 0.0

    fmax: Optional[float] = None

    power: bool = False

    slaney_norm: bool = False

    @classmethod
    def from_app_data(cls, **overrides) -> "MelParams":
        values = dict(
            n_fft=app_data.n_fft, hop=app_data.hop, n_mels=app_data.n_mels,
            fmin=app_data.fmin, fmax=app_data.fmax,
        )

        values.update({k: v for k, v in overrides.items() if v is not None})

        return cls(**values)


def load_wav(path: PathLike) -> tuple[np.ndarray, int]:

    """Samples in [-1, 1] as float64 (stereo averaged to mono) and the sample rate."""

    try:
        sr, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise AudioFormatError(f"{path}: no such file") from None
    except (ValueError, EOFError) as e:
        raise AudioFormatError(f"{path}: malformed WAV ({e})") from None

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(f"{path}: unsupported codec ({data.dtype}); expected PCM16 or float32")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)

    if samples.size == 0:
        raise AudioFormatError(f"{path}: empty data chunk")

    return samples, int(sr)


def write_wav(path: PathLike, samples: np.ndarray, sample_rate: int, codec: str = "pcm16") -> None:

    """Write mono [n] or stereo [n, 2] samples as PCM16 or float32."""

    samples = np.asarray(samples, dtype=np.float64)

    if codec == "pcm16":
        data = np.clip(np.round(samples * PCM16_SCALE), -32768, 32767).astype(np.int16)
    elif codec == "float32":
        data = samples.astype(np.float32)
    else:
        raise AudioFormatError(f"unsupported codec '{codec}'")

    wavfile.write(str(path), int(sample_rate), data)


def frame_count(n_samples: int, n_fft: int, hop: int) -> int:

    return 1 + (n_samples - n_fft) // hop


def _check_framing(n_fft: int, hop: int) -> None:

    if n_fft < 2 or n_fft & (n_fft - 1):
        raise DataError(f"n_fft must be a power of two, got {n_fft}")

    if not 1 <= hop <= n_fft:
        raise DataError(f"hop must be in [1, n_fft], got {hop}")


def stft_magnitude(samples: np.ndarray, n_fft: int = 1024, hop: int = 256,
                   window: str = "hann", power: bool = False) -> np.ndarray:

    _check_framing(n_fft, hop)

    samples = np.asarray(samples, dtype=np.float64)

    if samples.ndim != 1:
        raise ShapeError(f"samples must be 1-D, got {samples.shape}")

    if samples.size < n_fft:
        raise DataError(f"too few samples for one frame: {samples.size} < n_fft {n_fft}")

    spec = np.abs(librosa.stft(samples, n_fft=n_fft, hop_length=hop, window=window, center=False))

    return spec ** 2 if power else spec


def mel_center_frequencies(n_mels: int, fmin: float, fmax: float) -> np.ndarray:

    """Peak frequency of every filter (the n_mels interior points of the mel grid)."""

    return librosa.mel_frequencies(n_mels + 2, fmin=fmin, fmax=fmax, htk=True)[1:-1]


def mel_filterbank(n_fft: int, sr: int, n_mels: int = 80, fmin: float = 0.0,
                   fmax: Optional[float] = None, slaney_norm: bool = False) -> np.ndarray:

    """Triangular filters equally spaced on mel(f) = 2595*log10(1 + f/700)."""

    fmax = sr / 2.0 if fmax is None else float(fmax)

    if not 0 <= fmin < fmax <= sr / 2.0:
        raise DataError(f"invalid frequency range: fmin {fmin}, fmax {fmax}, sr {sr}")

    if n_mels < 1:
        raise DataError(f"n_mels must be >= 1, got {n_mels}")

    return librosa.filters.mel(
        sr=sr, n_fft=n_fft, n_mels=n_mels, fmin=fmin, fmax=fmax, htk=True,
        norm="slaney" if slaney_norm else None, dtype=np.float64,
    )


def wav_to_mel(path: PathLike, params: Optional[MelParams] = None) -> MelSpectrogram:

    params = params or MelParams()

    samples, sr = load_wav(path)

    fmax = params.fmax if params.fmax is not None else sr / 2.0

    mag = stft_magnitude(samples, params.n_fft, params.hop, power=params.power)

    fb = mel_filterbank(params.n_fft, sr, params.n_mels, params.fmin, fmax, params.slaney_norm)

    logger.info("%s: %d samples at %d Hz -> %d frames", path, samples.size, sr, mag.shape[1])

    return MelSpectrogram(
        bins=(fb @ mag).astype(np.float32), sample_rate=sr, hop=params.hop,
        n_fft=params.n_fft, fmin=params.fmin, fmax=fmax,
    )
