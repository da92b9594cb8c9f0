"""
Audio features: WAV I/O and mel-spectrogram extraction.
"""

from .features import (
    MelSpectrogram, MelParams, load_wav, write_wav, frame_count,
    stft_magnitude, mel_filterbank, mel_center_frequencies, wav_to_mel,
)

__all__ = [
    "MelSpectrogram",
    "MelParams",
    "load_wav",
    "write_wav",
    "frame_count",
    "stft_magnitude",
    "mel_filterbank",
    "mel_center_frequencies",
    "wav_to_mel",
]
