"""
Text2Mel forward graph.

The text encoder turns character ids into keys K and values V, the audio
encoder turns the mel frames produced so far into queries Q, attention
aligns them into a context R, and the audio decoder maps [R; Q] to the next
mel frame. Synthesis starts from an all-zero frame and feeds each new frame
back in; the default loop keeps per-layer ring buffers so every step costs
one column of work per layer.
"""

from __future__ import annotations

import logging

from dataclasses import dataclass

from typing import Optional, Sequence

import numpy as np

from scipy.special import softmax

from audio.features import MelSpectrogram

from common.app_data import app_data

from common.errors import ShapeError

from net.model import CompiledLayer, Model

from net.spec import LayerKind, PositionalEncodingSpec, Activation

from nn.gating import GatedConvLayer, broadcast_gate

from nn.kernels import ConvWeights, SeparableWeights, embedding_lookup, sigmoid

logger = logging.getLogger(__name__)

STOP_PATIENCE = 10


def positional_encoding(T: int, dim: int, pe: PositionalEncodingSpec, offset: int = 0) -> np.ndarray:

    """Rows 2k / 2k+1 hold sin / cos of pos / base^(2k/dim), pos = offset..offset+T-1."""

    if dim % 2:
        raise ShapeError(f"positional encoding needs an even dim, got {dim}")

    if T < 1:
        raise ShapeError("positional encoding needs T >= 1")

    pos = np.arange(offset, offset + T, dtype=np.float64)

    rate = np.power(float(pe.base), np.arange(0, dim, 2, dtype=np.float64) / dim)

    angle = pos[None, :] / rate[:, None]

    out = np.empty((dim, T), dtype=np.float64)

    out[0::2] = np.sin(angle)

    out[1::2] = np.cos(angle)

    return out.astype(np.float32)


def add_positional(x: np.ndarray, pe: PositionalEncodingSpec, which: str, offset: int = 0) -> np.ndarray:

    alpha = {"text": pe.alpha_text, "audio": pe.alpha_audio}[which]

    if alpha == 0:
        return x

    return x + np.float32(alpha) * positional_encoding(x.shape[1], x.shape[0], pe, offset)


def text_encode(model: Model, ids: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:

    spec = model.spec

    x = embedding_lookup(ids, model.embedding)

    x = add_positional(x, spec.pe, "text")

    y = model.run_stack("text_encoder", x)

    return y[:spec.d_audio], y[spec.d_audio:]


def audio_encode(model: Model, mel: np.ndarray) -> np.ndarray:

    spec = model.spec

    if mel.ndim != 2 or mel.shape[0] != spec.n_mels or mel.shape[1] < 1:
        raise ShapeError(f"audio encoder expects [{spec.n_mels}, T>=1], got {mel.shape}")

    x = add_positional(np.asarray(mel, dtype=np.float32), spec.pe, "audio")

    return model.run_stack("audio_encoder", x)


def attend(K: np.ndarray, V: np.ndarray, Q: np.ndarray,
           scale: Optional[float] = None) -> tuple[np.ndarray, np.ndarray]:

    """A = column softmax of K^T Q * scale over text positions, R = V A."""

    if K.ndim != 2 or Q.ndim != 2 or V.ndim != 2:
        raise ShapeError("K, V and Q must be [channels, time]")

    if K.shape[0] != Q.shape[0]:
        raise ShapeError(f"key width {K.shape[0]} != query width {Q.shape[0]}")

    if V.shape[1] != K.shape[1]:
        raise ShapeError(f"K has {K.shape[1]} text positions, V has {V.shape[1]}")

    if scale is None:
        scale = K.shape[0] ** -0.5

    scores = (K.T @ Q) * np.float32(scale)

    A = softmax(scores, axis=0).astype(np.float32, copy=False)

    return A, V @ A


def decode(model: Model, R: np.ndarray, Q: np.ndarray) -> np.ndarray:

    if R.shape[1] != Q.shape[1]:
        raise ShapeError(f"R has {R.shape[1]} frames, Q has {Q.shape[1]}")

    x = np.concatenate([R, Q], axis=0)

    return sigmoid(model.run_stack("audio_decoder", x))


def decode_step(model: Model, R_t: np.ndarray, Q_t: np.ndarray) -> np.ndarray:

    """Next mel frame from the context and query histories (or single columns)."""

    R = R_t[:, None] if R_t.ndim == 1 else R_t

    Q = Q_t[:, None] if Q_t.ndim == 1 else Q_t

    return decode(model, R, Q)[:, -1]


class _StepSeparable:

    def __init__(self, conv: SeparableWeights):

        self.conv = conv

    def __call__(self, cols: np.ndarray) -> np.ndarray:

        z = np.einsum("ck,ck->c", cols, self.conv.dw)

        return self.conv.pw @ z + self.conv.b


class _StepLayer:

    """One causal layer evaluated a column at a time over a ring buffer of inputs."""

    def __init__(self, layer: CompiledLayer):

        self.spec = layer.spec

        op = layer.op

        gated = isinstance(op, GatedConvLayer)

        body = op.body if gated else op

        self.gate_layer = op if gated and op.gate is not None else None

        self.kind = self.spec.kind

        self.group = op.group if gated else 1

        k, d = body.kernel, body.dilation

        self.span = d * (k - 1) + 1

        self.lags = np.array([(k - 1 - tap) * d for tap in range(k)])

        self.buf = np.zeros((body.in_ch, self.span), dtype=np.float32)

        self.pos = -1

        convs = [body] + ([op.gate] if self.gate_layer is not None else [])

        if all(isinstance(c, ConvWeights) for c in convs):

            self.matrix = np.vstack([c.matrix() for c in convs])

            self.bias = np.concatenate([c.b for c in convs])

            self.parts = None

        else:

            self.parts = [_StepSeparable(c) for c in convs]

        self.channels = body.out_ch

    def __call__(self, x_t: np.ndarray) -> np.ndarray:

        self.pos = (self.pos + 1) % self.span

        self.buf[:, self.pos] = x_t

        cols = self.buf[:, (self.pos - self.lags) % self.span]

        if self.parts is None:
            out = self.matrix @ cols.reshape(-1) + self.bias
        else:
            out = np.concatenate([p(cols) for p in self.parts])

        h = out[:self.channels]

        if self.kind is LayerKind.RESIDUAL:
            y = x_t + h
        elif self.gate_layer is not None:
            t = broadcast_gate(sigmoid(out[self.channels:]), self.group)

            y = t * h + (1 - t) * x_t
        else:
            y = h

        if self.spec.activation is Activation.RELU:
            y = np.maximum(y, 0)

        return y


class _StepStack:

    def __init__(self, layers: Sequence[CompiledLayer]):

        self.layers = [_StepLayer(layer) for layer in layers]

    def __call__(self, x_t: np.ndarray) -> np.ndarray:

        for layer in self.layers:
            x_t = layer(x_t)

        return x_t


@dataclass(frozen=True)
class Synthesis:

    mel: MelSpectrogram

    attention: np.ndarray

    stopped_early: bool


def _mel(bins: np.ndarray) -> MelSpectrogram:

    return MelSpectrogram(
        bins=bins, sample_rate=app_data.sample_rate, hop=app_data.hop, n_fft=app_data.n_fft,
        fmin=app_data.fmin, fmax=app_data.effective_fmax(),
    )


def _should_stop(on_last: bool, run: int) -> tuple[bool, int]:

    run = run + 1 if on_last else 0

    return run >= STOP_PATIENCE, run


def _run_incremental(model: Model, K, V, max_frames: int, early_stop: bool):

    spec = model.spec

    encoder = _StepStack(model.compiled["audio_encoder"])

    decoder = _StepStack(model.compiled["audio_decoder"])

    pe = (np.float32(spec.pe.alpha_audio) * positional_encoding(max_frames, spec.n_mels, spec.pe)
          if spec.pe.alpha_audio else None)

    scale = np.float32(spec.scale)

    last = K.shape[1] - 1

    frame = np.zeros(spec.n_mels, dtype=np.float32)

    frames, columns, run, stopped = [], [], 0, False

    for t in range(max_frames):

        q = encoder(frame if pe is None else frame + pe[:, t])

        a = softmax((K.T @ q) * scale).astype(np.float32, copy=False)

        r = V @ a

        frame = sigmoid(decoder(np.concatenate([r, q])))

        frames.append(frame)

        columns.append(a)

        if early_stop:
            stopped, run = _should_stop(int(np.argmax(a)) == last, run)

            if stopped:
                break

    return np.stack(frames, axis=1), np.stack(columns, axis=1), stopped


def _run_full(model: Model, K, V, max_frames: int, early_stop: bool):

    spec = model.spec

    mel = np.zeros((spec.n_mels, 1), dtype=np.float32)

    last = K.shape[1] - 1

    columns, run, stopped = [], 0, False

    for _ in range(max_frames):

        Q = audio_encode(model, mel)

        A, R = attend(K, V, Q, spec.scale)

        frame = decode(model, R, Q)[:, -1]

        mel = np.concatenate([mel, frame[:, None]], axis=1)

        columns.append(A[:, -1])

        if early_stop:
            stopped, run = _should_stop(int(np.argmax(A[:, -1])) == last, run)

            if stopped:
                break

    return mel[:, 1:], np.stack(columns, axis=1), stopped


def synthesize_aligned(model: Model, ids: Sequence[int], max_frames: int = 200, *,
                       incremental: bool = True, early_stop: bool = True) -> Synthesis:

    if max_frames < 1:
        raise ShapeError(f"max_frames must be >= 1, got {max_frames}")

    K, V = text_encode(model, ids)

    run = _run_incremental if incremental else _run_full

    bins, attention, stopped = run(model, K, V, max_frames, early_stop)

    logger.debug(
        "synthesized %d frames for %d ids (%s, stopped early: %s)",
        bins.shape[1], K.shape[1], "incremental" if incremental else "full", stopped,
    )

    return Synthesis(_mel(bins), attention, stopped)


def synthesize(model: Model, ids: Sequence[int], max_frames: int = 200, *,
               incremental: bool = True, early_stop: bool = True) -> MelSpectrogram:

    return synthesize_aligned(
        model, ids, max_frames, incremental=incremental, early_stop=early_stop
    ).mel
