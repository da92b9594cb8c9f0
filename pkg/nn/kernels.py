"""
Convolution primitives of the Text2Mel networks.

Feature maps are ``[channels, time]``. A kernel ``w[o, i, k]`` multiplies the
zero-padded input at ``t + k * dilation``; causal padding puts all
``dilation * (K - 1)`` zeros on the left, same padding splits them evenly.

Full convolutions are computed as one matrix product over an im2col view whose
rows are ordered channel-major then tap, which fixes the summation order.
"""

from __future__ import annotations

from dataclasses import dataclass

from enum import Enum

from typing import Sequence, Union

import numpy as np

from numpy.lib.stride_tricks import sliding_window_view

from scipy.special import expit

from common.errors import DataError, DegenerateDirectionError, ShapeError


class Padding(str, Enum):

    CAUSAL = "causal"

    SAME = "same"


def pad_amounts(kernel: int, dilation: int, padding: Padding) -> tuple[int, int]:

    span = dilation * (kernel - 1)

    if Padding(padding) is Padding.CAUSAL:

        return span, 0

    return span // 2, span - span // 2


def _check_geometry(kernel: int, dilation: int, padding: Padding) -> None:

    if kernel < 1:

        raise ShapeError(f"kernel size must be >= 1, got {kernel}")

    if dilation < 1:

        raise ShapeError(f"dilation must be >= 1, got {dilation}")

    if Padding(padding) is Padding.SAME and kernel % 2 == 0:

        raise ShapeError(f"same padding needs an odd kernel, got {kernel}")


@dataclass(frozen=True)

class ConvWeights:

    w: np.ndarray

    b: np.ndarray

    dilation: int = 1

    padding: Padding = Padding.CAUSAL

    def __post_init__(self):

        if self.w.ndim != 3:

            raise ShapeError(f"conv weight must be [C_out, C_in, K], got {self.w.shape}")

        if self.b.shape != (self.w.shape[0],):

            raise ShapeError(f"conv bias must be [{self.w.shape[0]}], got {self.b.shape}")

        object.__setattr__(self, "padding", Padding(self.padding))

        _check_geometry(self.kernel, self.dilation, self.padding)

    @property

    def out_ch(self) -> int:

        return self.w.shape[0]

    @property

    def in_ch(self) -> int:

        return self.w.shape[1]

    @property

    def kernel(self) -> int:

        return self.w.shape[2]

    def matrix(self) -> np.ndarray:

        return self.w.reshape(self.out_ch, self.in_ch * self.kernel)


@dataclass(frozen=True)

class SeparableWeights:

    dw: np.ndarray

    pw: np.ndarray

    b: np.ndarray

    dilation: int = 1

    padding: Padding = Padding.CAUSAL

    def __post_init__(self):

        if self.dw.ndim != 2 or self.pw.ndim != 2:

            raise ShapeError("depthwise weight must be [C_in, K], pointwise [C_out, C_in]")

        if self.pw.shape[1] != self.dw.shape[0]:

            raise ShapeError(
                f"pointwise expects {self.pw.shape[1]} channels, depthwise has {self.dw.shape[0]}"
            )

        if self.b.shape != (self.pw.shape[0],):

            raise ShapeError(f"bias must be [{self.pw.shape[0]}], got {self.b.shape}")

        object.__setattr__(self, "padding", Padding(self.padding))

        _check_geometry(self.kernel, self.dilation, self.padding)

    @property

    def out_ch(self) -> int:

        return self.pw.shape[0]

    @property

    def in_ch(self) -> int:

        return self.dw.shape[0]

    @property

    def kernel(self) -> int:

        return self.dw.shape[1]

    def assembled(self) -> ConvWeights:

        """Rank-1 full kernel w[o, i, k] = pw[o, i] * dw[i, k]."""

        w = self.pw[:, :, None] * self.dw[None, :, :]

        return ConvWeights(w, self.b, self.dilation, self.padding)


AnyConv = Union[ConvWeights, SeparableWeights]


@dataclass(frozen=True)

class WeightNormParams:

    v: np.ndarray

    g: np.ndarray

    def __post_init__(self):

        if self.v.ndim != 3 or self.g.shape != (self.v.shape[0],):

            raise ShapeError(
                f"weight norm expects v [C_out, C_in, K] and g [C_out], "
                f"got {self.v.shape} and {self.g.shape}"
            )


def _windows(x: np.ndarray, kernel: int, dilation: int, padding: Padding) -> np.ndarray:

    """[C, T, K] view: window[c, t, k] = xpad[c, t + k * dilation]."""

    left, right = pad_amounts(kernel, dilation, padding)

    xpad = np.pad(x, ((0, 0), (left, right)))

    span = dilation * (kernel - 1) + 1

    return sliding_window_view(xpad, span, axis=1)[:, :, ::dilation]


def _check_input(x: np.ndarray, in_ch: int) -> None:

    if x.ndim != 2:

        raise ShapeError(f"input must be [C, T], got shape {x.shape}")

    if x.shape[0] != in_ch:

        raise ShapeError(f"channel mismatch: input has {x.shape[0]}, weights expect {in_ch}")

    if x.shape[1] < 1:

        raise ShapeError("input must have at least one time step")


def im2col(x: np.ndarray, kernel: int, dilation: int, padding: Padding) -> np.ndarray:

    win = _windows(x, kernel, dilation, padding)

    c, t, k = win.shape

    return np.ascontiguousarray(win.transpose(0, 2, 1)).reshape(c * k, t)


def conv1d(x: np.ndarray, cw: ConvWeights) -> np.ndarray:

    _check_input(x, cw.in_ch)

    cols = im2col(x, cw.kernel, cw.dilation, cw.padding)

    return cw.matrix() @ cols + cw.b[:, None]


def depthwise_conv(x: np.ndarray, dw: np.ndarray, dilation: int = 1,
                   padding: Padding = Padding.CAUSAL) -> np.ndarray:

    _check_input(x, dw.shape[0])

    _check_geometry(dw.shape[1], dilation, padding)

    win = _windows(x, dw.shape[1], dilation, padding)

    return np.einsum("ctk,ck->ct", win, dw)


def depthwise_separable_conv(x: np.ndarray, dw: np.ndarray, pw: np.ndarray, b: np.ndarray,
                             dilation: int = 1,
                             padding: Padding = Padding.CAUSAL) -> np.ndarray:

    sw = SeparableWeights(dw, pw, b, dilation, padding)

    return separable_conv(x, sw)


def separable_conv(x: np.ndarray, sw: SeparableWeights) -> np.ndarray:

    z = depthwise_conv(x, sw.dw, sw.dilation, sw.padding)

    return sw.pw @ z + sw.b[:, None]


def apply_conv(x: np.ndarray, weights: AnyConv) -> np.ndarray:

    if isinstance(weights, SeparableWeights):

        return separable_conv(x, weights)

    return conv1d(x, weights)


def conv1d_backward(x: np.ndarray, cw: ConvWeights,
                    grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:

    """Gradients of sum(grad_out * conv1d(x, cw)) w.r.t. x, w and b."""

    _check_input(x, cw.in_ch)

    if grad_out.shape != (cw.out_ch, x.shape[1]):

        raise ShapeError(
            f"upstream gradient must be [{cw.out_ch}, {x.shape[1]}], got {grad_out.shape}"
        )

    k, d = cw.kernel, cw.dilation

    t = x.shape[1]

    cols = im2col(x, k, d, cw.padding)

    grad_w = (grad_out @ cols.T).reshape(cw.w.shape)

    grad_b = grad_out.sum(axis=1)

    grad_cols = (cw.matrix().T @ grad_out).reshape(cw.in_ch, k, t)

    left, right = pad_amounts(k, d, cw.padding)

    grad_pad = np.zeros((cw.in_ch, t + left + right), dtype=grad_cols.dtype)

    for tap in range(k):

        grad_pad[:, tap * d:tap * d + t] += grad_cols[:, tap, :]

    return grad_pad[:, left:left + t], grad_w, grad_b


def weight_norm_apply(p: WeightNormParams) -> np.ndarray:

    """w_c = g[c] * v_c / ||v_c||_2 for every output channel c."""

    norms = np.sqrt(np.sum(np.square(p.v), axis=(1, 2)))

    dead = np.flatnonzero(norms == 0)

    if dead.size:

        raise DegenerateDirectionError(
            f"degenerate direction: zero-norm output channel(s) {dead.tolist()}"
        )

    return (p.g / norms)[:, None, None] * p.v


def embedding_lookup(ids: Sequence[int], table: np.ndarray) -> np.ndarray:

    idx = np.asarray(ids, dtype=np.int64)

    if idx.ndim != 1 or idx.size < 1:

        raise ShapeError("ids must be a non-empty 1-D sequence")

    vocab = table.shape[0]

    bad = idx[(idx < 0) | (idx >= vocab)]

    if bad.size:

        raise DataError(f"id {int(bad[0])} out of range for vocabulary of {vocab}")

    return np.ascontiguousarray(table[idx].T)


def sigmoid(x: np.ndarray) -> np.ndarray:

    return expit(x)


def relu(x: np.ndarray) -> np.ndarray:

    return np.maximum(x, 0)
