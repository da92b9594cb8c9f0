"""
Block-level activations: highway, group highway and residual.

Highway gates are coupled (carry = 1 - transform). A group-highway gate conv
emits C/g channels and gate j drives the contiguous body channels
[j*g, (j+1)*g).
"""

from __future__ import annotations

from dataclasses import dataclass

from enum import Enum

from typing import Optional, Union

import numpy as np

from common.errors import ShapeError

from nn.kernels import (
    AnyConv, SeparableWeights, apply_conv, conv1d_backward, sigmoid,
)


class GateKind(str, Enum):

    HIGHWAY = "highway"

    GROUP_HIGHWAY = "group_highway"

    RESIDUAL = "residual"


Override = Optional[Union[float, np.ndarray]]


@dataclass(frozen=True)

class GatedConvLayer:

    kind: GateKind

    body: AnyConv

    gate: Optional[AnyConv] = None

    group: int = 1

    def __post_init__(self):

        object.__setattr__(self, "kind", GateKind(self.kind))

        c = self.body.out_ch

        if self.body.in_ch != c:

            raise ShapeError(f"gated layer needs in == out channels, got {self.body.in_ch} -> {c}")

        if self.group < 1 or c % self.group:

            raise ShapeError(f"{c} channels are not divisible by group size {self.group}")

        if self.kind is GateKind.RESIDUAL:

            if self.gate is not None:

                raise ShapeError("residual layer has no gate")

            return

        if self.kind is GateKind.HIGHWAY and self.group != 1:

            raise ShapeError("highway layer requires group size 1")

        if self.gate is None:

            raise ShapeError(f"{self.kind.value} layer needs a gate convolution")

        if self.gate.in_ch != c or self.gate.out_ch != c // self.group:

            raise ShapeError(
                f"gate must map {c} -> {c // self.group} channels, "
                f"got {self.gate.in_ch} -> {self.gate.out_ch}"
            )

    @property

    def channels(self) -> int:

        return self.body.out_ch


def broadcast_gate(t: np.ndarray, group: int) -> np.ndarray:

    return np.repeat(t, group, axis=0) if group > 1 else t


def _check(x: np.ndarray, layer: GatedConvLayer, kinds: tuple[GateKind, ...]) -> None:

    if layer.kind not in kinds:

        raise ShapeError(f"expected a {'/'.join(k.value for k in kinds)} layer, got {layer.kind.value}")

    if x.ndim != 2 or x.shape[0] != layer.channels:

        raise ShapeError(f"input must be [{layer.channels}, T], got {x.shape}")


def _blend(x, h, t, carry: Override) -> np.ndarray:

    c = (1 - t) if carry is None else carry

    return t * h + c * x


def highway_forward(x: np.ndarray, layer: GatedConvLayer, *,
                    gate_override: Override = None, carry_override: Override = None) -> np.ndarray:

    """y = t*h + (1-t)*x.

    gate_override and carry_override replace the transform and carry
    multipliers; with both forced to 1 a residual layer can be run through
    the same blend.
    """

    _check(x, layer, (GateKind.HIGHWAY, GateKind.GROUP_HIGHWAY, GateKind.RESIDUAL))

    h = apply_conv(x, layer.body)

    if gate_override is not None:

        t = gate_override

    else:

        if layer.gate is None:

            raise ShapeError("layer has no gate; pass gate_override")

        t = broadcast_gate(sigmoid(apply_conv(x, layer.gate)), layer.group)

    return _blend(x, h, t, carry_override)


def group_highway_forward(x: np.ndarray, layer: GatedConvLayer, *,
                          gate_override: Override = None) -> np.ndarray:

    _check(x, layer, (GateKind.GROUP_HIGHWAY,))

    return highway_forward(x, layer, gate_override=gate_override)


def residual_forward(x: np.ndarray, layer: GatedConvLayer) -> np.ndarray:

    _check(x, layer, (GateKind.RESIDUAL,))

    return x + apply_conv(x, layer.body)


def gated_forward(x: np.ndarray, layer: GatedConvLayer) -> np.ndarray:

    if layer.kind is GateKind.RESIDUAL:

        return residual_forward(x, layer)

    if layer.kind is GateKind.GROUP_HIGHWAY:

        return group_highway_forward(x, layer)

    return highway_forward(x, layer)


@dataclass(frozen=True)

class GatedGradients:

    grad_x: np.ndarray

    grad_body_w: np.ndarray

    grad_body_b: np.ndarray

    grad_gate_w: Optional[np.ndarray] = None

    grad_gate_b: Optional[np.ndarray] = None


def gated_backward(x: np.ndarray, layer: GatedConvLayer, upstream_grad: np.ndarray) -> GatedGradients:

    _check(x, layer, tuple(GateKind))

    if upstream_grad.shape != x.shape:

        raise ShapeError(f"upstream gradient must be {x.shape}, got {upstream_grad.shape}")

    if isinstance(layer.body, SeparableWeights) or isinstance(layer.gate, SeparableWeights):

        raise ShapeError("backward pass needs full convolutions; assemble separable weights first")

    u = upstream_grad

    if layer.kind is GateKind.RESIDUAL:

        gx, gw, gb = conv1d_backward(x, layer.body, u)

        return GatedGradients(u + gx, gw, gb)

    h = apply_conv(x, layer.body)

    t = sigmoid(apply_conv(x, layer.gate))

    tb = broadcast_gate(t, layer.group)

    grad_h = u * tb

    grad_tb = u * (h - x)

    grad_t = grad_tb.reshape(t.shape[0], layer.group, -1).sum(axis=1)

    grad_a = grad_t * t * (1 - t)

    gx_body, gw_body, gb_body = conv1d_backward(x, layer.body, grad_h)

    gx_gate, gw_gate, gb_gate = conv1d_backward(x, layer.gate, grad_a)

    grad_x = u * (1 - tb) + gx_body + gx_gate

    return GatedGradients(grad_x, gw_body, gb_body, gw_gate, gb_gate)
