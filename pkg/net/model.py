"""
A ModelSpec bound to named float32 weights.

Weight names are ``<network>.<layer_index>.<role>``. A convolution's body is
stored as ``body_w`` (plain), ``v``/``g`` (weight-normalized) or
``body_dw``/``body_pw`` (depthwise separable), always with ``body_b``; gated
layers carry the same set with a ``gate_`` prefix. The embedding table is
``embedding.0.embedding``.
"""

from __future__ import annotations

import logging

from dataclasses import dataclass, field

from functools import cached_property

from pathlib import Path

from typing import Mapping, Optional, Union

import numpy as np

from common.errors import ContainerError, DegenerateDirectionError, ShapeError, SpecError

from common.tensor import as_tensor, container_read, container_write

from net.spec import NETWORKS, Activation, LayerKind, LayerSpec, ModelSpec, spec_from_json

from nn.gating import GatedConvLayer, GateKind, gated_forward

from nn.kernels import (
    AnyConv, ConvWeights, SeparableWeights, WeightNormParams, apply_conv, relu, weight_norm_apply,
)

logger = logging.getLogger(__name__)

EMBEDDING = "embedding.0.embedding"

MODEL_FORMAT = "fastmel-model/1"

_GATE_KINDS = {
    LayerKind.HIGHWAY: GateKind.HIGHWAY,
    LayerKind.GROUP_HIGHWAY: GateKind.GROUP_HIGHWAY,
    LayerKind.RESIDUAL: GateKind.RESIDUAL,
}


def weight_name(network: str, index: int, role: str) -> str:
    return f"{network}.{index}.{role}"


def conv_roles(layer: LayerSpec, prefix: str, out_ch: int) -> dict[str, tuple[int, ...]]:

    """Roles and shapes of one convolution; prefix is "" (body) or "gate_"."""

    c_in, k = layer.in_ch, layer.kernel

    if layer.separable:
        return {
            f"{prefix or 'body_'}dw": (c_in, k),
            f"{prefix or 'body_'}pw": (out_ch, c_in),
            f"{prefix or 'body_'}b": (out_ch,),
        }

    if layer.weight_norm:
        return {
            f"{prefix}v": (out_ch, c_in, k),
            f"{prefix}g": (out_ch,),
            f"{prefix or 'body_'}b": (out_ch,),
        }

    return {
        f"{prefix or 'body_'}w": (out_ch, c_in, k),
        f"{prefix or 'body_'}b": (out_ch,),
    }


def layer_shapes(layer: LayerSpec) -> dict[str, tuple[int, ...]]:

    shapes = conv_roles(layer, "", layer.out_ch)

    if layer.has_gate:
        shapes.update(conv_roles(layer, "gate_", layer.gate_ch))

    return shapes


def expected_shapes(spec: ModelSpec) -> dict[str, tuple[int, ...]]:

    shapes = {EMBEDDING: (spec.vocab, spec.d_text)}

    for network, i, layer in spec.layers():
        for role, shape in layer_shapes(layer).items():
            shapes[weight_name(network, i, role)] = shape

    return shapes


def audit_weights(spec: ModelSpec, weights: Mapping[str, np.ndarray]) -> list[str]:

    """Structural problems of a (spec, weights) pair; empty when consistent."""

    problems: list[str] = []

    try:
        spec.validate()
    except SpecError as e:
        problems.append(str(e))

    expected = expected_shapes(spec)

    for name, shape in expected.items():
        if name not in weights:
            problems.append(f"missing weight '{name}'")
        elif tuple(weights[name].shape) != shape:
            problems.append(f"'{name}' has shape {tuple(weights[name].shape)}, expected {shape}")

    for name in weights:
        if name not in expected:
            problems.append(f"unexpected weight '{name}'")

    for network, i, layer in spec.layers():
        if layer.has_gate and layer.gate_ch * layer.group != layer.out_ch:
            problems.append(f"{network}[{i}] gate elements do not cover {layer.out_ch} channels")

    return problems


@dataclass(frozen=True)
class CompiledLayer:

    spec: LayerSpec

    op: Union[AnyConv, GatedConvLayer]

    def forward(self, x: np.ndarray) -> np.ndarray:

        if isinstance(self.op, GatedConvLayer):
            y = gated_forward(x, self.op)
        else:
            y = apply_conv(x, self.op)

        return relu(y) if self.spec.activation is Activation.RELU else y


@dataclass(frozen=True, eq=False)
class Model:

    spec: ModelSpec

    weights: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):

        object.__setattr__(self, "weights", {k: as_tensor(v) for k, v in self.weights.items()})

        problems = audit_weights(self.spec, self.weights)

        if problems:
            raise ShapeError("; ".join(problems[:5]))

    @property
    def embedding(self) -> np.ndarray:
        return self.weights[EMBEDDING]

    def weight(self, network: str, index: int, role: str) -> np.ndarray:
        return self.weights[weight_name(network, index, role)]

    def _conv(self, network: str, index: int, layer: LayerSpec, prefix: str) -> AnyConv:

        def w(role: str) -> np.ndarray:
            return self.weight(network, index, f"{prefix or 'body_'}{role}")

        if layer.separable:
            return SeparableWeights(w("dw"), w("pw"), w("b"), layer.dilation, layer.padding)

        if layer.weight_norm:
            params = WeightNormParams(self.weight(network, index, f"{prefix}v"),
                                      self.weight(network, index, f"{prefix}g"))

            try:
                kernel = weight_norm_apply(params)
            except DegenerateDirectionError as e:
                raise DegenerateDirectionError(f"{network}[{index}]: {e}") from None

            return ConvWeights(kernel.astype(np.float32), w("b"), layer.dilation, layer.padding)

        return ConvWeights(w("w"), w("b"), layer.dilation, layer.padding)

    def _compile(self, network: str, index: int, layer: LayerSpec) -> CompiledLayer:

        body = self._conv(network, index, layer, "")

        if not layer.gated:
            return CompiledLayer(layer, body)

        gate = self._conv(network, index, layer, "gate_") if layer.has_gate else None

        return CompiledLayer(layer, GatedConvLayer(_GATE_KINDS[layer.kind], body, gate, layer.group))

    @cached_property
    def compiled(self) -> dict[str, tuple[CompiledLayer, ...]]:

        return {
            network: tuple(
                self._compile(network, i, layer)
                for i, layer in enumerate(self.spec.network(network))
            )
            for network in NETWORKS
        }

    def run_stack(self, network: str, x: np.ndarray) -> np.ndarray:

        for layer in self.compiled[network]:
            x = layer.forward(x)

        return x

    def num_weights(self, include_embedding: bool = False) -> int:

        return sum(
            int(v.size) for k, v in self.weights.items()
            if include_embedding or k != EMBEDDING
        )

    def audit(self) -> list[str]:

        problems = audit_weights(self.spec, self.weights)

        if not problems:
            try:
                self.compiled
            except (DegenerateDirectionError, ShapeError) as e:
                problems.append(str(e))

        return problems

    def with_weights(self, updates: Mapping[str, np.ndarray], spec: Optional[ModelSpec] = None,
                     drop: tuple[str, ...] = ()) -> "Model":

        weights = {k: v for k, v in self.weights.items() if k not in drop}

        weights.update(updates)

        return Model(spec or self.spec, weights)

    def save(self, path: Union[str, Path]) -> None:

        meta = {"format": MODEL_FORMAT, "spec": self.spec.to_json()}

        container_write(path, self.weights.items(), meta)

        logger.info("saved model '%s' (%d tensors) to %s", self.spec.name, len(self.weights), path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Model":

        tensors, meta = container_read(path)

        if "spec" not in meta:
            raise ContainerError(f"{path}: container has no 'spec' meta entry; not a model file")

        spec = spec_from_json(meta["spec"], f"{path}#spec")

        return cls(spec, tensors)


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:

    s = 1.0 / np.sqrt(fan_in)

    return rng.uniform(-s, s, size=shape)


def init_weights(spec: ModelSpec, seed: int = 0) -> dict[str, np.ndarray]:

    """
    Seeded weights for benchmarking (numpy PCG64 via default_rng).

    Every kernel and bias draws uniform(-s, s) with s = 1/sqrt(fan_in), where
    fan_in is C_in*K for full kernels, K for depthwise and C_in for pointwise
    ones. Weight-norm g starts at ||v||, so w == v initially. Embedding rows
    draw uniform(-1, 1). Tensors are drawn in expected_shapes order.
    """

    rng = np.random.default_rng(seed)

    layers = {weight_name(n, i, ""): layer for n, i, layer in spec.layers()}

    weights: dict[str, np.ndarray] = {}

    for name, shape in expected_shapes(spec).items():

        if name == EMBEDDING:
            weights[name] = rng.uniform(-1.0, 1.0, size=shape)

            continue

        layer = layers[name[:name.rindex(".") + 1]]

        role = name[name.rindex(".") + 1:]

        if role.endswith("g"):
            v = weights[name[:-1] + "v"]

            weights[name] = np.sqrt(np.sum(np.square(v), axis=(1, 2)))
        elif role.endswith("dw"):
            weights[name] = _uniform(rng, shape, layer.kernel)
        elif role.endswith("pw"):
            weights[name] = _uniform(rng, shape, layer.in_ch)
        else:
            weights[name] = _uniform(rng, shape, layer.in_ch * layer.kernel)

    return {k: as_tensor(v) for k, v in weights.items()}


def init_model(spec: ModelSpec, seed: int = 0) -> Model:

    return Model(spec, init_weights(spec, seed))


def zero_model(spec: ModelSpec) -> Model:

    return Model(spec, {k: np.zeros(s, np.float32) for k, s in expected_shapes(spec).items()})
