"""
Declarative Text2Mel architectures.

A ModelSpec holds three layer stacks (text encoder, audio encoder, audio
decoder) written in the compact C-/HC-/GH-/RC- notation, plus the embedding
and positional-encoding settings. Builtin specs are registered by name and
spec files are UTF-8 JSON.
"""

from __future__ import annotations

import json

import logging

from dataclasses import asdict, dataclass, field, replace

from enum import Enum

from pathlib import Path

from typing import Iterable, Optional, Sequence, Union

from common.errors import SpecError

from common.registry import Registry

from nn.kernels import Padding

logger = logging.getLogger(__name__)

NETWORKS = ("text_encoder", "audio_encoder", "audio_decoder")

LINEAGE_VOCAB = "PE abcdefghijklmnopqrstuvwxyz'.?"


class LayerKind(str, Enum):

    EMBEDDING = "embedding"

    CONV = "conv"

    HIGHWAY = "highway_conv"

    GROUP_HIGHWAY = "group_highway_conv"

    RESIDUAL = "residual_conv"


class Activation(str, Enum):

    NONE = "none"

    RELU = "relu"


_ABBREV = {
    LayerKind.EMBEDDING: "E",
    LayerKind.CONV: "C",
    LayerKind.HIGHWAY: "HC",
    LayerKind.GROUP_HIGHWAY: "GH",
    LayerKind.RESIDUAL: "RC",
}

_GATED = (LayerKind.HIGHWAY, LayerKind.GROUP_HIGHWAY, LayerKind.RESIDUAL)


@dataclass(frozen=True)
class LayerSpec:

    kind: LayerKind

    in_ch: int

    out_ch: int

    kernel: int = 1

    dilation: int = 1

    padding: Padding = Padding.CAUSAL

    group: int = 1

    weight_norm: bool = False

    activation: Activation = Activation.NONE

    separable: bool = False

    def __post_init__(self):

        try:
            object.__setattr__(self, "kind", LayerKind(self.kind))

            object.__setattr__(self, "padding", Padding(self.padding))

            object.__setattr__(self, "activation", Activation(self.activation))
        except ValueError as e:
            raise SpecError(str(e)) from None

        for name in ("in_ch", "out_ch", "kernel", "dilation", "group"):
            value = getattr(self, name)

            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise SpecError(f"{name} must be a positive integer, got {value!r}")

        if self.kind is LayerKind.EMBEDDING:
            raise SpecError("embedding is configured by vocab/d_text, not as a stack layer")

        if self.padding is Padding.SAME and self.kernel % 2 == 0:
            raise SpecError(f"same padding needs an odd kernel, got {self.kernel}")

        if self.gated and self.in_ch != self.out_ch:
            raise SpecError(f"{self.label} needs in_ch == out_ch")

        if self.kind is LayerKind.GROUP_HIGHWAY:
            if self.out_ch % self.group:
                raise SpecError(f"{self.label}: {self.out_ch} channels not divisible by group {self.group}")
        elif self.group != 1:
            raise SpecError(f"{self.label}: group size applies to group_highway_conv only")

        if self.separable and self.weight_norm:
            raise SpecError(f"{self.label}: a layer cannot be both separable and weight-normalized")

    @property
    def gated(self) -> bool:
        return self.kind in _GATED

    @property
    def has_gate(self) -> bool:
        return self.kind in (LayerKind.HIGHWAY, LayerKind.GROUP_HIGHWAY)

    @property
    def gate_ch(self) -> int:
        return self.out_ch // self.group if self.has_gate else 0

    @property
    def label(self) -> str:
        return f"{_ABBREV[self.kind]}-{self.in_ch}-{self.out_ch}"

    def describe(self) -> str:

        """Label plus geometry, e.g. ``GH-64-64 k3 d9 g2 causal``."""

        parts = [self.label, f"k{self.kernel}", f"d{self.dilation}"]

        if self.kind is LayerKind.GROUP_HIGHWAY:
            parts.append(f"g{self.group}")

        parts.append(self.padding.value)

        if self.separable:
            parts.append("sep")

        if self.weight_norm:
            parts.append("wn")

        if self.activation is not Activation.NONE:
            parts.append(self.activation.value)

        return " ".join(parts)

    def to_dict(self) -> dict:
        data = asdict(self)

        data["kind"] = self.kind.value

        data["padding"] = self.padding.value

        data["activation"] = self.activation.value

        return data

    @classmethod
    def from_dict(cls, data: dict) -> "LayerSpec":
        return cls(**data)


@dataclass(frozen=True)
class PositionalEncodingSpec:

    base: float = 10000.0

    alpha_text: float = 1.0

    alpha_audio: float = 1.0

    def __post_init__(self):
        if not self.base > 1:
            raise SpecError(f"positional encoding base must be > 1, got {self.base}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ModelSpec:

    name: str

    vocab: int

    d_text: int

    d_audio: int

    text_encoder: tuple[LayerSpec, ...]

    audio_encoder: tuple[LayerSpec, ...]

    audio_decoder: tuple[LayerSpec, ...]

    n_mels: int = 80

    d_value: Optional[int] = None

    pe: PositionalEncodingSpec = field(default_factory=PositionalEncodingSpec)

    attention_scale: Optional[float] = None

    def __post_init__(self):

        for name in NETWORKS:
            object.__setattr__(self, name, tuple(getattr(self, name)))

        if self.d_value is None:
            object.__setattr__(self, "d_value", self.d_audio)

        self.validate()

    @property
    def scale(self) -> float:
        return self.attention_scale if self.attention_scale is not None else self.d_audio ** -0.5

    def network(self, name: str) -> tuple[LayerSpec, ...]:
        if name not in NETWORKS:
            raise SpecError(f"unknown network '{name}'")

        return getattr(self, name)

    def layers(self) -> Iterable[tuple[str, int, LayerSpec]]:
        for name in NETWORKS:
            for i, layer in enumerate(getattr(self, name)):
                yield name, i, layer

    def validate(self) -> None:

        for name in ("vocab", "d_text", "d_audio", "n_mels", "d_value"):
            value = getattr(self, name)

            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise SpecError(f"{name} must be a positive integer, got {value!r}")

        if self.d_text % 2 or self.n_mels % 2:
            raise SpecError("d_text and n_mels must be even for positional encoding")

        if self.attention_scale is not None and not self.attention_scale > 0:
            raise SpecError(f"attention_scale must be > 0, got {self.attention_scale}")

        expected = {
            "text_encoder": (self.d_text, self.d_audio + self.d_value),
            "audio_encoder": (self.n_mels, self.d_audio),
            "audio_decoder": (self.d_value + self.d_audio, self.n_mels),
        }

        for name, (first_in, last_out) in expected.items():

            stack = getattr(self, name)

            if not stack:
                raise SpecError(f"{name} has no layers")

            for i, layer in enumerate(stack):
                if not isinstance(layer, LayerSpec):
                    raise SpecError(f"{name}[{i}] is not a LayerSpec")

                want = first_in if i == 0 else stack[i - 1].out_ch

                if layer.in_ch != want:
                    raise SpecError(f"{name}[{i}] {layer.label}: expected {want} input channels")

                padding = Padding.SAME if name == "text_encoder" else Padding.CAUSAL

                if layer.padding is not padding:
                    raise SpecError(f"{name}[{i}] {layer.label}: {name} convolutions must be {padding.value}")

            if stack[-1].out_ch != last_out:
                raise SpecError(f"{name} must end with {last_out} channels, got {stack[-1].out_ch}")

        if self.audio_decoder[0].kind is not LayerKind.CONV:
            raise SpecError("audio_decoder must start with a plain conv over [R; Q]")

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "vocab": self.vocab,
            "d_text": self.d_text,
            "d_audio": self.d_audio,
            "d_value": self.d_value,
            "n_mels": self.n_mels,
            "attention_scale": self.attention_scale,
            "pe": self.pe.to_dict(),
        }

        for name in NETWORKS:
            data[name] = [layer.to_dict() for layer in getattr(self, name)]

        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


PE_SPEC_FIELDS = {"base", "alpha_text", "alpha_audio"}

LAYER_FIELDS = {
    "kind", "in_ch", "out_ch", "kernel", "dilation", "padding", "group",
    "weight_norm", "activation", "separable",
}

MODEL_FIELDS = {
    "name", "vocab", "d_text", "d_audio", "d_value", "n_mels", "pe",
    "attention_scale", *NETWORKS,
}


def _stack(kind: LayerKind, ch: int, dilations: Sequence[int], *, kernel: int = 3,
           padding: Padding, group: int = 1) -> list[LayerSpec]:

    return [
        LayerSpec(kind, ch, ch, kernel, d, padding, group)
        for d in dilations
    ]


def _conv(in_ch: int, out_ch: int, padding: Padding, activation: Activation = Activation.NONE) -> LayerSpec:

    return LayerSpec(LayerKind.CONV, in_ch, out_ch, 1, 1, padding, activation=activation)


BUILTINS = Registry("builtin spec")


@BUILTINS.decorate("dctts_baseline")
def dctts_baseline() -> ModelSpec:

    same, causal = Padding.SAME, Padding.CAUSAL

    relu = Activation.RELU

    text = [
        _conv(128, 512, same, relu),
        _conv(512, 512, same),
        *_stack(LayerKind.HIGHWAY, 512, (1, 3, 9, 27, 1, 3, 9, 27, 1, 1), padding=same),
        *_stack(LayerKind.HIGHWAY, 512, (1, 1), kernel=1, padding=same),
    ]

    audio = [
        _conv(80, 256, causal, relu),
        _conv(256, 256, causal, relu),
        _conv(256, 256, causal),
        *_stack(LayerKind.HIGHWAY, 256, (1, 3, 9, 27, 1, 3, 9, 27, 3, 3), padding=causal),
    ]

    decoder = [
        _conv(512, 256, causal),
        *_stack(LayerKind.HIGHWAY, 256, (1, 3, 9, 27, 1, 1), padding=causal),
        _conv(256, 256, causal, relu),
        _conv(256, 256, causal, relu),
        _conv(256, 256, causal, relu),
        _conv(256, 80, causal),
    ]

    return ModelSpec(
        name="dctts_baseline", vocab=len(LINEAGE_VOCAB), d_text=128, d_audio=256,
        text_encoder=tuple(text), audio_encoder=tuple(audio), audio_decoder=tuple(decoder),
        pe=PositionalEncodingSpec(alpha_text=0.0, alpha_audio=0.0),
    )


@BUILTINS.decorate("fast_dctts")
def fast_dctts() -> ModelSpec:

    same, causal = Padding.SAME, Padding.CAUSAL

    relu = Activation.RELU

    text = [
        _conv(128, 128, same, relu),
        _conv(128, 128, same),
        *_stack(LayerKind.RESIDUAL, 128, (1, 3, 9, 27, 1, 3, 9, 27, 1, 1, 1, 1), padding=same),
    ]

    audio = [
        _conv(80, 64, causal, relu),
        *_stack(LayerKind.GROUP_HIGHWAY, 64, (1, 3, 9, 27, 1), padding=causal, group=2),
    ]

    decoder = [
        _conv(128, 64, causal),
        *_stack(LayerKind.GROUP_HIGHWAY, 64, (1, 3, 9, 27), padding=causal, group=2),
        _conv(64, 80, causal),
    ]

    return ModelSpec(
        name="fast_dctts", vocab=len(LINEAGE_VOCAB), d_text=128, d_audio=64,
        text_encoder=tuple(text), audio_encoder=tuple(audio), audio_decoder=tuple(decoder),
        pe=PositionalEncodingSpec(alpha_text=1.0, alpha_audio=1.0),
    )


def _map_layers(spec: ModelSpec, name: str, fn) -> ModelSpec:

    stacks = {net: tuple(fn(layer) for layer in spec.network(net)) for net in NETWORKS}

    return replace(spec, name=name, **stacks)


@BUILTINS.decorate("dctts_residual")
def dctts_residual() -> ModelSpec:

    def swap(layer: LayerSpec) -> LayerSpec:
        return replace(layer, kind=LayerKind.RESIDUAL) if layer.kind is LayerKind.HIGHWAY else layer

    return _map_layers(dctts_baseline(), "dctts_residual", swap)


@BUILTINS.decorate("dctts_group_highway")
def dctts_group_highway() -> ModelSpec:

    def swap(layer: LayerSpec) -> LayerSpec:
        if layer.kind is LayerKind.HIGHWAY:
            return replace(layer, kind=LayerKind.GROUP_HIGHWAY, group=2)

        return layer

    return _map_layers(dctts_baseline(), "dctts_group_highway", swap)


@BUILTINS.decorate("dctts_depthwise")
def dctts_depthwise() -> ModelSpec:

    def swap(layer: LayerSpec) -> LayerSpec:
        return replace(layer, separable=True) if layer.kernel > 1 else layer

    return _map_layers(dctts_baseline(), "dctts_depthwise", swap)


def with_weight_norm(spec: ModelSpec) -> ModelSpec:

    """Mark every non-separable convolution weight-normalized."""

    return _map_layers(
        spec, spec.name,
        lambda layer: layer if layer.separable else replace(layer, weight_norm=True),
    )


def builtin_spec(name: str, weight_norm: bool = False) -> ModelSpec:

    try:
        factory = BUILTINS.require(name)
    except KeyError as e:
        raise SpecError(e.args[0]) from None

    spec = factory()

    return with_weight_norm(spec) if weight_norm else spec


def _expect_object(data, where: str) -> dict:

    if not isinstance(data, dict):
        raise SpecError(f"{where}: expected a JSON object")

    return data


def _reject_unknown(data: dict, allowed: set, where: str) -> None:

    unknown = sorted(set(data) - allowed)

    if unknown:
        raise SpecError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _layers_from_json(items, where: str) -> list[LayerSpec]:

    """Decode a layer list; ``repeat`` expands one entry, a list ``dilation`` cycles."""

    if not isinstance(items, list):
        raise SpecError(f"{where}: expected a list of layers")

    out: list[LayerSpec] = []

    for i, raw in enumerate(items):

        at = f"{where}[{i}]"

        raw = dict(_expect_object(raw, at))

        repeat = raw.pop("repeat", 1)

        _reject_unknown(raw, LAYER_FIELDS, at)

        if not isinstance(repeat, int) or repeat < 1:
            raise SpecError(f"{at}: repeat must be a positive integer")

        dilation = raw.get("dilation", 1)

        dilations = dilation if isinstance(dilation, list) else [dilation]

        if not dilations:
            raise SpecError(f"{at}: empty dilation list")

        for r in range(repeat):
            raw["dilation"] = dilations[r % len(dilations)]

            try:
                out.append(LayerSpec.from_dict(raw))
            except TypeError as e:
                raise SpecError(f"{at}: {e}") from None
            except SpecError as e:
                raise SpecError(f"{at}: {e}") from None

    return out


def spec_from_dict(data: dict, where: str = "spec") -> ModelSpec:

    try:
        return _spec_from_dict(data, where)
    except TypeError as e:
        raise SpecError(f"{where}: {e}") from None


def _spec_from_dict(data: dict, where: str) -> ModelSpec:

    data = dict(_expect_object(data, where))

    if "builtin" in data:

        base = builtin_spec(str(data.pop("builtin")), bool(data.pop("weight_norm", False)))

        _reject_unknown(data, MODEL_FIELDS, where)

        overrides = {}

        for key, value in data.items():
            if key == "pe":
                _reject_unknown(_expect_object(value, f"{where}.pe"), PE_SPEC_FIELDS, f"{where}.pe")

                value = PositionalEncodingSpec(**{**base.pe.to_dict(), **value})
            elif key in NETWORKS:
                value = tuple(_layers_from_json(value, f"{where}.{key}"))

            overrides[key] = value

        return replace(base, **overrides)

    _reject_unknown(data, MODEL_FIELDS, where)

    missing = sorted({"name", "vocab", "d_text", "d_audio", *NETWORKS} - set(data))

    if missing:
        raise SpecError(f"{where}: missing field(s) {', '.join(missing)}")

    pe = data.pop("pe", {})

    _reject_unknown(_expect_object(pe, f"{where}.pe"), PE_SPEC_FIELDS, f"{where}.pe")

    stacks = {name: tuple(_layers_from_json(data.pop(name), f"{where}.{name}")) for name in NETWORKS}

    return ModelSpec(pe=PositionalEncodingSpec(**pe), **stacks, **data)


def spec_from_json(text: str, source: str = "<string>") -> ModelSpec:

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None

    return spec_from_dict(data, source)


def load_spec(path: Union[str, Path]) -> ModelSpec:

    path = Path(path)

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecError(f"cannot read spec file {path}: {e.strerror}") from None

    spec = spec_from_json(text, str(path))

    logger.info("loaded spec '%s' from %s", spec.name, path)

    return spec


def save_spec(spec: ModelSpec, path: Union[str, Path]) -> None:

    Path(path).write_text(spec.to_json() + "\n", encoding="utf-8")


def resolve_spec(source: str, weight_norm: bool = False) -> ModelSpec:

    """A builtin name or a path to a JSON spec file."""

    if BUILTINS.has(source):
        return builtin_spec(source, weight_norm)

    if source.endswith(".json") or Path(source).exists():
        spec = load_spec(source)

        return with_weight_norm(spec) if weight_norm else spec

    raise SpecError(f"unknown model '{source}' (builtins: {', '.join(BUILTINS.names())})")
