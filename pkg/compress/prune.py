"""
Magnitude-based filter pruning.

Channels are removed per channel unit. A unit is a channel space that one
plain convolution produces together with every gated layer whose carry path
runs through it; removing channel c drops the producer's output filter c, row
and column c of every gated layer in the space (and the gate element that
drives c once its whole group is gone) and input column c of the next plain
convolution. Key channels form one coupled unit across the text encoder
output, the audio encoder output and the decoder's query input; value
channels and 80-channel boundaries are never touched.

Within a unit, channels are removed in slots of lcm(g) over its group
highway layers so that every surviving gate element keeps all of its
channels. The slot score is the sum of member filter scores (L1 by default).
"""

from __future__ import annotations

import json

import logging

import math

from collections import defaultdict

from dataclasses import dataclass, field, replace

from pathlib import Path

from typing import Optional, Union

import numpy as np

from common.app_data import app_data

from common.errors import DataError, InvariantError, OverPrunedError

from common.registry import Registry

from net.cost import Schedule, count_flops

from net.model import Model, weight_name

from net.spec import NETWORKS, LayerSpec, ModelSpec

from nn.gating import GatedConvLayer

from nn.kernels import ConvWeights, SeparableWeights

logger = logging.getLogger(__name__)

SCORES = Registry("importance score")


@SCORES.decorate("l1")
def l1_score(w: np.ndarray) -> np.ndarray:

    return np.sum(np.abs(w), axis=tuple(range(1, w.ndim)), dtype=np.float64)


@SCORES.decorate("l2")
def l2_score(w: np.ndarray) -> np.ndarray:

    return np.sqrt(np.sum(np.square(w, dtype=np.float64), axis=tuple(range(1, w.ndim))))


def _full_kernel(weights) -> np.ndarray:

    if isinstance(weights, SeparableWeights):
        return weights.assembled().w

    if isinstance(weights, ConvWeights):
        return weights.w

    return np.asarray(weights)


def filter_importance(layer_weights, score: str = "l1") -> np.ndarray:

    """Score per output filter of a [C_out, C_in, K] kernel or a compiled convolution."""

    try:
        fn = SCORES.require(score)
    except KeyError as e:
        raise DataError(e.args[0]) from None

    return fn(_full_kernel(layer_weights))


@dataclass(frozen=True)
class Slice:

    network: str

    index: int

    offset: int = 0


@dataclass
class ChannelUnit:

    name: str

    size: int

    group: int = 1

    rows: list[Slice] = field(default_factory=list)

    cols: list[Slice] = field(default_factory=list)

    attention: bool = False

    @property
    def slots(self) -> int:
        return self.size // self.group


@dataclass
class _Space:

    producer: Optional[int]

    gated: list[int] = field(default_factory=list)

    consumer: Optional[int] = None


def _spaces(stack: tuple[LayerSpec, ...]) -> list[_Space]:

    spaces: list[_Space] = []

    for i, layer in enumerate(stack):
        if layer.gated:
            if not spaces:
                spaces.append(_Space(None))

            spaces[-1].gated.append(i)
        else:
            if spaces:
                spaces[-1].consumer = i

            spaces.append(_Space(i))

    return spaces


def _group(stack: tuple[LayerSpec, ...], indices) -> int:

    g = 1

    for i in indices:
        g = math.lcm(g, stack[i].group)

    return g


def _add_space(unit: ChannelUnit, network: str, space: _Space, offset: int = 0) -> None:

    unit.rows.append(Slice(network, space.producer, offset))

    for i in space.gated:
        unit.rows.append(Slice(network, i, offset))

        unit.cols.append(Slice(network, i, offset))


def find_units(spec: ModelSpec, include_attention: bool = True) -> list[ChannelUnit]:

    units: list[ChannelUnit] = []

    out_spaces = {}

    for network in NETWORKS:

        stack = spec.network(network)

        spaces = _spaces(stack)

        out_spaces[network] = spaces[-1]

        for space in spaces[:-1]:

            if space.producer is None:
                continue

            unit = ChannelUnit(
                f"{network}.{space.producer}", stack[space.producer].out_ch,
                _group(stack, space.gated),
            )

            _add_space(unit, network, space)

            unit.cols.append(Slice(network, space.consumer))

            units.append(unit)

    if include_attention:
        key = _attention_unit(spec, out_spaces["text_encoder"], out_spaces["audio_encoder"])

        if key is not None:
            units.append(key)

    return units


def _attention_unit(spec: ModelSpec, text: _Space, audio: _Space) -> Optional[ChannelUnit]:

    if text.producer is None or audio.producer is None:
        logger.info("attention unit skipped: an encoder output has no producing conv")

        return None

    group = math.lcm(
        _group(spec.text_encoder, text.gated), _group(spec.audio_encoder, audio.gated)
    )

    if spec.d_audio % group:
        logger.info("attention unit skipped: key width %d not aligned to groups of %d",
                    spec.d_audio, group)

        return None

    unit = ChannelUnit("attention.key", spec.d_audio, group, attention=True)

    _add_space(unit, "text_encoder", text)

    _add_space(unit, "audio_encoder", audio)

    unit.cols.append(Slice("audio_decoder", 0, spec.d_value))

    return unit


def _body(model: Model, network: str, index: int):

    op = model.compiled[network][index].op

    return op.body if isinstance(op, GatedConvLayer) else op


def unit_scores(model: Model, unit: ChannelUnit, score: str = "l1") -> np.ndarray:

    """Per-slot importance: member filter scores summed over the slot's channels."""

    total = np.zeros(unit.size, dtype=np.float64)

    for s in unit.rows:
        scores = filter_importance(_body(model, s.network, s.index), score)

        total += scores[s.offset:s.offset + unit.size]

    return total.reshape(unit.slots, unit.group).sum(axis=1)


@dataclass(frozen=True)
class UnitReport:

    name: str

    layers: tuple[str, ...]

    size: int

    group: int

    kept: tuple[int, ...]

    removed: tuple[int, ...]

    scores: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "layers": list(self.layers),
            "size": self.size,
            "group": self.group,
            "kept": list(self.kept),
            "removed": list(self.removed),
            "scores": list(self.scores),
        }


@dataclass(frozen=True)
class PruneReport:

    model: str

    ratio: float

    score: str

    units: tuple[UnitReport, ...]

    params_before: int

    params_after: int

    macs_before: int

    macs_after: int

    @property
    def removed(self) -> int:
        return sum(len(u.removed) for u in self.units)

    @property
    def macs_drop(self) -> float:
        return 1.0 - self.macs_after / self.macs_before if self.macs_before else 0.0

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "ratio": self.ratio,
            "score": self.score,
            "removed": self.removed,
            "params_before": self.params_before,
            "params_after": self.params_after,
            "macs_before": self.macs_before,
            "macs_after": self.macs_after,
            "macs_drop": self.macs_drop,
            "units": [u.to_dict() for u in self.units],
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _slots_to_remove(ratio: float, slots: int) -> int:

    return int(math.floor(ratio * slots + 0.5))


def _select(unit: ChannelUnit, slot_scores: np.ndarray, ratio: float) -> np.ndarray:

    n = _slots_to_remove(ratio, unit.slots)

    if n >= unit.slots:
        raise OverPrunedError(f"over-pruned layer: ratio {ratio} removes all {unit.size} channels of {unit.name}")

    order = np.argsort(slot_scores, kind="stable")[:n]

    return np.sort(
        (order[:, None] * unit.group + np.arange(unit.group)[None, :]).reshape(-1)
    )


def _take(a: np.ndarray, axis: int, drop: set[int]) -> np.ndarray:

    if not drop:
        return a

    keep = np.array([i for i in range(a.shape[axis]) if i not in drop], dtype=np.int64)

    return np.take(a, keep, axis=axis)


def _rescale_g(v: np.ndarray, g: np.ndarray, v_new: np.ndarray) -> np.ndarray:

    """g' = g * ||v'|| / ||v|| keeps g*v/||v|| unchanged on the surviving entries."""

    before = np.sqrt(np.sum(np.square(v, dtype=np.float64), axis=(1, 2)))

    after = np.sqrt(np.sum(np.square(v_new, dtype=np.float64), axis=(1, 2)))

    return (g * after / before).astype(np.float32)


def _shrink_conv(weights: dict, base: str, layer: LayerSpec, prefix: str,
                 drop_out: set[int], drop_in: set[int]) -> dict:

    def key(role: str) -> str:
        return f"{base}{prefix or 'body_'}{role}"

    out: dict[str, np.ndarray] = {}

    if layer.separable:
        out[key("dw")] = _take(weights[key("dw")], 0, drop_in)

        out[key("pw")] = _take(_take(weights[key("pw")], 0, drop_out), 1, drop_in)
    elif layer.weight_norm:
        v = _take(weights[f"{base}{prefix}v"], 0, drop_out)

        v_new = _take(v, 1, drop_in)

        g = _take(weights[f"{base}{prefix}g"], 0, drop_out)

        out[f"{base}{prefix}v"] = v_new

        out[f"{base}{prefix}g"] = _rescale_g(v, g, v_new) if drop_in else g
    else:
        out[key("w")] = _take(_take(weights[key("w")], 0, drop_out), 1, drop_in)

    out[key("b")] = _take(weights[key("b")], 0, drop_out)

    return out


def apply_removal(model: Model, removals: list[tuple[ChannelUnit, np.ndarray]]) -> Model:

    spec = model.spec

    drop_out: dict[tuple[str, int], set[int]] = defaultdict(set)

    drop_in: dict[tuple[str, int], set[int]] = defaultdict(set)

    key_removed = 0

    for unit, channels in removals:

        if unit.attention:
            key_removed = len(channels)

        for s in unit.rows:
            drop_out[(s.network, s.index)].update(int(c) + s.offset for c in channels)

        for s in unit.cols:
            drop_in[(s.network, s.index)].update(int(c) + s.offset for c in channels)

    weights: dict[str, np.ndarray] = dict(model.weights)

    stacks: dict[str, list[LayerSpec]] = {n: list(spec.network(n)) for n in NETWORKS}

    for network, i, layer in spec.layers():

        d_out, d_in = drop_out.get((network, i), set()), drop_in.get((network, i), set())

        if not d_out and not d_in:
            continue

        base = weight_name(network, i, "")

        weights.update(_shrink_conv(weights, base, layer, "", d_out, d_in))

        if layer.has_gate:
            gates = {c // layer.group for c in d_out}

            weights.update(_shrink_conv(weights, base, layer, "gate_", gates, d_in))

        stacks[network][i] = replace(
            layer, in_ch=layer.in_ch - len(d_in), out_ch=layer.out_ch - len(d_out)
        )

    changes: dict = {n: tuple(stacks[n]) for n in NETWORKS}

    if key_removed:
        changes["d_audio"] = spec.d_audio - key_removed

        changes["attention_scale"] = spec.scale

    return Model(replace(spec, **changes), weights)


def prune(model: Model, ratio: float, *, score: str = "l1", include_attention: bool = True,
          t_text: Optional[int] = None, t_mel: Optional[int] = None,
          schedule: Schedule = Schedule.AUTOREGRESSIVE) -> tuple[Model, PruneReport]:

    if not 0 <= ratio <= 1:
        raise DataError(f"prune ratio must be in [0, 1], got {ratio}")

    t_text = t_text or app_data.t_text

    t_mel = t_mel or app_data.t_mel

    units = find_units(model.spec, include_attention)

    selections = []

    reports = []

    for unit in units:

        slot_scores = unit_scores(model, unit, score)

        removed = _select(unit, slot_scores, ratio)

        kept = np.setdiff1d(np.arange(unit.size), removed)

        selections.append((unit, removed))

        layers = tuple(sorted({f"{s.network}.{s.index}" for s in unit.rows + unit.cols}))

        reports.append(UnitReport(
            unit.name, layers, unit.size, unit.group,
            tuple(int(c) for c in kept), tuple(int(c) for c in removed),
            tuple(float(x) for x in slot_scores),
        ))

    pruned = model if not any(len(r) for _, r in selections) else apply_removal(model, selections)

    problems = pruned.audit()

    if problems:
        raise InvariantError(f"pruned model failed structural audit: {problems[0]}")

    before = count_flops(model.spec, t_text, t_mel, schedule=schedule)

    after = count_flops(pruned.spec, t_text, t_mel, schedule=schedule)

    report = PruneReport(
        model.spec.name, ratio, score, tuple(reports),
        before.params, after.params, before.macs, after.macs,
    )

    logger.info(
        "pruned %s at ratio %.3f: %d channels removed, macs %d -> %d",
        model.spec.name, ratio, report.removed, before.macs, after.macs,
    )

    return pruned, report
