"""
Exact parameter and operation counts.

macs count multiply-accumulates of convolutions and attention. Elementwise
ops count what runs outside them: 3*C*T blend ops plus C/g*T sigmoids per
gated layer, C*T adds per residual layer, C*T per ReLU, T_text per mel frame
for the attention softmax and n_mels per frame for the output sigmoid.
flops = 2*macs + elementwise.

With schedule "autoregressive" every mel-side cost is summed over prefix
lengths 1..T_mel, which is what a synthesizer that re-runs the audio stacks
on the whole prefix for every new frame performs; "single" runs each stack
once over T_mel frames.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from enum import Enum

from common.errors import DataError

from net.spec import Activation, LayerSpec, ModelSpec

REFERENCE_TOTALS = {
    "dctts_baseline": {"params": 23_896_064, "flops": 275_098_419_200},
    "fast_dctts": {"params": 657_728, "flops": 4_835_728_000},
}


class Schedule(str, Enum):

    SINGLE = "single"

    AUTOREGRESSIVE = "autoregressive"


@dataclass(frozen=True)
class CostRow:

    network: str

    index: int

    label: str

    params: int

    macs: int

    elementwise: int

    @property
    def flops(self) -> int:
        return 2 * self.macs + self.elementwise

    def to_dict(self) -> dict:
        return {**asdict(self), "flops": self.flops}


@dataclass(frozen=True)
class CostReport:

    model: str

    t_text: int

    t_mel: int

    schedule: Schedule

    rows: tuple[CostRow, ...] = field(default_factory=tuple)

    @property
    def params(self) -> int:
        return sum(r.params for r in self.rows)

    @property
    def macs(self) -> int:
        return sum(r.macs for r in self.rows)

    @property
    def elementwise(self) -> int:
        return sum(r.elementwise for r in self.rows)

    @property
    def flops(self) -> int:
        return 2 * self.macs + self.elementwise

    def network_totals(self) -> dict[str, CostRow]:

        totals: dict[str, CostRow] = {}

        for r in self.rows:
            prev = totals.get(r.network)

            totals[r.network] = CostRow(
                r.network, -1, r.network,
                r.params + (prev.params if prev else 0),
                r.macs + (prev.macs if prev else 0),
                r.elementwise + (prev.elementwise if prev else 0),
            )

        return totals

    def reference_delta(self) -> dict[str, int]:

        """Difference to the published totals for a builtin name, empty otherwise."""

        ref = REFERENCE_TOTALS.get(self.model)

        if ref is None:
            return {}

        return {
            "params": self.params - ref["params"],
            "flops": self.flops - ref["flops"],
        }

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "t_text": self.t_text,
            "t_mel": self.t_mel,
            "schedule": self.schedule.value,
            "params": self.params,
            "macs": self.macs,
            "elementwise": self.elementwise,
            "flops": self.flops,
            "reference_delta": self.reference_delta(),
            "rows": [r.to_dict() for r in self.rows],
        }


def conv_params(layer: LayerSpec, out_ch: int, include_bias: bool = True) -> int:

    c_in, k = layer.in_ch, layer.kernel

    weights = c_in * k + out_ch * c_in if layer.separable else out_ch * c_in * k

    if layer.weight_norm:
        weights += out_ch

    return weights + (out_ch if include_bias else 0)


def conv_macs(layer: LayerSpec, out_ch: int, T: int) -> int:

    c_in, k = layer.in_ch, layer.kernel

    if layer.separable:
        return (c_in * k + out_ch * c_in) * T

    return out_ch * c_in * k * T


def count_layer(layer: LayerSpec, T: int, include_bias: bool = True) -> tuple[int, int, int]:

    """(params, macs, elementwise ops) of one layer run over T frames."""

    c = layer.out_ch

    params = conv_params(layer, c, include_bias)

    macs = conv_macs(layer, c, T)

    elementwise = 0

    if layer.has_gate:
        params += conv_params(layer, layer.gate_ch, include_bias)

        macs += conv_macs(layer, layer.gate_ch, T)

        elementwise += 3 * c * T + layer.gate_ch * T
    elif layer.gated:
        elementwise += c * T

    if layer.activation is Activation.RELU:
        elementwise += c * T

    return params, macs, elementwise


def _check_lengths(t_text: int, t_mel: int) -> None:

    if t_text < 1 or t_mel < 1:
        raise DataError(f"sequence lengths must be >= 1, got t_text={t_text}, t_mel={t_mel}")


def count_flops(spec: ModelSpec, t_text: int, t_mel: int, *,
                schedule: Schedule = Schedule.SINGLE, include_bias: bool = True,
                include_embedding: bool = False) -> CostReport:

    _check_lengths(t_text, t_mel)

    schedule = Schedule(schedule)

    mel_frames = t_mel * (t_mel + 1) // 2 if schedule is Schedule.AUTOREGRESSIVE else t_mel

    rows: list[CostRow] = []

    if include_embedding:
        rows.append(CostRow("embedding", 0, f"E-{spec.vocab}-{spec.d_text}",
                            spec.vocab * spec.d_text, 0, 0))

    for network, i, layer in spec.layers():
        T = t_text if network == "text_encoder" else mel_frames

        rows.append(CostRow(network, i, layer.describe(), *count_layer(layer, T, include_bias)))

    attention_macs = (spec.d_audio + spec.d_value) * t_text * mel_frames

    rows.append(CostRow("attention", 0, f"A-{spec.d_audio}-{spec.d_value}", 0,
                        attention_macs, t_text * mel_frames))

    rows.append(CostRow("output", 0, f"sigmoid-{spec.n_mels}", 0, 0, spec.n_mels * mel_frames))

    return CostReport(spec.name, t_text, t_mel, schedule, tuple(rows))


def count_params(spec: ModelSpec, include_bias: bool = True, include_embedding: bool = False) -> int:

    return count_flops(spec, 1, 1, include_bias=include_bias,
                       include_embedding=include_embedding).params


def ratio(numerator: int, denominator: int) -> float:

    return numerator / denominator if denominator else float("nan")
