"""
Text2Mel networks.

spec: architecture descriptions and builtin variants.
model: weights bound to a spec, seeded init, FDT1 persistence.
graph: encoders, attention, decoder and the synthesis loop.
cost: parameter and operation counting.
bench: single-thread synthesis benchmark.
"""

from .spec import (
    LayerKind, Activation, LayerSpec, PositionalEncodingSpec, ModelSpec,
    BUILTINS, builtin_spec, resolve_spec, load_spec, save_spec, spec_from_json,
)
from .model import Model, init_model, init_weights, expected_shapes
from .graph import (
    positional_encoding, add_positional, text_encode, audio_encode, attend,
    decode, decode_step, synthesize, synthesize_aligned,
)
from .cost import CostReport, CostRow, Schedule, count_flops, count_params
from .text import text_to_ids

__all__ = [
    "LayerKind",
    "Activation",
    "LayerSpec",
    "PositionalEncodingSpec",
    "ModelSpec",
    "BUILTINS",
    "builtin_spec",
    "resolve_spec",
    "load_spec",
    "save_spec",
    "spec_from_json",
    "Model",
    "init_model",
    "init_weights",
    "expected_shapes",
    "positional_encoding",
    "add_positional",
    "text_encode",
    "audio_encode",
    "attend",
    "decode",
    "decode_step",
    "synthesize",
    "synthesize_aligned",
    "CostReport",
    "CostRow",
    "Schedule",
    "count_flops",
    "count_params",
    "text_to_ids",
]
