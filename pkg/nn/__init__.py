"""
Numeric kernels for the Text2Mel networks.

kernels: convolutions, weight normalization, embedding, nonlinearities.
gating: highway, group highway and residual blocks with analytic backward.
"""

from .kernels import (
    Padding, ConvWeights, SeparableWeights, WeightNormParams,
    conv1d, depthwise_separable_conv, separable_conv, apply_conv, conv1d_backward,
    weight_norm_apply, embedding_lookup, sigmoid, relu,
)
from .gating import (
    GateKind, GatedConvLayer, GatedGradients,
    highway_forward, group_highway_forward, residual_forward, gated_forward, gated_backward,
)

__all__ = [
    "Padding",
    "ConvWeights",
    "SeparableWeights",
    "WeightNormParams",
    "conv1d",
    "depthwise_separable_conv",
    "separable_conv",
    "apply_conv",
    "conv1d_backward",
    "weight_norm_apply",
    "embedding_lookup",
    "sigmoid",
    "relu",
    "GateKind",
    "GatedConvLayer",
    "GatedGradients",
    "highway_forward",
    "group_highway_forward",
    "residual_forward",
    "gated_forward",
    "gated_backward",
]
