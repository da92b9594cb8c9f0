"""Weight-norm fold: replace every (v, g) pair with the plain kernel g * v / ||v||."""

import logging

from dataclasses import replace

import numpy as np

from common.errors import DegenerateDirectionError

from net.model import Model, weight_name

from net.spec import NETWORKS

from nn.kernels import WeightNormParams, weight_norm_apply

logger = logging.getLogger(__name__)


def _fold_pair(weights: dict, base: str, prefix: str, where: str) -> None:

    v_key, g_key = f"{base}{prefix}v", f"{base}{prefix}g"

    try:
        w = weight_norm_apply(WeightNormParams(weights[v_key], weights[g_key]))
    except DegenerateDirectionError as e:
        raise DegenerateDirectionError(f"{where}: {e}") from None

    del weights[v_key], weights[g_key]

    weights[f"{base}{prefix or 'body_'}w"] = w.astype(np.float32)


def fold_weight_norm(model: Model) -> Model:

    spec = model.spec

    folded = [(n, i, layer) for n, i, layer in spec.layers() if layer.weight_norm]

    if not folded:
        return model

    weights = dict(model.weights)

    stacks = {n: list(spec.network(n)) for n in NETWORKS}

    for network, i, layer in folded:

        base = weight_name(network, i, "")

        _fold_pair(weights, base, "", f"{network}[{i}]")

        if layer.has_gate:
            _fold_pair(weights, base, "gate_", f"{network}[{i}] gate")

        stacks[network][i] = replace(layer, weight_norm=False)

    logger.info("folded weight norm in %d layers of %s", len(folded), spec.name)

    return Model(replace(spec, **{n: tuple(s) for n, s in stacks.items()}), weights)
