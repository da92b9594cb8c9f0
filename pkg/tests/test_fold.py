import numpy as np

import pytest

from compress.fold import fold_weight_norm
from net.cost import count_params
from net.graph import synthesize
from net.model import init_model
from net.spec import builtin_spec, with_weight_norm
from net.text import text_to_ids


def test_model_without_weight_norm_is_returned(tiny_model):

    assert fold_weight_norm(tiny_model) is tiny_model


def role(name):
    return name.rsplit(".", 1)[1]


def test_fold_preserves_output(tiny_spec):

    model = init_model(with_weight_norm(tiny_spec), seed=11)

    # move g away from ||v|| so the fold has work to do
    g = {k: v * np.float32(1.5) for k, v in model.weights.items() if role(k) in ("g", "gate_g")}
    model = model.with_weights(g)

    folded = fold_weight_norm(model)

    assert not any(l.weight_norm for _, _, l in folded.spec.layers())
    assert not any(role(k) in ("v", "g", "gate_v", "gate_g") for k in folded.weights)
    assert folded.num_weights() < model.num_weights()

    ids = text_to_ids("fold")

    np.testing.assert_allclose(
        synthesize(folded, ids, 10, early_stop=False).bins,
        synthesize(model, ids, 10, early_stop=False).bins,
        atol=1e-6,
    )


def test_fold_is_idempotent(tiny_spec):

    folded = fold_weight_norm(init_model(with_weight_norm(tiny_spec), seed=2))

    again = fold_weight_norm(folded)

    assert again is folded
    assert again.spec == folded.spec
    assert all(np.array_equal(again.weights[k], folded.weights[k]) for k in folded.weights)


@pytest.mark.parametrize("name", ["tiny", "fast_dctts"])
def test_fold_drops_one_gain_per_output_filter(tiny_spec, name):

    spec = with_weight_norm(tiny_spec if name == "tiny" else builtin_spec(name))

    folded = fold_weight_norm(init_model(spec, seed=0))

    gains = sum(
        layer.out_ch + (layer.gate_ch if layer.has_gate else 0)
        for _, _, layer in spec.layers() if layer.weight_norm
    )

    assert gains > 0
    assert count_params(spec) - count_params(folded.spec) == gains
    assert count_params(spec, include_bias=False) - count_params(folded.spec, include_bias=False) == gains
