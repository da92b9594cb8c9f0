import numpy as np

import pytest

from common.errors import ContainerError, DegenerateDirectionError, ShapeError
from common.tensor import container_write
from net.model import EMBEDDING, Model, expected_shapes, init_model, init_weights, zero_model
from net.spec import builtin_spec


def test_init_is_seeded(tiny_spec):

    a = init_weights(tiny_spec, seed=3)
    b = init_weights(tiny_spec, seed=3)
    c = init_weights(tiny_spec, seed=4)

    assert all(a[k].tobytes() == b[k].tobytes() for k in a)
    assert any(a[k].tobytes() != c[k].tobytes() for k in a)


def test_weights_match_expected_shapes(tiny_model):

    shapes = expected_shapes(tiny_model.spec)

    assert set(tiny_model.weights) == set(shapes)
    assert all(tiny_model.weights[k].shape == s for k, s in shapes.items())
    assert tiny_model.embedding.shape == (32, 8)
    assert tiny_model.audit() == []


def test_gate_shapes_follow_group(tiny_model):

    assert tiny_model.weight("audio_encoder", 1, "gate_w").shape == (2, 4, 3)
    assert tiny_model.weight("audio_decoder", 1, "body_w").shape == (4, 4, 3)
    assert "audio_decoder.1.gate_w" not in tiny_model.weights


def test_missing_and_unexpected_weights(tiny_model):

    weights = dict(tiny_model.weights)
    del weights["text_encoder.0.body_b"]
    weights["extra.0.w"] = np.zeros(1, np.float32)

    with pytest.raises(ShapeError, match="missing weight 'text_encoder.0.body_b'"):
        Model(tiny_model.spec, weights)


def test_wrong_shape_rejected(tiny_model):

    with pytest.raises(ShapeError, match="expected"):
        tiny_model.with_weights({EMBEDDING: np.zeros((31, 8), np.float32)})


def test_save_load_roundtrip(tmp_path, tiny_model):

    path = tmp_path / "tiny.fdt1"

    tiny_model.save(path)
    loaded = Model.load(path)

    assert loaded.spec == tiny_model.spec
    assert all(loaded.weights[k].tobytes() == v.tobytes() for k, v in tiny_model.weights.items())


def test_load_rejects_plain_container(tmp_path):

    path = tmp_path / "mel.fdt1"
    container_write(path, [("mel", np.ones((2, 2), np.float32))])

    with pytest.raises(ContainerError, match="not a model file"):
        Model.load(path)


def test_weight_norm_init_starts_at_unit_scale():

    model = init_model(builtin_spec("fast_dctts", weight_norm=True), seed=1)

    v = model.weight("audio_encoder", 1, "v")
    g = model.weight("audio_encoder", 1, "g")

    np.testing.assert_allclose(np.sqrt(np.sum(v.astype(np.float64) ** 2, axis=(1, 2))), g, rtol=1e-6)


def test_zero_direction_reported_on_compile():

    model = zero_model(builtin_spec("fast_dctts", weight_norm=True))

    with pytest.raises(DegenerateDirectionError, match=r"text_encoder\[0\]"):
        model.compiled

    assert model.audit()


def test_depthwise_weights():

    spec = builtin_spec("dctts_depthwise")
    shapes = expected_shapes(spec)

    assert shapes["audio_encoder.3.body_dw"] == (256, 3)
    assert shapes["audio_encoder.3.body_pw"] == (256, 256)
    assert shapes["audio_encoder.3.gate_dw"] == (256, 3)
