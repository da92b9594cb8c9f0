import json

from pathlib import Path

import pytest

from common.errors import SpecError
from net.spec import (
    BUILTINS, LINEAGE_VOCAB, LayerKind, LayerSpec, builtin_spec, load_spec,
    resolve_spec, save_spec, spec_from_dict, spec_from_json,
)
from nn.kernels import Padding
from net.text import ids_to_text, normalize_text, text_to_ids

SPECS = Path(__file__).resolve().parents[1] / "config" / "specs"


def test_builtins_registered():

    assert set(BUILTINS.names()) >= {
        "dctts_baseline", "fast_dctts", "dctts_residual", "dctts_group_highway", "dctts_depthwise",
    }


def test_fast_dctts_layout():

    spec = builtin_spec("fast_dctts")

    assert spec.d_audio == 64 and spec.d_value == 64
    assert [l.kind for l in spec.audio_encoder[1:]] == [LayerKind.GROUP_HIGHWAY] * 5
    assert all(l.group == 2 for l in spec.audio_decoder if l.kind is LayerKind.GROUP_HIGHWAY)
    assert [l.kind for l in spec.text_encoder[2:]] == [LayerKind.RESIDUAL] * 12
    assert spec.pe.alpha_text == 1.0


def test_baseline_has_no_positional_encoding():

    spec = builtin_spec("dctts_baseline")

    assert spec.pe.alpha_text == 0 and spec.pe.alpha_audio == 0


def test_variants_swap_layer_kinds():

    residual = builtin_spec("dctts_residual")
    grouped = builtin_spec("dctts_group_highway")
    depthwise = builtin_spec("dctts_depthwise")

    assert not any(l.kind is LayerKind.HIGHWAY for _, _, l in residual.layers())
    assert all(l.group == 2 for _, _, l in grouped.layers() if l.kind is LayerKind.GROUP_HIGHWAY)
    assert all(l.separable == (l.kernel > 1) for _, _, l in depthwise.layers())


def test_weight_norm_marks_every_conv():

    spec = builtin_spec("fast_dctts", weight_norm=True)

    assert all(l.weight_norm for _, _, l in spec.layers())


@pytest.mark.parametrize("kwargs,message", [
    (dict(kind="highway_conv", in_ch=4, out_ch=8), "in_ch == out_ch"),
    (dict(kind="group_highway_conv", in_ch=6, out_ch=6, group=4), "not divisible"),
    (dict(kind="highway_conv", in_ch=4, out_ch=4, group=2), "group_highway_conv only"),
    (dict(kind="conv", in_ch=4, out_ch=4, kernel=2, padding="same"), "odd kernel"),
    (dict(kind="conv", in_ch=0, out_ch=4), "positive integer"),
    (dict(kind="embedding", in_ch=4, out_ch=4), "embedding"),
    (dict(kind="conv", in_ch=4, out_ch=4, separable=True, weight_norm=True), "separable"),
    (dict(kind="unknown", in_ch=4, out_ch=4), "unknown"),
])
def test_layer_spec_validation(kwargs, message):

    with pytest.raises(SpecError, match=message):
        LayerSpec(**kwargs)


def test_label_and_describe():

    layer = LayerSpec("group_highway_conv", 64, 64, 3, 9, Padding.CAUSAL, 2)

    assert layer.label.startswith("GH")
    assert layer.gate_ch == 32
    assert "64" in layer.describe()


def test_tiny_spec_file_expands_repeats(tiny_spec):

    assert tiny_spec.name == "tiny"
    assert [l.dilation for l in tiny_spec.text_encoder[1:]] == [1, 3]
    assert tiny_spec.audio_encoder[1].group == 2


def test_channel_chain_is_checked():

    data = json.loads((SPECS / "tiny.json").read_text())
    data["audio_decoder"][0]["in_ch"] = 6

    with pytest.raises(SpecError, match="expected 8 input channels"):
        spec_from_dict(data)


def test_text_encoder_must_use_same_padding():

    data = json.loads((SPECS / "tiny.json").read_text())
    data["text_encoder"][0]["padding"] = "causal"

    with pytest.raises(SpecError, match="must be same"):
        spec_from_dict(data)


def test_unknown_fields_rejected():

    data = json.loads((SPECS / "tiny.json").read_text())
    data["extra"] = 1

    with pytest.raises(SpecError, match="unknown field"):
        spec_from_dict(data)


def test_malformed_json_reports_line():

    with pytest.raises(SpecError, match=r"bad\.json:3:"):
        spec_from_json('{\n  "name": "x",\n  oops\n}', "bad.json")


def test_builtin_shorthand_files():

    wn = load_spec(SPECS / "fast_dctts_wn.json")
    g4 = load_spec(SPECS / "fast_dctts_g4.json")

    assert wn.name == "fast_dctts_wn"
    assert all(l.weight_norm for _, _, l in wn.layers())
    assert all(l.group == 4 for _, _, l in g4.layers() if l.kind is LayerKind.GROUP_HIGHWAY)
    assert len(g4.audio_decoder) == 6


def test_save_and_load_roundtrip(tmp_path):

    spec = builtin_spec("dctts_depthwise")
    path = tmp_path / "spec.json"

    save_spec(spec, path)

    assert load_spec(path) == spec


def test_resolve_spec():

    assert resolve_spec("fast_dctts").name == "fast_dctts"
    assert resolve_spec(str(SPECS / "tiny.json")).name == "tiny"

    with pytest.raises(SpecError, match="unknown model"):
        resolve_spec("no_such_model")


def test_text_front_end():

    assert normalize_text("Héllo,  World!") == "hello world"

    ids = text_to_ids("ab.")

    assert ids_to_text(ids) == "ab.E"
    assert ids[-1] == LINEAGE_VOCAB.index("E")
