import functools

from pathlib import Path

import numpy as np

import pytest

from common.errors import DataError, OverPrunedError
from compress.fold import fold_weight_norm
from compress.prune import _slots_to_remove, filter_importance, find_units, prune
from net.graph import attend, audio_encode, decode, synthesize, text_encode
from net.model import init_model, weight_name
from net.spec import builtin_spec, load_spec, with_weight_norm
from net.text import text_to_ids

SPECS = Path(__file__).resolve().parents[1] / "config" / "specs"

IDS = text_to_ids("prune me.")

RATIO = 0.25


def forward(model, mel):

    K, V = text_encode(model, IDS)
    Q = audio_encode(model, mel)
    _, R = attend(K, V, Q, model.spec.scale)

    return K, decode(model, R, Q)


def zero_weakest(model, ratio):

    """Zero the last slots of every unit so pruning has an exact answer."""

    updates = {}
    chosen = {}

    for unit in find_units(model.spec):
        n = _slots_to_remove(ratio, unit.slots)
        channels = np.arange(unit.size - n * unit.group, unit.size)
        chosen[unit.name] = tuple(int(c) for c in channels)

        for s in unit.rows:
            for role in ("body_w", "body_b"):
                name = weight_name(s.network, s.index, role)
                w = np.array(updates.get(name, model.weights[name]))
                w[channels + s.offset] = 0.0
                updates[name] = w

    return model.with_weights(updates), chosen


def test_units_of_tiny_model(tiny_spec):

    units = {u.name: u for u in find_units(tiny_spec)}

    assert set(units) == {"audio_decoder.0", "attention.key"}
    assert units["attention.key"].group == 2
    assert units["audio_decoder.0"].size == 4


def test_zero_ratio_returns_same_model(tiny_model):

    pruned, report = prune(tiny_model, 0.0, t_text=4, t_mel=4)

    assert pruned is tiny_model
    assert report.removed == 0
    assert report.macs_drop == 0.0


def test_full_ratio_is_over_pruned(tiny_model):

    with pytest.raises(OverPrunedError, match="over-pruned layer"):
        prune(tiny_model, 1.0, t_text=4, t_mel=4)


@pytest.mark.parametrize("ratio", [-0.1, 1.5, float("nan"), float("inf")])
def test_ratio_outside_unit_interval(tiny_model, ratio):

    with pytest.raises(DataError, match="prune ratio"):
        prune(tiny_model, ratio)


@pytest.mark.parametrize("name", ["tiny", "fast_dctts"])
def test_full_ratio_over_prunes_any_model(tiny_spec, name):

    spec = tiny_spec if name == "tiny" else builtin_spec(name)

    with pytest.raises(OverPrunedError):
        prune(init_model(spec, seed=0), 1.0, t_text=4, t_mel=4)


def test_arguments_checked(tiny_model):

    with pytest.raises(DataError, match="unknown importance score"):
        prune(tiny_model, 0.1, score="l7")


def test_zero_filters_prune_without_changing_output(tiny_spec, rng):

    for trial in range(50):
        model, chosen = zero_weakest(init_model(tiny_spec, seed=trial), RATIO)
        mel = rng.random((8, int(rng.integers(1, 11)))).astype(np.float32)

        pruned, report = prune(model, RATIO, t_text=4, t_mel=4)

        assert {u.name: u.removed for u in report.units} == chosen
        assert pruned.spec.d_audio == 2
        assert pruned.spec.attention_scale == model.spec.scale
        assert pruned.audit() == []

        K, y = forward(model, mel)
        K_pruned, y_pruned = forward(pruned, mel)

        np.testing.assert_allclose(K_pruned, K[:2], atol=1e-6)
        np.testing.assert_allclose(y_pruned, y, atol=1e-6)


def test_attention_unit_can_be_excluded(tiny_model):

    pruned, report = prune(tiny_model, RATIO, include_attention=False, t_text=4, t_mel=4)

    assert pruned.spec.d_audio == tiny_model.spec.d_audio
    assert [u.name for u in report.units] == ["audio_decoder.0"]
    assert pruned.spec.audio_decoder[0].out_ch == 3


def test_weight_norm_consumer_keeps_effective_kernel(tiny_spec):

    model = init_model(with_weight_norm(tiny_spec), seed=5)

    pruned, report = prune(model, RATIO, include_attention=False, t_text=4, t_mel=4)

    kept = list(report.units[0].kept)
    before = fold_weight_norm(model).weight("audio_decoder", 4, "body_w")
    after = fold_weight_norm(pruned).weight("audio_decoder", 4, "body_w")

    np.testing.assert_allclose(after, before[:, kept], rtol=1e-5, atol=1e-7)


def test_lowest_scores_are_removed(tiny_model):

    _, report = prune(tiny_model, RATIO, include_attention=False, t_text=4, t_mel=4)

    unit = report.units[0]
    scores = filter_importance(tiny_model.weight("audio_decoder", 0, "body_w"))
    for i in (1, 2, 3):
        scores = scores + filter_importance(tiny_model.weight("audio_decoder", i, "body_w"))

    assert unit.removed == (int(np.argmin(scores)),)
    np.testing.assert_allclose(unit.scores, scores, rtol=1e-12)


def test_fast_model_macs_drop():

    model = init_model(builtin_spec("fast_dctts"), seed=0)

    pruned, report = prune(model, 0.1)

    assert report.macs_drop >= 0.08
    assert report.params_after < report.params_before
    assert pruned.spec.d_audio == 58
    assert pruned.spec.audio_encoder[1].out_ch == 58


@functools.lru_cache(maxsize=None)
def seeded_model(name, weight_norm, seed):

    spec = load_spec(SPECS / f"{name}.json") if name in ("tiny", "fast_dctts_g4") else builtin_spec(name)

    return init_model(with_weight_norm(spec) if weight_norm else spec, seed)


def test_random_prunes_pass_structural_audit():

    rng = np.random.default_rng(2024)
    names = ("tiny", "fast_dctts", "fast_dctts_g4", "dctts_depthwise")

    for trial in range(100):
        name = names[trial % 4]
        model = seeded_model(name, bool((trial // 4) % 2), trial % 3)
        ratio = float(rng.uniform(0.0, 0.7))

        pruned, report = prune(model, ratio, score=("l1", "l2")[trial % 2],
                               include_attention=bool(rng.integers(0, 2)), t_text=4, t_mel=4)

        assert pruned.audit() == [], (name, ratio)
        assert report.params_after <= report.params_before

        for _, _, layer in pruned.spec.layers():
            if layer.has_gate:
                assert layer.out_ch % layer.group == 0
                assert layer.gate_ch * layer.group == layer.out_ch

        mel = synthesize(pruned, IDS, 2, early_stop=False)

        assert mel.bins.shape == (pruned.spec.n_mels, 2)
        assert np.all(np.isfinite(mel.bins))
