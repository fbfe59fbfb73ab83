import math

import numpy as np
import pytest
from conftest import tiny_config

from pseudoloc import autodiff as ad
from pseudoloc.errors import RejectedInputError
from pseudoloc.models import (
    ModelConfig,
    SelfAttention,
    build_model,
    default_config,
    dumps_toml,
    load_config,
    loads_toml,
    save_config,
)
from pseudoloc.pose import pose_loss


def jitter_biases(model, seed=1, scale=0.05):
    """Move off the all-zero bias init, where ReLU kinks sit exactly at the evaluation point."""
    r = np.random.default_rng(seed)
    for name, p in model.named_parameters():
        if name.endswith("bias"):
            p.data += r.normal(scale=scale, size=p.shape)


def tiny_batch(rng, b=2, n=64, s=16):
    return {
        "points": rng.uniform(-1, 1, (b, n, 3)) + [0.0, 0.0, 2.0],
        "images": rng.normal(size=(b, 3, s, s)),
        "jet": rng.uniform(size=(b, 3, s, s)),
    }


def test_point_stream_shapes_and_bad_count(rng):
    m = build_model(tiny_config("pointnet-pose"))
    pts = rng.normal(size=(64, 3))
    assert m.point(pts).shape == (12,)
    assert m.point(pts[None].repeat(3, 0)).shape == (3, 12)
    with pytest.raises(RejectedInputError):
        m.point(pts[:63])
    t, q = m.predict({"points": pts[None]})
    assert t.shape == (1, 3) and q.shape == (1, 3)


def test_point_stream_permutation_invariant(rng):
    m = build_model(tiny_config("pointnet-pose"))
    pts = rng.normal(size=(64, 3))
    base = m.point(pts).data
    for _ in range(20):
        out = m.point(pts[rng.permutation(64)]).data
        assert np.abs(out - base).max() < 1e-9
    t0, q0 = m.predict({"points": pts[None]})
    t1, q1 = m.predict({"points": pts[rng.permutation(64)][None]})
    assert np.abs(t1.data - t0.data).max() < 1e-9 and np.abs(q1.data - q0.data).max() < 1e-9


def test_point_stream_is_translation_sensitive(rng):
    m = build_model(tiny_config("pointnet-pose"))
    pts = rng.normal(size=(64, 3))
    a, b = m.point(pts).data, m.point(pts + [1.0, 0.0, 0.0]).data
    assert np.linalg.norm(a - b) > 1e-6


def test_attention_zero_value_path_is_identity(rng):
    att = SelfAttention(rng, 5)
    att.w_g.data[...] = 0
    x = rng.normal(size=5)
    np.testing.assert_array_equal(att(x).data, x)


def test_attention_two_entry_example():
    att = SelfAttention(np.random.default_rng(0), 2)
    for w in (att.w_theta, att.w_phi, att.w_g):
        w.data[...] = np.eye(2)
    out = att(np.array([1.0, 0.0])).data
    e = math.e
    np.testing.assert_allclose(out, [1 + e / (e + 1), 0.5], rtol=0, atol=1e-15)
    assert out[0] - 1 == pytest.approx(0.7311, abs=5e-5)


def test_attention_matches_matrix_oracle(rng):
    c = 6
    att = SelfAttention(rng, c)
    x = rng.normal(size=(3, c))
    got = att(x).data
    for xi, yi in zip(x, got):
        s = np.outer(xi @ att.w_theta.data, xi @ att.w_phi.data)
        a = np.exp(s - s.max(1, keepdims=True))
        a /= a.sum(1, keepdims=True)
        np.testing.assert_allclose(yi, xi + a @ (xi @ att.w_g.data), rtol=1e-12, atol=1e-12)


def test_rgb_stream_contract(rng):
    m = build_model(tiny_config("fusionloc"))
    img = rng.normal(size=(3, 16, 16))
    assert m.rgb(img).shape == (12,)
    assert m.rgb(img[None]).shape == (1, 12)
    with pytest.raises(RejectedInputError):
        m.rgb(rng.normal(size=(3, 15, 16)))
    other = m.rgb(rng.normal(size=(3, 16, 16))).data
    assert not np.allclose(other, m.rgb(img).data)


def test_zero_image_gives_zero_pre_attention_feature():
    m = build_model(tiny_config("fusionloc"))
    np.testing.assert_array_equal(m.rgb.encode(np.zeros((3, 16, 16))).data, np.zeros(12))


def test_fusion_head_zero_path(rng):
    m = build_model(tiny_config("fusionloc"))
    for layer in (m.fc_t, m.fc_q):
        layer.weight.data[...] = 0
    t, q = m.fusion_head(np.zeros(12), np.zeros(12))
    assert t.shape == (3,) and q.shape == (3,)
    np.testing.assert_array_equal(t.data, 0)
    np.testing.assert_array_equal(q.data, 0)


def test_loss_reaches_both_streams(rng):
    m = build_model(tiny_config("fusionloc"))
    batch = tiny_batch(rng)
    t, q = m.predict(batch)
    ad.backward(pose_loss(t, q, rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), m.loss_weights))
    for name, p in m.named_parameters():
        assert np.all(np.isfinite(p.grad)), name
    for stream in (m.rgb, m.point):
        assert sum(float(np.abs(p.grad).sum()) for p in stream.parameters()) > 0


def test_depth_posenet_deterministic(rng):
    m = build_model(tiny_config("depth-posenet", attention=False))
    jet = rng.uniform(size=(1, 3, 16, 16))
    t0, q0 = m.predict({"jet": jet})
    t1, q1 = m.predict({"jet": jet.copy()})
    assert t0.shape == (1, 3) and q0.shape == (1, 3)
    np.testing.assert_array_equal(t0.data, t1.data)
    np.testing.assert_array_equal(q0.data, q1.data)


@pytest.mark.parametrize("kind", ["fusionloc", "pointnet-pose", "depth-posenet"])
def test_tiny_models_gradcheck(kind, rng):
    m = build_model(tiny_config(kind))
    jitter_biases(m)
    batch = tiny_batch(rng)
    tt, tq = rng.normal(size=(2, 3)), 0.3 * rng.normal(size=(2, 3))

    def loss():
        t, q = m.predict(batch)
        return pose_loss(t, q, tt, tq, m.loss_weights)

    res = ad.gradcheck(loss, m.parameters(), n_coords=100)
    assert len(res.rel_error) >= 100
    assert res.max_rel_error < 1e-4


def test_same_seed_same_weights():
    a = build_model(tiny_config("fusionloc", seed=3)).state_dict()
    b = build_model(tiny_config("fusionloc", seed=3)).state_dict()
    c = build_model(tiny_config("fusionloc", seed=4)).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


@pytest.mark.parametrize("kind,count", [
    ("pointnet-pose", 1_728_072),
    ("depth-posenet", 13_830_728),
    ("fusionloc", 20_796_552),
])
def test_documented_parameter_counts(kind, count):
    assert build_model(default_config(kind)).num_parameters() == count


def test_default_config_invariants():
    cfg = default_config("fusionloc")
    assert cfg.point.feature_dim == cfg.rgb.feature_dim == 1024
    assert cfg.point.global_widths[-1] == 1024
    assert cfg.rgb.image_size == 224
    assert [sa.n_centroids for sa in cfg.point.sa_layers] == [256, 64]
    assert default_config("depth-posenet").rgb.attention is False


def test_config_rejections():
    cfg = tiny_config("fusionloc")
    cfg.point.sa_layers[1].n_centroids = 32
    with pytest.raises(RejectedInputError):
        cfg.validate()
    with pytest.raises(RejectedInputError):
        ModelConfig(kind="resnet").validate()
    with pytest.raises(RejectedInputError):
        ModelConfig.from_dict({"bogus": 1})


def test_toml_round_trip(tmp_path):
    cfg = tiny_config("fusionloc", seed=9)
    assert loads_toml(dumps_toml(cfg)) == cfg
    save_config(default_config("depth-posenet"), tmp_path / "m.toml")
    assert load_config(tmp_path / "m.toml") == default_config("depth-posenet")


def test_precomputed_features(rng):
    cfg = tiny_config("fusionloc")
    cfg.rgb.precomputed_dim = 20
    m = build_model(cfg.validate())
    assert m.rgb(rng.normal(size=(2, 20))).shape == (2, 12)
    with pytest.raises(RejectedInputError):
        m.rgb(rng.normal(size=(2, 19)))
