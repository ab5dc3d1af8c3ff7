import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from oracles import adam_literal, central_difference, lstm_literal
from vibro.dsp.features import build_feature_bundle
from vibro.errors import ConfigError, TrainingError
from vibro.neural import (
    ConvSpec,
    LossWeights,
    ModelConfig,
    TrainConfig,
    init_params,
    param_count,
    zero_params,
)
from vibro.neural.gradcheck import block_rel_error, grad_check, grad_check_dense, small_config
from vibro.neural.layers import (
    conv1d_same_backward,
    conv1d_same_forward,
    dense_backward,
    dense_forward,
    dropout_mask,
    maxpool1d_backward,
    maxpool1d_forward,
)
from vibro.neural.lstm import (
    bilstm_backward_batch,
    bilstm_forward,
    bilstm_forward_batch,
    lstm_direction_backward,
    lstm_direction_forward,
    lstm_stack_forward,
)
from vibro.neural.model import LOSS_TERMS, forward_batch, loss_and_grad, loss_terms, model_forward, predict
from vibro.neural.optim import AdamState, adam_step
from vibro.neural.params import ModelParams, param_shapes


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)


# --- dense / conv / pool -----------------------------------------------------


def test_dense_identity_and_relu():
    x = np.array([[-1.0, 2.0, -3.0]])
    y, _ = dense_forward(x, np.eye(3), np.zeros(3), "linear")
    np.testing.assert_array_equal(y, x)
    y, _ = dense_forward(x, np.eye(3), np.zeros(3), "relu")
    np.testing.assert_array_equal(y, [[0.0, 2.0, 0.0]])
    with pytest.raises(ValueError):
        dense_forward(x, np.eye(2), np.zeros(2))


def test_dense_weight_gradient():
    rng = np.random.default_rng(0)
    x, W, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3)), rng.normal(size=3)
    y, cache = dense_forward(x, W, b, "relu")
    _, dW, db = dense_backward(np.ones_like(y), cache, W)
    num = central_difference(lambda: dense_forward(x, W, b, "relu")[0].sum(), W)
    assert rel_err(dW, num) < 1e-6
    assert rel_err(db, central_difference(lambda: dense_forward(x, W, b, "relu")[0].sum(), b)) < 1e-6


def test_conv_delta_kernel_and_hand_case():
    x = np.random.default_rng(1).normal(size=(1, 1, 9))
    y, _ = conv1d_same_forward(x, np.array([[[0.0, 1.0, 0.0]]]), np.zeros(1))
    np.testing.assert_array_equal(y, x)
    y, _ = conv1d_same_forward(np.array([[[1.0, 2.0, 3.0]]]), np.ones((1, 1, 3)), np.zeros(1))
    np.testing.assert_array_equal(y[0, 0], [3.0, 6.0, 5.0])
    with pytest.raises(ValueError):
        conv1d_same_forward(x, np.ones((1, 1, 4)), np.zeros(1))


def test_conv_gradients():
    rng = np.random.default_rng(2)
    x, K, b = rng.normal(size=(2, 3, 11)), rng.normal(size=(4, 3, 5)), rng.normal(size=4)
    R = rng.normal(size=(2, 4, 11))
    f = lambda: float(np.sum(conv1d_same_forward(x, K, b)[0] * R))  # noqa: E731
    _, cache = conv1d_same_forward(x, K, b)
    dx, dK, db = conv1d_same_backward(R, cache, K)
    assert rel_err(dK, central_difference(f, K)) < 1e-6
    assert rel_err(db, central_difference(f, b)) < 1e-6
    assert rel_err(dx, central_difference(f, x)) < 1e-6


def test_maxpool_definition_and_ties():
    y, cache = maxpool1d_forward(np.array([[[1.0, 3.0, 2.0, 5.0]]]), 2)
    np.testing.assert_array_equal(y, [[[3.0, 5.0]]])
    x = np.random.default_rng(3).normal(size=(1, 2, 7))
    np.testing.assert_array_equal(maxpool1d_forward(x, 1)[0], x)
    y, cache = maxpool1d_forward(np.array([[[2.0, 2.0]]]), 2)
    np.testing.assert_array_equal(maxpool1d_backward(np.ones((1, 1, 1)), cache), [[[1.0, 0.0]]])


def test_maxpool_partial_window_and_gradient():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 3, 7))
    y, cache = maxpool1d_forward(x, 3)
    assert y.shape == (2, 3, 3)
    assert y[0, 0, 2] == x[0, 0, 6]
    R = rng.normal(size=y.shape)
    dx = maxpool1d_backward(R, cache)
    num = central_difference(lambda: float(np.sum(maxpool1d_forward(x, 3)[0] * R)), x)
    assert rel_err(dx, num) < 1e-6


def test_dropout_mask_inverted_scaling():
    m = dropout_mask((200_000,), 0.2, np.random.default_rng(0))
    assert set(np.unique(m)) == {0.0, 1.25}
    assert abs(m.mean() - 1.0) < 0.01
    assert dropout_mask((3,), 0.0, None) is None
    with pytest.raises(ValueError):
        dropout_mask((3,), 0.5, None)


# --- LSTM --------------------------------------------------------------------


def lstm_params(rng, i=2, h=4, scale=0.5):
    p = {}
    for d in ("fwd", "bwd"):
        p[f"{d}.W"] = scale * rng.normal(size=(i, 4 * h))
        p[f"{d}.U"] = scale * rng.normal(size=(h, 4 * h))
        p[f"{d}.b"] = scale * rng.normal(size=4 * h)
    return p


def test_lstm_zero_weights_give_zero():
    p = {k: np.zeros_like(v) for k, v in lstm_params(np.random.default_rng(0)).items()}
    out = bilstm_forward(np.random.default_rng(1).normal(size=(2, 12)), p)
    assert out.shape == (12, 8) and not out.any()


def test_lstm_matches_literal_equations():
    rng = np.random.default_rng(2)
    p = lstm_params(rng)
    x = rng.normal(size=(12, 3, 2))
    h, _ = lstm_direction_forward(x, p["fwd.W"], p["fwd.U"], p["fwd.b"])
    for n in range(3):
        np.testing.assert_allclose(h[:, n], lstm_literal(x[:, n], p["fwd.W"], p["fwd.U"], p["fwd.b"]), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bilstm_reversal_property(seed):
    rng = np.random.default_rng(seed)
    p = lstm_params(rng)
    x = rng.normal(size=(10, 2, 2))
    out, _ = bilstm_forward_batch(x, p)
    bwd_only, _ = lstm_direction_forward(x[::-1].copy(), p["bwd.W"], p["bwd.U"], p["bwd.b"])
    np.testing.assert_allclose(out[:, :, 4:], bwd_only[::-1], atol=1e-12)
    # with both directions sharing weights, reversing the input swaps the streams
    tied = dict(p, **{"bwd.W": p["fwd.W"], "bwd.U": p["fwd.U"], "bwd.b": p["fwd.b"]})
    a, _ = bilstm_forward_batch(x, tied)
    b, _ = bilstm_forward_batch(x[::-1].copy(), tied)
    np.testing.assert_allclose(b[:, :, :4], a[::-1, :, 4:], atol=1e-12)
    np.testing.assert_allclose(b[:, :, 4:], a[::-1, :, :4], atol=1e-12)


def test_bptt_all_weight_matrices():
    rng = np.random.default_rng(5)
    p = lstm_params(rng)
    x = rng.normal(size=(12, 2, 2))
    R = rng.normal(size=(12, 2, 8))
    f = lambda: float(np.sum(bilstm_forward_batch(x, p)[0] * R))  # noqa: E731
    _, cache = bilstm_forward_batch(x, p)
    grads = bilstm_backward_batch(R, cache, p)
    for name in p:
        assert rel_err(grads[name], central_difference(f, p[name])) < 1e-5, name


def test_lstm_input_gradient():
    rng = np.random.default_rng(6)
    p = lstm_params(rng)
    x = rng.normal(size=(8, 2, 2))
    R = rng.normal(size=(8, 2, 4))
    _, cache = lstm_direction_forward(x, p["fwd.W"], p["fwd.U"], p["fwd.b"])
    dx, *_ = lstm_direction_backward(R, cache, p["fwd.W"], p["fwd.U"], need_dx=True)
    f = lambda: float(np.sum(lstm_direction_forward(x, p["fwd.W"], p["fwd.U"], p["fwd.b"])[0] * R))  # noqa: E731
    assert rel_err(dx, central_difference(f, x)) < 1e-6


def test_lstm_nonfinite_and_shape_errors():
    p = lstm_params(np.random.default_rng(0))
    x = np.full((4, 1, 2), np.nan)
    with pytest.raises(TrainingError):
        bilstm_forward_batch(x, p)
    with pytest.raises(ValueError):
        lstm_stack_forward(np.zeros((1, 4, 1, 3)), p["fwd.W"][None], p["fwd.U"][None], p["fwd.b"][None])


def test_bilstm_dropout_training_mode():
    p = lstm_params(np.random.default_rng(1))
    seq = np.random.default_rng(2).normal(size=(2, 10))
    base = bilstm_forward(seq, p)
    dropped = bilstm_forward(seq, p, dropout_rate=0.5, rng=np.random.default_rng(3))
    kept = dropped != 0
    np.testing.assert_allclose(dropped[kept], 2.0 * base[kept])


# --- model -------------------------------------------------------------------


CFG = small_config(series_length=16, hidden=4, dropout_rate=0.2)


def bundles(rng, m=2, t=16):
    return [build_feature_bundle(rng.normal(size=t)) for _ in range(m)]


def test_zero_params_zero_output():
    y, inter = model_forward(bundles(np.random.default_rng(0)), zero_params(CFG), CFG)
    assert y.shape == (16,) and not y.any()
    assert inter.lstm.shape == (2, 16) and inter.cnn.shape == (2, CFG.cnn_embedding_size)


def test_output_bias_passthrough():
    p = zero_params(CFG)
    p.theta_nn["fc2.b"] = np.arange(16.0)
    y, _ = model_forward(bundles(np.random.default_rng(0)), p, CFG)
    np.testing.assert_array_equal(y, np.arange(16.0))


def test_eval_mode_is_pure():
    rng = np.random.default_rng(1)
    b = bundles(rng)
    p = init_params(CFG, 3)
    y1, _ = model_forward(b, p, CFG)
    y2, _ = model_forward(b, p.copy(), CFG)
    assert y1.tobytes() == y2.tobytes()


def test_identical_bundles_identical_embeddings():
    b = build_feature_bundle(np.random.default_rng(2).normal(size=16))
    _, inter = model_forward([b, b], init_params(CFG, 4), CFG)
    assert np.array_equal(inter.lstm[0], inter.lstm[1]) and np.array_equal(inter.cnn[0], inter.cnn[1])


def test_dropout_rate_zero_equals_eval():
    cfg = small_config(series_length=16, dropout_rate=0.0)
    b = bundles(np.random.default_rng(3))
    p = init_params(cfg, 5)
    y_train, _ = model_forward(b, p, cfg, mode="train", rng=np.random.default_rng(0))
    y_eval, _ = model_forward(b, p, cfg, mode="eval")
    assert y_train.tobytes() == y_eval.tobytes()


def test_bundle_count_checked():
    with pytest.raises(ValueError):
        model_forward(bundles(np.random.default_rng(0), m=3), init_params(CFG, 0), CFG)
    with pytest.raises(ValueError):
        model_forward(bundles(np.random.default_rng(0)), init_params(CFG, 0), CFG, mode="test")


def _swap_head_rows(p: ModelParams, cfg: ModelConfig) -> ModelParams:
    """Reorder fc0 input rows so they follow the signals after a swap of signals 0 and 1."""
    q = p.copy()
    w = cfg.lstm_embedding_size + cfg.cnn_embedding_size
    W = q.theta_nn["fc0.W"]
    q.theta_nn["fc0.W"] = np.concatenate([W[w : 2 * w], W[:w], W[2 * w :]])
    return q


@pytest.mark.parametrize("tied", [True, False])
def test_signal_permutation_invariance(tied):
    cfg = small_config(series_length=16, tied=tied)
    rng = np.random.default_rng(6)
    lstm_in = rng.normal(size=(3, 2, 2, 16))
    cnn_in = rng.normal(size=(3, 2, 3, 16))
    p = init_params(cfg, 7).map(lambda a: a + 0.05 * rng.normal(size=a.shape))
    y, _ = forward_batch(p, cfg, lstm_in, cnn_in)
    q = _swap_head_rows(p, cfg)
    if not tied:
        for g in ("theta_lstm", "theta_cnn"):
            d = getattr(q, g)
            swapped = {}
            for k in d:
                other = k.replace("ch0.", "chX.").replace("ch1.", "ch0.").replace("chX.", "ch1.")
                swapped[k] = d[other]
            setattr(q, g, swapped)
    y_swapped, _ = forward_batch(q, cfg, lstm_in[:, ::-1], cnn_in[:, ::-1])
    np.testing.assert_allclose(y_swapped, y, atol=1e-12)


def test_batch_forward_matches_single():
    rng = np.random.default_rng(8)
    p = init_params(CFG, 9)
    bs = [bundles(rng) for _ in range(3)]
    lstm_in = np.stack([np.stack([b.lstm_input for b in r]) for r in bs])
    cnn_in = np.stack([np.stack([b.cnn_input for b in r]) for r in bs])
    y = predict(p, CFG, lstm_in, cnn_in, chunk=2)
    for i, r in enumerate(bs):
        np.testing.assert_allclose(y[i], model_forward(r, p, CFG)[0], atol=1e-12)


def test_param_count_pure_and_shapes():
    assert param_count(CFG) == param_count(small_config(series_length=16)) == init_params(CFG, 0).count()
    p = init_params(ModelConfig(), 0)
    p.check(ModelConfig())
    assert p.count() == param_count(ModelConfig())
    untied = ModelConfig(tied_branches=False)
    assert param_count(untied) > param_count(ModelConfig())
    assert list(param_shapes(untied)["theta_lstm"])[0] == "ch0.fwd.W"


def test_init_bounds_and_determinism():
    a, b = init_params(CFG, 11), init_params(CFG, 11)
    assert a.flat().tobytes() == b.flat().tobytes()
    for g, name, arr in a.blocks():
        if name.endswith(".b"):
            assert not arr.any()
        else:
            fan = arr.shape[1] * arr.shape[2] if name.endswith(".K") else arr.shape[0]
            assert np.max(np.abs(arr)) <= 1 / np.sqrt(fan)


@pytest.mark.parametrize(
    "kw",
    [dict(dropout_rate=1.0), dict(dropout_rate=-0.1), dict(fc_widths=(8,)), dict(lstm_hidden_size=0)],
)
def test_model_config_rejects(kw):
    with pytest.raises((ConfigError, ValueError)):
        ModelConfig(**kw)


def test_conv_spec_and_config_roundtrip():
    with pytest.raises((ConfigError, ValueError)):
        ConvSpec(4, kernel=4)
    cfg = ModelConfig(cnn_layers=(ConvSpec(2, 3, 3),), fc_widths=(7, 5))
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({"bogus": 1})


# --- loss --------------------------------------------------------------------


def test_loss_vanishes():
    p = zero_params(small_config(series_length=16, channel_count=1))
    clean = np.random.default_rng(0).normal(size=16)
    total, terms = loss_terms(clean, clean, p, np.zeros((1, 16)), LossWeights(1, 1, 1, 1))
    assert total == 0.0 and set(terms) == set(LOSS_TERMS)


def test_loss_hand_case():
    p = zero_params(CFG)
    total, _ = loss_terms(np.array([1.0, 0.0]), np.zeros(2), p, np.zeros((2, 4)), LossWeights())
    assert total == 0.5


def test_pairwise_term_zero_for_identical_embeddings():
    e = np.random.default_rng(1).normal(size=(3, 1, 5))
    _, terms = loss_terms(np.zeros((3, 4)), np.zeros((3, 4)), zero_params(CFG), np.repeat(e, 2, axis=1),
                          LossWeights(lambda_pair=1.0))
    assert terms["pair"] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.tuples(*[st.floats(0, 2)] * 4))
def test_loss_breakdown_sums(seed, lams):
    rng = np.random.default_rng(seed)
    p = init_params(CFG, seed % 1000)
    total, terms = loss_terms(rng.normal(size=(2, 16)), rng.normal(size=(2, 16)), p, rng.normal(size=(2, 2, 16)),
                              LossWeights(*lams))
    assert all(v >= 0 for v in terms.values())
    assert abs(sum(terms.values()) - total) <= 1e-12 * max(1.0, total)


def test_negative_weights_rejected():
    with pytest.raises(ConfigError):
        LossWeights(lambda_cnn=-1e-3)


# --- adam --------------------------------------------------------------------


def _tiny_params(rng):
    return ModelParams({"a": rng.normal(size=(3, 2))}, {"b": rng.normal(size=4)}, {"c": rng.normal(size=1)})


def test_adam_zero_gradient_no_change():
    p = _tiny_params(np.random.default_rng(0))
    zero = p.map(np.zeros_like)
    q, _ = adam_step(p, zero, AdamState.zeros_like(p), lr=0.1)
    assert q.flat().tobytes() == p.flat().tobytes()


def test_adam_matches_literal_over_steps():
    rng = np.random.default_rng(1)
    p = _tiny_params(rng)
    state = AdamState.zeros_like(p)
    theta = p.flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t in range(1, 6):
        g = p.map(lambda a: rng.normal(size=a.shape))
        before = p.flat().copy()
        p, state = adam_step(p, g, state, lr=1e-2)
        theta, m, v = adam_literal(theta, g.flat(), m, v, t, 1e-2)
        np.testing.assert_allclose(p.flat(), theta, atol=1e-15)
        assert not np.array_equal(before, p.flat())
    assert state.step == 5


def test_adam_first_step_is_sign_like():
    p = _tiny_params(np.random.default_rng(2))
    g = p.map(lambda a: np.full(a.shape, 3.7))
    q, _ = adam_step(p, g, AdamState.zeros_like(p), lr=0.01)
    np.testing.assert_allclose(q.flat() - p.flat(), -0.01 * 3.7 / (3.7 + 1e-8), rtol=1e-12)


def test_adam_does_not_mutate_inputs():
    p = _tiny_params(np.random.default_rng(3))
    g = p.map(np.ones_like)
    snapshot = p.flat().copy()
    state = AdamState.zeros_like(p)
    adam_step(p, g, state, lr=0.1)
    assert np.array_equal(p.flat(), snapshot) and state.step == 0


# --- grad check --------------------------------------------------------------


def test_grad_check_full_hybrid():
    report = grad_check(small_config(series_length=12, channel_count=2, hidden=4), seed=0)
    assert report.max_rel_error < 1e-4, report.block_errors
    assert not report.not_applicable


def test_grad_check_untied_and_eval():
    assert grad_check(small_config(series_length=12, tied=False), seed=1).max_rel_error < 1e-4
    assert grad_check(small_config(series_length=12, dropout_rate=0.0), seed=2, train=False).max_rel_error < 1e-4


def test_grad_check_dense_only():
    assert grad_check_dense(seed=0).max_rel_error < 1e-7


def test_grad_check_zero_params_flagged():
    cfg = small_config(series_length=8, hidden=2)
    report = grad_check(cfg, seed=0, params=zero_params(cfg), weights=LossWeights(), train=False)
    # only the output bias sees a gradient when every weight is zero
    assert report.applicable and "theta_nn.fc2.b" not in report.not_applicable
    assert "theta_lstm.fwd.W" in report.not_applicable
    assert block_rel_error(np.zeros(3), np.zeros(3)) is None


def test_grad_check_rejects_large_configs():
    with pytest.raises(ValueError):
        grad_check(small_config(series_length=32))


def test_loss_and_grad_regulariser_gradient():
    cfg = small_config(series_length=8, hidden=2, dropout_rate=0.0)
    p = init_params(cfg, 0)
    rng = np.random.default_rng(0)
    li, ci, clean = rng.normal(size=(2, 2, 2, 8)), rng.normal(size=(2, 2, 3, 8)), rng.normal(size=(2, 8))
    w = LossWeights(0.3, 0.0, 0.0, 0.0)
    _, _, g_reg, _ = loss_and_grad(p, cfg, w, li, ci, clean, train=False)
    _, _, g0, _ = loss_and_grad(p, cfg, LossWeights(), li, ci, clean, train=False)
    n = sum(a.size for a in p.theta_lstm.values())
    for k, a in p.theta_lstm.items():
        np.testing.assert_allclose(g_reg.theta_lstm[k] - g0.theta_lstm[k], 2 * 0.3 * a / n, atol=1e-15)


def test_train_config_rejects():
    for kw in (dict(max_iterations=0), dict(batch_size=0), dict(learning_rate=0.0), dict(patience=0)):
        with pytest.raises(ConfigError):
            TrainConfig(**kw)
