import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from snnbudget.core import LifConsts, NetworkModel, SimParams, classify, present
from snnbudget.errors import InputError, NumericError, ShapeError
from snnbudget.learning import (LearnConfig, StdpState, apply_accumulated, apply_weight_decay,
                                assign_labels, balance_threshold, compute_factors, label_neurons,
                                normalize_columns, stdp_update, train, update_traces)
from snnbudget.quant import QuantConfig, on_grid, quantize_model

CFG = LearnConfig()


def _state(n_in=4, n_exc=3):
    return StdpState.for_model(NetworkModel.create(n_in, n_exc, seed=0))


def test_trace_closed_form_decay():
    s = _state()
    s.x_pre[:] = 1.0
    update_traces(s, np.zeros(4, bool), np.zeros(3, bool), 1.0)
    assert s.x_pre[0] == pytest.approx(math.exp(-0.05))
    assert s.x_pre[0] == pytest.approx(0.95123, abs=1e-5)


def test_trace_reset_to_one_and_counts():
    s = _state()
    s.x_pre[:] = [0.3, 0.9, 0.0, 0.5]
    update_traces(s, np.array([1, 0, 1, 0], bool), np.array([0, 1, 0], bool), 1.0)
    assert s.x_pre[0] == 1.0 and s.x_pre[2] == 1.0 and s.x_post[1] == 1.0
    assert list(s.s_pre_acc) == [1, 0, 1, 0] and list(s.s_post_acc) == [0, 1, 0]


def test_trace_zero_fixed_point_and_shape_check():
    s = _state()
    update_traces(s, np.zeros(4, bool), np.zeros(3, bool), 1.0)
    assert not s.x_pre.any() and not s.x_post.any()
    with pytest.raises(ShapeError):
        update_traces(s, np.zeros(5, bool), np.zeros(3, bool), 1.0)


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
def test_traces_nonnegative_and_decay_without_spikes(events):
    s = _state(1, 1)
    for pre, post in events:
        before = s.x_pre.copy()
        update_traces(s, np.array([pre]), np.array([post]), 1.0)
        assert s.x_pre[0] >= 0 and s.x_post[0] >= 0
        if not pre:
            assert s.x_pre[0] <= before[0]


def test_factors_examples():
    s = _state()
    s.s_post_acc[:] = [10, 3, 0]
    assert compute_factors(s, LearnConfig(s_th=5))[0] == 2.0
    s.s_post_acc[:] = 0
    assert compute_factors(s, CFG) == (0.0, 0.0)
    s.s_post_acc[:] = [8, 0, 0]
    s.s_pre_acc[:] = 0
    assert compute_factors(s, CFG)[1] == min(8, CFG.f_max)
    assert compute_factors(s, LearnConfig(f_max=10))[1] == 8.0


@given(st.lists(st.integers(0, 50), min_size=3, max_size=3), st.lists(st.integers(0, 50), min_size=4, max_size=4))
def test_factors_pure_and_bounded(post, pre):
    s = _state()
    s.s_post_acc[:] = post
    s.s_pre_acc[:] = pre
    snap = (s.s_post_acc.copy(), s.s_pre_acc.copy())
    f1 = compute_factors(s, CFG)
    assert f1 == compute_factors(s, CFG)
    assert np.array_equal(snap[0], s.s_post_acc) and np.array_equal(snap[1], s.s_pre_acc)
    assert all(0 <= f <= CFG.f_max for f in f1)


def test_stdp_zero_traces_no_change():
    s = _state()
    w = np.full((4, 3), 0.4)
    out = stdp_update(w, s, np.ones(4, bool), np.ones(3, bool), 1.0, 1.0, CFG)
    assert np.array_equal(out, w)


def test_stdp_potentiation_example():
    s = _state()
    s.x_pre[:] = 0.5
    w = np.full((4, 3), 0.4)
    post = np.array([False, True, False])
    out = stdp_update(w, s, np.zeros(4, bool), post, 2.0, 1.0, LearnConfig(eta_post=0.01))
    assert out[:, 1] == pytest.approx(0.41)
    assert np.array_equal(out[:, [0, 2]], w[:, [0, 2]])


def test_stdp_depression_example():
    s = _state()
    s.x_post[:] = 0.4
    w = np.full((4, 3), 0.4)
    pre = np.array([False, False, True, False])
    out = stdp_update(w, s, pre, np.zeros(3, bool), 1.0, 1.0, LearnConfig(eta_pre=0.005))
    assert out[2] == pytest.approx(0.398)
    assert np.array_equal(np.delete(out, 2, 0), np.delete(w, 2, 0))


def test_stdp_rejects_negative_factor_and_non_finite():
    s = _state()
    with pytest.raises(ValueError):
        stdp_update(np.zeros((4, 3)), s, np.zeros(4, bool), np.zeros(3, bool), -1.0, 1.0, CFG)
    s.x_pre[:] = np.inf
    with pytest.raises(NumericError):
        stdp_update(np.zeros((4, 3)), s, np.zeros(4, bool), np.ones(3, bool), 1.0, 1.0, CFG)


# zero or normal floats: exact doubling does not survive subnormal products
unit = st.one_of(st.just(0.0), st.floats(1e-6, 1))
traces = st.lists(unit, min_size=4, max_size=4)


@given(traces, st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0, 4), st.floats(0, 4))
def test_stdp_bounded_and_sign_correct(xpre, xpost, f_p, f_d):
    s = _state()
    s.x_pre[:] = xpre
    s.x_post[:] = xpost
    w = np.random.default_rng(0).random((4, 3))
    up = stdp_update(w, s, np.zeros(4, bool), np.ones(3, bool), f_p, f_d, CFG)
    down = stdp_update(w, s, np.ones(4, bool), np.zeros(3, bool), f_p, f_d, CFG)
    assert np.all(up >= w) and np.all(down <= w)
    assert np.all((0 <= up) & (up <= 1)) and np.all((0 <= down) & (down <= 1))


@given(traces, st.floats(0.01, 2))
def test_potentiation_scales_linearly_in_f_p(xpre, f_p):
    s = _state()
    s.x_pre[:] = xpre
    s.pot[:] = np.asarray(xpre)[:, None]
    w = np.zeros((4, 3))
    one = apply_accumulated(w, s, f_p, 0.0, CFG, w_max=np.inf)
    two = apply_accumulated(w, s, 2 * f_p, 0.0, CFG, w_max=np.inf)
    assert np.array_equal(two, 2 * one)


def test_quantized_update_on_grid():
    fmt = QuantConfig.from_bits("qw", 4).weight_format
    s = _state()
    s.x_pre[:] = [0.1, 0.37, 0.9, 0.55]
    out = stdp_update(np.full((4, 3), 0.5), s, np.zeros(4, bool), np.ones(3, bool), 1.3, 1.0,
                      CFG, fmt=fmt)
    assert on_grid(out, fmt)


def test_weight_decay_examples():
    assert apply_weight_decay(np.array([0.0]), 0.01)[0] == 0.0
    assert apply_weight_decay(np.array([0.8]), 0.01)[0] == pytest.approx(0.792)
    assert LearnConfig().decay_rate(313600) == pytest.approx(1e-4)
    assert LearnConfig().decay_rate(2 * 313600) == pytest.approx(0.5e-4)
    assert LearnConfig(w_decay=0.3).decay_rate(10) == 0.3
    with pytest.raises(ValueError):
        apply_weight_decay(np.zeros(2), 1.0)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.floats(0, 0.99))
def test_weight_decay_never_grows(ws, d):
    w = np.array(ws)
    assert np.all(np.abs(apply_weight_decay(w, d)) <= np.abs(w))


def test_normalize_columns():
    w = np.random.default_rng(2).random((50, 4))
    w[:, 3] = 0
    out = normalize_columns(w, 0.1)
    assert out[:, :3].sum(axis=0) == pytest.approx([5.0] * 3)
    assert not out[:, 3].any()


def test_balance_threshold_rules():
    m = NetworkModel.create(4, 3)
    start = m.exc.v_th_base.copy()
    assert not balance_threshold(m, 5.0, CFG)
    assert np.array_equal(m.exc.v_th_base, start)
    assert balance_threshold(m, CFG.r_hi + 1, CFG)
    assert np.array_equal(m.exc.v_th_base, start + CFG.v_th_step)
    with pytest.raises(ValueError):
        balance_threshold(m, -1.0, CFG)


@given(st.integers(1, 10))
def test_balance_alternating_returns_to_start(n):
    m = NetworkModel.create(4, 3)
    start = m.exc.v_th_base.copy()
    for _ in range(n):
        balance_threshold(m, CFG.r_hi + 5, CFG)
        balance_threshold(m, 0.0, CFG)
    assert np.array_equal(m.exc.v_th_base, start)


def test_assign_labels_examples():
    labels = np.array([7, 7, 2, 3, 3])
    responses = np.array([[4, 0], [6, 0], [0, 0], [0, 0], [0, 0]])
    assert list(assign_labels(responses, labels)) == [7, 0]


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_assign_labels_brute_force(n_neurons, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, 12)
    responses = rng.integers(0, 4, (12, n_neurons))
    got = assign_labels(responses, labels, n_classes=3)
    for j in range(n_neurons):
        means = []
        for c in range(3):
            rows = responses[labels == c, j]
            means.append(rows.mean() if rows.size else 0.0)
        assert got[j] == means.index(max(means))


def test_label_neurons_needs_samples():
    m = NetworkModel.create(4, 3)
    with pytest.raises(InputError):
        label_neurons(m, np.zeros((0, 4)), np.zeros(0), SimParams(), np.random.default_rng(0))


def test_train_empty_stream_is_identity():
    m = NetworkModel.create(20, 4, seed=1)
    out, log = train(m, [], CFG, SimParams(), np.random.default_rng(0))
    assert len(log) == 0
    assert np.array_equal(out.weights, m.weights)
    assert np.array_equal(out.exc.v_th_base, m.exc.v_th_base)


def test_train_zero_sample_decay_only():
    m = NetworkModel.create(20, 4, seed=1)
    cfg = LearnConfig(w_decay=0.01, w_norm=0)
    out, log = train(m, [(np.zeros(20), 0)], cfg, SimParams(t_present=50, t_rest=10),
                     np.random.default_rng(0))
    assert np.allclose(out.weights, m.weights * 0.99, rtol=0, atol=1e-15)
    assert log.rows[0][2] == 0


def test_train_quantized_closure():
    m = quantize_model(NetworkModel.create(64, 6, "baseline", seed=3),
                       QuantConfig.from_bits("qwn", 8))
    images = np.random.default_rng(0).integers(0, 256, (12, 64))
    cfg = LearnConfig(balance_interval=3)
    seen = []

    def check(k, model):
        seen.append(k)
        assert on_grid(model.weights, model.quant.weight_format)
        for pop in model.populations():
            assert on_grid(pop.v_mem, model.quant.neuron_format)
            assert on_grid(pop.v_th_base, model.quant.neuron_format)
            assert on_grid(pop.theta, model.quant.neuron_format)
        assert np.all((model.weights >= model.w_min) & (model.weights <= model.w_max))

    train(m, zip(images, range(12)), cfg, SimParams(t_present=80, t_rest=20),
          np.random.default_rng(1), check=check)
    assert seen == list(range(12))


def test_train_deterministic():
    images = np.random.default_rng(0).integers(0, 256, (6, 64))
    outs = [train(NetworkModel.create(64, 5, seed=2), zip(images, range(6)), CFG,
                  SimParams(t_present=80, t_rest=20), np.random.default_rng(9)) for _ in range(2)]
    assert np.array_equal(outs[0][0].weights, outs[1][0].weights)
    assert outs[0][1].rows == outs[1][1].rows


def _blobs(n, rng):
    labels = rng.integers(0, 2, n)
    images = rng.integers(0, 40, (n, 784))
    for k, c in enumerate(labels):
        images[k, c * 392:(c + 1) * 392] = rng.integers(180, 256, 392)
    return images, labels


def test_two_class_blobs_learnable():
    rng = np.random.default_rng(0)
    params = SimParams()
    m = NetworkModel.create(784, 20, seed=0, inh_strength=30.0,
                            lif_exc=LifConsts(syn_gain=0.3, theta_plus=0.2))
    images, labels = _blobs(200, rng)
    m, _ = train(m, zip(images, labels), CFG, params, rng)
    lab_x, lab_y = _blobs(60, rng)
    m = label_neurons(m, lab_x, lab_y, params, rng, n_classes=2)
    test_x, test_y = _blobs(100, rng)
    scratch = m.copy()
    preds = [classify(m, present(scratch, x, params, rng, adapt=False), n_classes=2) for x in test_x]
    assert np.mean(np.array(preds) == test_y) > 0.9
