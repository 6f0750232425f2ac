import numpy as np
import pytest
from hypothesis import given, strategies as st

from snnbudget.core import NetworkModel
from snnbudget.quant import (FixedPointFormat, QuantConfig, Scheme, neuron_format, on_grid,
                             quantize_model, quantize_value, weight_format)

FORMATS = [weight_format(b) for b in (4, 8, 16)] + [neuron_format(b) for b in (4, 8, 16, 32)] + [
    FixedPointFormat(False, 1, 6), FixedPointFormat(True, 3, 4)]
fmts = st.sampled_from(FORMATS)
reals = st.floats(-200, 200, allow_nan=False)


def test_representable_identity():
    for frac in (1, 4, 8):
        assert quantize_value(0.5, FixedPointFormat(False, 1, frac)) == 0.5


def test_round_to_nearest():
    # 0.3 * 16 = 4.8 -> 5 -> 5/16
    assert quantize_value(0.3, FixedPointFormat(False, 0, 4)) == 0.3125


def test_saturation_unsigned_q1_6():
    fmt = FixedPointFormat.parse("u1.6")
    assert fmt.max_value == (2 ** 7 - 1) / 64 == 1.984375
    assert quantize_value(100.0, fmt) == 1.984375
    assert quantize_value(-3.0, fmt) == 0.0


def test_ties_to_even():
    fmt = FixedPointFormat(True, 7, 0)
    assert quantize_value(2.5, fmt) == 2.0
    assert quantize_value(3.5, fmt) == 4.0
    assert quantize_value(-7.5, fmt) == -8.0


@pytest.mark.parametrize("text", ["u0.8", "s7.8", "s6.-3", "u1.6", "s7.0"])
def test_format_string_round_trip(text):
    assert str(FixedPointFormat.parse(text)) == text


def test_bad_format_strings():
    for text in ("x0.8", "u8", "s40.0", "u0.0"):
        with pytest.raises(ValueError):
            FixedPointFormat.parse(text)


def test_default_formats():
    assert weight_format(8).max_value == 1 - 2 ** -8
    assert neuron_format(8).step == 1.0
    assert neuron_format(4).step == 8.0 and neuron_format(4).bits == 4
    assert neuron_format(16).bits == 16 and neuron_format(16).min_value == -128
    for b in (4, 8, 16, 32):
        assert weight_format(b).bits == b and neuron_format(b).bits == b


@given(reals, fmts)
def test_idempotent(x, fmt):
    q = quantize_value(x, fmt)
    assert quantize_value(q, fmt) == q


@given(reals, fmts)
def test_half_step_error_inside_range(x, fmt):
    if fmt.min_value <= x <= fmt.max_value:
        assert abs(x - quantize_value(x, fmt)) <= fmt.step / 2


@given(reals, reals, fmts)
def test_monotone(x, y, fmt):
    if x > y:
        x, y = y, x
    assert quantize_value(x, fmt) <= quantize_value(y, fmt)


def test_quantize_model_none_is_identity():
    m = NetworkModel.create(20, 5, "baseline", seed=3)
    q = quantize_model(m, QuantConfig())
    assert np.array_equal(q.weights, m.weights)
    assert np.array_equal(q.exc.v_mem, m.exc.v_mem) and np.array_equal(q.inh.v_th_base, m.inh.v_th_base)


def test_quantize_model_on_grid_unchanged():
    fmt = weight_format(8)
    m = NetworkModel.create(20, 5, seed=3)
    m.weights = quantize_value(m.weights, fmt)
    q = quantize_model(m, QuantConfig(Scheme.QW, fmt, neuron_format(8)))
    assert np.array_equal(q.weights, m.weights)


def test_quantize_model_half_step_bound_qw8():
    m = NetworkModel.create(784, 40, seed=11)
    cfg = QuantConfig.from_bits("qw", 8)
    q = quantize_model(m, cfg)
    assert np.max(np.abs(q.weights - m.weights)) <= 2.0 ** (-8 - 1)
    assert on_grid(q.weights, cfg.weight_format)
    # QW leaves neuron parameters at full precision
    assert np.array_equal(q.exc.v_th_base, m.exc.v_th_base)
    assert q.quant.neuron_bits == 32 and q.quant.weight_bits == 8


def test_quantize_model_qwn_projects_neurons():
    m = NetworkModel.create(30, 6, "baseline", seed=1)
    m.exc.v_mem = m.exc.v_mem + 0.37
    m.exc.theta = m.exc.theta + 0.2
    cfg = QuantConfig.from_bits("qwn", 8)
    q = quantize_model(m, cfg)
    for pop in q.populations():
        for arr in (pop.v_mem, pop.v_th_base, pop.theta):
            assert on_grid(arr, cfg.neuron_format)
    assert q.exc.v_mem[0] == -65.0 and q.exc.theta[0] == 0.0
