from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ALL_ACTIVATIONS, dense_forward, random_net
from picardnet.calculus import affine, compose, identity_net
from picardnet.gadgets import HatSpec, hat_exact_leaky
from picardnet.network import (
    IDENTITY,
    RELU,
    SOFTPLUS,
    Activation,
    Layer,
    Network,
    apply_activation,
    dims,
    leaky,
    network_function,
    realize,
    realize_shallow,
    scalar_map,
)


def test_single_affine_layer_dims():
    net = affine([[2.0]], [3.0])
    d = dims(net)
    assert d.param_count == 2
    assert d.depth == 1
    assert d.widths == (1, 1)


def test_hat_network_dims():
    d = dims(hat_exact_leaky(HatSpec(0.0, 0.5, 1.0), 0.5))
    assert d.widths == (1, 6, 1)
    assert d.param_count == 19


def test_identity_net_dims():
    d = dims(identity_net(RELU).net)
    assert d.widths == (1, 2, 1)
    assert d.param_count == 2 * (1 + 1) + 1 * (2 + 1)


@pytest.mark.parametrize(
    "act, v, expected",
    [
        (RELU, [-1.0, 2.0], [0.0, 2.0]),
        (leaky(0.5), [-2.0, 4.0], [-1.0, 4.0]),
        (SOFTPLUS, [0.0], [math.log(2.0)]),
        (IDENTITY, [-3.0, 1.5], [-3.0, 1.5]),
    ],
)
def test_apply_activation_values(act, v, expected):
    np.testing.assert_allclose(apply_activation(act, v), expected, rtol=0, atol=1e-15)


def test_softplus_finite_on_wide_range():
    v = np.linspace(-700.0, 700.0, 2001)
    out = apply_activation(SOFTPLUS, v)
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, np.logaddexp(0.0, v), rtol=1e-15, atol=1e-300)


@pytest.mark.parametrize("act", ALL_ACTIVATIONS)
def test_affine_net_ignores_activation(act):
    assert realize(affine([[2.0]], [3.0]), act, [5.0])[0] == 13.0


def test_fused_affine_composition():
    net = compose(affine([[2.0]], [0.0]), affine([[3.0]], [1.0]))
    assert net.depth == 1
    assert realize(net, RELU, [1.0])[0] == 8.0


def test_hat_center_value():
    assert realize(hat_exact_leaky(HatSpec(0.0, 0.5, 1.0), 0.5), leaky(0.5), [0.5])[0] == pytest.approx(1.0, abs=1e-14)


def test_layer_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        Network.from_arrays([([[1.0, 2.0]], [0.0]), ([[1.0], [1.0]], [0.0])])
    with pytest.raises(ValueError):
        Layer.make([[1.0, 2.0]], [0.0, 1.0])


def test_realize_rejects_wrong_input_width():
    with pytest.raises(ValueError):
        realize(affine([[1.0, 1.0]]), RELU, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("bad", [1.0, -1.0, float("nan")])
def test_leaky_slope_validation(bad):
    with pytest.raises(ValueError):
        leaky(bad)


def test_activation_parse_round_trip():
    for act in ALL_ACTIVATIONS + (IDENTITY,):
        assert Activation.from_dict(act.to_dict()) == act
    assert Activation.parse("leaky_relu:0.25") == leaky(0.25)
    with pytest.raises(ValueError):
        Activation.parse("relu:2")


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    act_index=st.integers(0, len(ALL_ACTIVATIONS) - 1),
    depth=st.integers(1, 5),
)
def test_realize_matches_numpy_forward(seed, act_index, depth):
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in rng.integers(1, 9, depth + 1)]
    net = random_net(rng, widths)
    act = ALL_ACTIVATIONS[act_index]
    x = rng.uniform(-5, 5, (17, widths[0]))
    np.testing.assert_allclose(realize(net, act, x), dense_forward(net, act, x), rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), depth=st.integers(1, 5))
def test_identity_activation_is_matrix_chain(seed, depth):
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in rng.integers(1, 9, depth + 1)]
    net = random_net(rng, widths)
    x = rng.standard_normal(widths[0])
    y = x
    for layer in net.layers:
        y = layer.dense_weight() @ y + layer.bias
    scale = max(1.0, float(np.max(np.abs(y))))
    assert np.max(np.abs(realize(net, IDENTITY, x) - y)) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), act_index=st.integers(0, len(ALL_ACTIVATIONS) - 1))
def test_last_layer_is_affine(seed, act_index):
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in rng.integers(1, 7, 4)]
    net = random_net(rng, widths)
    act = ALL_ACTIVATIONS[act_index]
    shift = rng.standard_normal(widths[-1])
    last = net.layers[-1]
    bumped = Network(list(net.layers[:-1]) + [Layer.make(last.dense_weight(), last.bias + shift)])
    x = rng.standard_normal((5, widths[0]))
    np.testing.assert_allclose(realize(bumped, act, x) - realize(net, act, x), np.tile(shift, (5, 1)), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_param_count_formula(seed):
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in rng.integers(1, 20, int(rng.integers(2, 7)))]
    net = random_net(rng, widths)
    assert dims(net).param_count == sum(widths[k] * (widths[k - 1] + 1) for k in range(1, len(widths)))


@pytest.mark.parametrize("act", [leaky(0.5), SOFTPLUS, RELU])
def test_realize_shallow_matches_realize(act):
    rng = np.random.default_rng(3)
    # Repeated directions exercise the grouping path.
    w = np.repeat(rng.standard_normal((4, 2)), 3, axis=0) * np.repeat([1.0, 2.0, -0.5], 4)[:, None]
    net = Network.from_arrays([(w, rng.standard_normal(12)), (rng.standard_normal((1, 12)), [0.3])])
    x = rng.uniform(-3, 3, (500, 2))
    np.testing.assert_allclose(realize_shallow(net, act, x), realize(net, act, x), rtol=1e-12, atol=1e-12)


def test_network_function_wraps_scalar_nets():
    net = affine([[1.0, 1.0]], [0.0])
    fn = network_function(net, RELU)
    np.testing.assert_array_equal(fn(np.array([[3.0, 4.0], [1.0, 1.0]])), [7.0, 2.0])
    with pytest.raises(ValueError):
        network_function(affine(np.eye(2)), RELU)


def test_scalar_map_is_elementwise_and_keeps_shape():
    act = leaky(0.5)
    net = hat_exact_leaky(HatSpec(-1.0, 0.0, 2.0), 0.5)
    u = np.linspace(-2.0, 3.0, 24).reshape(2, 3, 4)
    out = scalar_map(net, act)(u)
    assert out.shape == u.shape
    np.testing.assert_allclose(out, HatSpec(-1.0, 0.0, 2.0)(u), atol=1e-13)


def test_scalar_map_needs_scalar_network(rng):
    with pytest.raises(ValueError):
        scalar_map(random_net(rng, [2, 3, 1]), RELU)
