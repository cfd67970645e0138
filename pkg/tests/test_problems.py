from __future__ import annotations

import numpy as np
import pytest

from picardnet.network import RELU, SOFTPLUS, leaky, realize
from picardnet.problems import Nonlinearity, ProblemSpec, TerminalData, gauss_bump_net


@pytest.mark.parametrize("act", [RELU, leaky(0.5), SOFTPLUS])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_gauss_bump_net_accuracy(act, d):
    rng = np.random.default_rng(d)
    x = rng.uniform(-3, 3, (5000, d)) * rng.uniform(0, 1, (5000, 1))
    net = gauss_bump_net(d, 1.0, act, tol=1e-3)
    assert np.max(np.abs(realize(net, act, x)[:, 0] - np.exp(-np.sum(x * x, 1)))) <= 1e-3


def test_nonlinearity_parse_and_lipschitz():
    assert Nonlinearity.parse("zero").lipschitz == 0.0
    assert Nonlinearity.parse("linear:-2.5").lipschitz == 2.5
    assert Nonlinearity.parse("sin").c == 1.0
    table = Nonlinearity("table", knots=(0.0, 1.0, 3.0), values=(0.0, 2.0, 1.0))
    assert table.lipschitz == 2.0
    with pytest.raises(ValueError):
        Nonlinearity.parse("cube")


@pytest.mark.parametrize("act", [RELU, leaky(0.5), SOFTPLUS])
def test_exact_network_forms(act):
    u = np.linspace(-5, 5, 101)
    for f in (Nonlinearity("linear", 0.7), Nonlinearity("zero")):
        np.testing.assert_allclose(realize(f.network(act), act, u[:, None])[:, 0], f(u), atol=1e-12)
    if act.kind != "softplus":
        table = Nonlinearity("table", knots=(-1.0, 0.0, 2.0), values=(1.0, -1.0, 0.5))
        np.testing.assert_allclose(realize(table.network(act), act, u[:, None])[:, 0], table(u), atol=1e-12)
    with pytest.raises(ValueError):
        Nonlinearity("sin").network(act)


def test_terminal_data_network_round_trip():
    net = gauss_bump_net(2, 1.0, RELU)
    g = TerminalData("network", net=net, act=RELU)
    assert g.network(2, RELU) is net
    with pytest.raises(ValueError):
        g.network(3, RELU)


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(d=1, q=2.0)
    with pytest.raises(ValueError):
        ProblemSpec(d=1, f=Nonlinearity("linear", 3.0), L=1.0)
    assert ProblemSpec(d=1, f=Nonlinearity("linear", 3.0)).lipschitz == 3.0


@pytest.mark.parametrize("d", [1, 2, 5, 10, 32])
@pytest.mark.parametrize("T", [0.5, 1.0, 3.0])
def test_default_kappa_satisfies_moment_hypothesis(d, T):
    spec = ProblemSpec(d=d, T=T)
    assert spec.moment_hypothesis_holds()
    # Monte Carlo check of the moment integral under the uniform evaluation measure.
    rng = np.random.default_rng(0)
    y = np.concatenate([rng.uniform(0, T, (20_000, 1)), rng.uniform(0, 1, (20_000, d))], axis=1)
    m = spec.moment_order
    integral = T * np.mean(1.0 + np.sum(y * y, 1) ** (m / 2))
    assert integral <= spec.kappa_value * d ** (spec.r * m)
