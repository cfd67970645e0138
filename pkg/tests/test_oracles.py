from __future__ import annotations

import math

import numpy as np
import pytest

from picardnet.calculus import affine
from picardnet.network import RELU
from picardnet.oracles import (
    FdGrid,
    GridError,
    gauss_bump_heat,
    heat_expectation,
    oracle_fd_1d,
    oracle_linear,
)
from picardnet.problems import Nonlinearity, ProblemSpec, TerminalData


def test_oracle_linear_golden():
    # e * E[exp(-W_1^2)] = e / sqrt(3), evaluated by 64-node Gauss-Hermite.
    spec = ProblemSpec(d=1)
    value = float(oracle_linear(spec, 0.0, np.zeros((1, 1)))[0])
    assert value == pytest.approx(1.5694007453940984, rel=1e-14)
    assert value == pytest.approx(math.e / math.sqrt(3.0), rel=1e-13)


def test_oracle_linear_terminal_condition():
    spec = ProblemSpec(d=2, f=Nonlinearity("zero"))
    x = np.random.default_rng(0).standard_normal((5, 2))
    np.testing.assert_allclose(oracle_linear(spec, 1.0, x), spec.g(x), rtol=1e-14)


def test_oracle_linear_constant_data():
    one = TerminalData("network", net=affine([[0.0]], [1.0]), act=RELU)
    spec = ProblemSpec(d=1, T=2.0, g=one)
    t = np.array([0.0, 0.5, 2.0])
    np.testing.assert_allclose(oracle_linear(spec, t, np.zeros((3, 1))), np.exp(2.0 - t), rtol=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_quadrature_matches_closed_form(d):
    spec = ProblemSpec(d=d, f=Nonlinearity("linear", 0.5))
    rng = np.random.default_rng(d)
    x = rng.uniform(-1, 1, (10, d))
    t = rng.uniform(0, 1, 10)
    np.testing.assert_allclose(oracle_linear(spec, t, x), oracle_linear(spec, t, x, method="closed"), rtol=1e-10)


def test_monte_carlo_route_reports_standard_error():
    g = TerminalData("gauss", 0.3)
    x = np.full((1, 5), 0.2)
    value, se = heat_expectation(g, x, np.array([0.8]), mc_samples=200_000)
    assert se[0] > 0
    assert abs(value[0] - gauss_bump_heat(0.3, x, 0.8)[0]) <= 4 * se[0]


def test_oracle_input_validation():
    with pytest.raises(ValueError):
        oracle_linear(ProblemSpec(d=1, f=Nonlinearity("sin")), 0.0, np.zeros((1, 1)))
    with pytest.raises(ValueError):
        oracle_linear(ProblemSpec(d=1), 2.0, np.zeros((1, 1)))


def test_fd_heat_kernel():
    spec = ProblemSpec(d=1, f=Nonlinearity("zero"))
    u = oracle_fd_1d(spec, FdGrid(0.01, 0.005, 8.0))
    assert abs(u(0.0, np.array([0.0]))[0] - gauss_bump_heat(1.0, np.zeros((1, 1)), 1.0)[0]) <= 1e-4


def test_fd_matches_linear_oracle():
    spec = ProblemSpec(d=1)
    u = oracle_fd_1d(spec, FdGrid(0.01, 0.005, 8.0))
    assert abs(u(0.0, np.array([0.0]))[0] - math.e / math.sqrt(3.0)) <= 1e-4
    ts = np.repeat(np.linspace(0, 1, 11), 21)
    xs = np.tile(np.linspace(-2, 2, 21), 11)
    assert np.max(np.abs(u(ts, xs) - oracle_linear(spec, ts, xs[:, None]))) <= 1e-3


def test_fd_self_convergence_order():
    spec = ProblemSpec(d=1, f=Nonlinearity("sin"))
    # Probe at nodes shared by all three grids so interpolation does not enter.
    nodes = np.array([0.0, 1.0, 2.0])
    values = []
    for h in (0.04, 0.02, 0.01):
        u = oracle_fd_1d(spec, FdGrid(h, h / 2, 8.0))
        values.append(u(0.0, nodes))
    ratio = np.abs(values[0] - values[1]) / np.abs(values[1] - values[2])
    order = np.log2(ratio)
    assert np.all((order >= 1.7) & (order <= 2.3))


def test_fd_domain_doubling_is_harmless():
    spec = ProblemSpec(d=1, f=Nonlinearity("sin"))
    a = oracle_fd_1d(spec, FdGrid(0.02, 0.01, 6.0))(0.0, np.array([0.0, 1.0]))
    b = oracle_fd_1d(spec, FdGrid(0.02, 0.01, 12.0))(0.0, np.array([0.0, 1.0]))
    assert np.max(np.abs(a - b)) <= 1e-8


def test_fd_grid_errors():
    with pytest.raises(GridError):
        FdGrid(0.01, 0.02)
    with pytest.raises(GridError):
        oracle_fd_1d(ProblemSpec(d=2), FdGrid())
    with pytest.raises(GridError):
        oracle_fd_1d(ProblemSpec(d=1, f=Nonlinearity("linear", 30.0)), FdGrid(0.05, 0.02, 6.0))
    u = oracle_fd_1d(ProblemSpec(d=1), FdGrid(0.05, 0.02, 6.0))
    with pytest.raises(GridError):
        u(0.0, np.array([7.0]))
