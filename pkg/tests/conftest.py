from __future__ import annotations

import numpy as np
import pytest

from picardnet.network import SOFTPLUS, RELU, Activation, Layer, Network, leaky

ALL_ACTIVATIONS = (RELU, leaky(0.5), leaky(0.1), SOFTPLUS)


def dense_forward(net: Network, act: Activation, x: np.ndarray) -> np.ndarray:
    """Plain numpy forward pass used as an independent oracle for ``realize``."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    for k, layer in enumerate(net.layers):
        h = h @ layer.dense_weight().T + layer.bias
        if k < net.depth - 1:
            if act.kind == "relu":
                h = np.maximum(h, 0.0)
            elif act.kind == "leaky_relu":
                h = np.where(h >= 0, h, act.alpha * h)
            elif act.kind == "softplus":
                h = np.logaddexp(0.0, h)
    return h


def random_net(rng: np.random.Generator, widths: list[int]) -> Network:
    return Network(
        [
            Layer.make(rng.standard_normal((widths[k + 1], widths[k])), rng.standard_normal(widths[k + 1]))
            for k in range(len(widths) - 1)
        ]
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
