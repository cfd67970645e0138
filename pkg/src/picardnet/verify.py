"""Self-check suites behind ``picardnet verify``.

Each suite returns a list of :class:`Check` records; a suite passes when all
of its checks pass.  Suites are deterministic and sized to run in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .calculus import (
    compose,
    extend,
    identity_net,
    parallel_general,
    parallel_same,
    scale,
    sum_diff,
    sum_same,
)
from .compiler import compile_fixed_time, compile_space_time
from .gadgets import GadgetBudget, HatSpec, hat_exact_leaky, product_net, product_param_bound
from .mlp import MlpParams, mlp_estimate
from .network import SOFTPLUS, Layer, Network, RELU, leaky, network_function, realize, realize_shallow
from .oracles import FdGrid, heat_expectation, oracle_fd_1d, oracle_linear
from .problems import Nonlinearity, ProblemSpec, gauss_bump_net
from .random_field import MultiIndex, RandomField

__all__ = ["Check", "SUITES", "random_network", "run_suites"]

ACTIVATIONS = (RELU, leaky(0.5), leaky(0.1), SOFTPLUS)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "threshold": float(self.threshold)}


def random_network(
    rng: np.random.Generator,
    input_dim: int,
    output_dim: int,
    depth: int,
    max_width: int = 6,
) -> Network:
    """Dense network with standard normal weights and biases."""
    widths = [input_dim] + [int(rng.integers(1, max_width + 1)) for _ in range(depth - 1)] + [output_dim]
    return Network(
        [
            Layer.make(rng.standard_normal((widths[k + 1], widths[k])), rng.standard_normal(widths[k + 1]))
            for k in range(depth)
        ]
    )


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def calculus_checks(trials: int = 200, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = {"compose": 0.0, "parallel": 0.0, "sum": 0.0, "scale": 0.0, "extend": 0.0}
    bookkeeping_ok = True
    for _ in range(trials):
        act = ACTIVATIONS[int(rng.integers(len(ACTIVATIONS)))]
        j = identity_net(act)
        d = int(rng.integers(1, 4))
        a = random_network(rng, d, 1, int(rng.integers(1, 5)))
        b = random_network(rng, 1, 1, int(rng.integers(1, 5)))
        x = rng.standard_normal((20, d))
        fa = realize(a, act, x)
        worst["compose"] = max(worst["compose"], _rel(realize(compose(b, a), act, x), realize(b, act, fa)))
        c = random_network(rng, d, 1, a.depth)
        worst["parallel"] = max(
            worst["parallel"],
            _rel(
                realize(parallel_same([a, c]), act, np.hstack([x, x])),
                np.hstack([fa, realize(c, act, x)]),
            ),
        )
        worst["sum"] = max(worst["sum"], _rel(realize(sum_same([a, c]), act, x), fa + realize(c, act, x)))
        lam = float(rng.standard_normal())
        worst["scale"] = max(worst["scale"], _rel(realize(scale(lam, a), act, x), lam * fa))
        target = a.depth + int(rng.integers(0, 3))
        worst["extend"] = max(worst["extend"], _rel(realize(extend(a, target, j), act, x), fa))
        e = random_network(rng, d, 1, int(rng.integers(1, 5)))
        s = sum_diff([a, e], j)
        if s.depth != max(a.depth, e.depth):
            bookkeeping_ok = False
        pg = parallel_general([a, e], j)
        if pg.depth != max(a.depth, e.depth):
            bookkeeping_ok = False
    checks = [Check(f"{k}_identity", v <= 1e-7, v, 1e-7) for k, v in worst.items()]
    checks.append(Check("depth_bookkeeping", bookkeeping_ok, float(bookkeeping_ok), 1.0))
    return checks


def gadget_checks(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    shapes_ok = True
    for _ in range(20):
        t0, t1, t2 = np.sort(rng.uniform(-2, 2, 3))
        hat = HatSpec(float(t0), float(t1), float(t2))
        grid = np.linspace(t0 - 1, t2 + 1, 1000)
        for alpha in (0.1, 0.5):
            net = hat_exact_leaky(hat, alpha)
            shapes_ok &= net.widths == (1, 6, 1) and net.param_count == 19
            worst = max(worst, float(np.max(np.abs(realize(net, leaky(alpha), grid[:, None])[:, 0] - hat(grid)))))
    checks = [Check("hat_exact", worst <= 1e-12, worst, 1e-12), Check("hat_shape", shapes_ok, float(shapes_ok), 1.0)]
    v = np.linspace(-3, 3, 401)
    vv, ww = np.meshgrid(v, v)
    pts = np.stack([vv.ravel(), ww.ravel()], axis=1)
    for act in (leaky(0.5), SOFTPLUS):
        budget = GadgetBudget(0.5, 3.0)
        net = product_net(budget, act)
        out = realize_shallow(net, act, pts)[:, 0]
        scale_ = np.maximum(1.0, np.maximum(np.abs(pts[:, 0]) ** 3, np.abs(pts[:, 1]) ** 3))
        err = float(np.max(np.abs(out - pts[:, 0] * pts[:, 1]) / scale_))
        checks.append(Check(f"product_{act.kind}", err <= 0.5, err, 0.5))
        bound = product_param_bound(budget, act)
        checks.append(Check(f"product_size_{act.kind}", net.param_count <= bound, net.param_count, bound))
    return checks


def compiler_checks(seed: int = 0) -> list[Check]:
    act = leaky(0.5)
    j = identity_net(act)
    worst = 0.0
    for d in (1, 3):
        g_net = gauss_bump_net(d, 1.0, act)
        f_net = Nonlinearity("linear", 0.7).network(act)
        g = network_function(g_net, act)
        f = lambda u: 0.7 * u  # noqa: E731
        field = RandomField(seed, d, 1.0)
        x = np.random.default_rng(seed).standard_normal((20, d))
        for n, M, t in ((1, 2, 0.0), (2, 2, 1.0 / 3.0), (3, 2, 0.5)):
            params = MlpParams(n, M, 1.0, t, d)
            net = compile_fixed_time(params, MultiIndex(), g_net, f_net, j, field, act).net
            worst = max(worst, _rel(realize(net, act, x)[:, 0], mlp_estimate(params, x, g, f, field)))
    checks = [Check("fixed_time_equals_estimator", worst <= 1e-8, worst, 1e-8)]
    d = 2
    field = RandomField(seed, d, 1.0)
    g_net = gauss_bump_net(d, 1.0, act)
    f_net = Nonlinearity("linear", 1.0).network(act)
    st = compile_space_time(MlpParams(1, 2, 1.0, 0.0, d), 3, 0.1, MultiIndex(), g_net, f_net, j, act, field)
    rng = np.random.default_rng(seed + 1)
    pts = np.concatenate([rng.uniform(0, 1, (50, 1)), rng.standard_normal((50, d))], axis=1)
    direct = np.zeros(50)
    for k, branch in enumerate(st.branches):
        direct += realize(branch, act, pts)[:, 0]
    dev = _rel(realize(st.net, act, pts)[:, 0], direct)
    checks.append(Check("space_time_structure", dev <= 1e-9, dev, 1e-9))
    return checks


def pde_checks(seed: int = 0) -> list[Check]:
    spec = ProblemSpec(d=1)
    fd = oracle_fd_1d(spec, FdGrid(0.02, 0.01, 8.0))
    ts = np.repeat(np.linspace(0, 1, 5), 9)
    xs = np.tile(np.linspace(-2, 2, 9), 5)
    gap = float(np.max(np.abs(fd(ts, xs) - oracle_linear(spec, ts, xs[:, None]))))
    checks = [Check("fd_vs_closed_form", gap <= 1e-3, gap, 1e-3)]
    zero = ProblemSpec(d=1, f=Nonlinearity("zero", 0.0))
    x0 = np.array([0.3])
    values = np.array(
        [mlp_estimate(MlpParams(1, 1, 1.0, 0.0, 1), x0, zero.g, zero.f, RandomField(seed, 1, 1.0), MultiIndex((s,)))
         for s in range(10_000)]
    )
    target = float(heat_expectation(zero.g, x0[None], np.array([1.0]))[0][0])
    z = abs(values.mean() - target) / (values.std(ddof=1) / math.sqrt(values.size))
    checks.append(Check("terminal_average_unbiased_sigmas", z <= 3.0, float(z), 3.0))
    return checks


SUITES: dict[str, Callable[[], list[Check]]] = {
    "calculus": calculus_checks,
    "gadgets": gadget_checks,
    "compiler": compiler_checks,
    "pde": pde_checks,
}


def run_suites(names: list[str]) -> dict:
    report = {}
    for name in names:
        checks = SUITES[name]()
        report[name] = {"passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks]}
    return report
