"""Command-line interface.

Every subcommand is a pure function of its flags and seed.  JSON goes to
standard output; errors go to standard error with exit code 2 for usage
problems and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import io as netio
from .bench import cod_benchmark, loglog_slope, rows_to_csv
from .calculus import identity_net
from .compiler import compile_fixed_time, compile_space_time
from .gadgets import (
    GadgetBudget,
    HatSpec,
    base_square_constants,
    hat_network,
    product_net,
    product_param_bound,
    square_net,
    square_param_bound,
)
from .mlp import MlpParams, mlp_estimate
from .network import Activation, Network, leaky, realize
from .problems import Nonlinearity, ProblemSpec, TerminalData
from .random_field import MultiIndex, RandomField
from .schedule import compute_schedule
from .verify import SUITES, run_suites

__all__ = ["main"]


class UsageError(Exception):
    """Flags that parse but do not form a valid request."""


# ---------------------------------------------------------------------------
# Flag parsing helpers
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _activation(text: str) -> Activation:
    try:
        return Activation.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _default_threads() -> int:
    env = os.environ.get("PICARDNET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _nonlinearity(text: str) -> Nonlinearity:
    if text.startswith("net:"):
        net, act = netio.load(text[4:])
        return Nonlinearity("network", net=net, act=act)
    try:
        return Nonlinearity.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _terminal(text: str) -> TerminalData:
    name, _, arg = text.partition(":")
    if name == "gauss":
        return TerminalData("gauss", float(arg) if arg else 1.0)
    if name == "net":
        net, act = netio.load(arg)
        return TerminalData("network", net=net, act=act)
    raise UsageError(f"cannot parse terminal data {text!r}; use gauss[:a] or net:FILE")


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _summary(net: Network, act: Activation, out: str) -> dict:
    return {
        "out": out,
        "widths": list(net.widths),
        "params": net.param_count,
        "stored": net.stored_count,
        "activation": act.to_dict(),
    }


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_build_hat(args: argparse.Namespace) -> int:
    try:
        act = args.activation if args.activation is not None else leaky(args.alpha)
        spec = HatSpec(args.t0, args.t1, args.t2)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    net = hat_network(spec, act, eps=args.eps)
    netio.save(net, act, args.out)
    _emit({**_summary(net, act, args.out), "seed": args.seed})
    return 0


def _budget(args: argparse.Namespace) -> GadgetBudget:
    try:
        return GadgetBudget(args.eps, args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_build_square(args: argparse.Namespace) -> int:
    budget = _budget(args)
    net = square_net(budget, args.activation)
    consts = base_square_constants(budget.delta, budget.q, args.activation)
    bound = square_param_bound(budget, consts["c"], consts["r"])
    netio.save(net, args.activation, args.out)
    _emit({**_summary(net, args.activation, args.out), "bound": bound, "seed": args.seed})
    return 0


def cmd_build_product(args: argparse.Namespace) -> int:
    budget = _budget(args)
    net = product_net(budget, args.activation)
    netio.save(net, args.activation, args.out)
    bound = product_param_bound(budget, args.activation)
    _emit({**_summary(net, args.activation, args.out), "bound": bound, "seed": args.seed})
    return 0


def _point(values: list[float] | None, d: int) -> np.ndarray:
    if values is None:
        return np.zeros(d)
    if len(values) != d:
        raise UsageError(f"--x has {len(values)} coordinates but --d is {d}")
    return np.array(values)


def cmd_solve_mlp(args: argparse.Namespace) -> int:
    try:
        params = MlpParams(args.n, args.M, args.T, args.t, args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    x = _point(args.x, args.d)
    f = _nonlinearity(args.f)
    g = _terminal(args.g)
    start = time.perf_counter()
    value = mlp_estimate(params, x, g, f, RandomField(args.seed, args.d, args.T))
    wall = time.perf_counter() - start
    _emit(
        {
            "estimate": value,
            "params": {"n": args.n, "M": args.M, "T": args.T, "t": args.t, "d": args.d,
                       "x": x.tolist(), "f": args.f, "g": args.g},
            "seed": args.seed,
            "wall_time": wall,
        }
    )
    return 0


def _sidecar(path: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".provenance.json")


def cmd_compile(args: argparse.Namespace) -> int:
    act = args.activation
    f = _nonlinearity(args.f)
    g = _terminal(args.g)
    try:
        f_net = f.network(act)
        g_net = g.network(args.d, act, tol=args.g_tol)
        params = MlpParams(args.n, args.M, args.T, args.t, args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    field = RandomField(args.seed, args.d, args.T)
    j = identity_net(act)
    if args.mode == "fixed":
        compiled = compile_fixed_time(params, MultiIndex(), g_net, f_net, j, field, act)
    else:
        compiled = compile_space_time(
            params, args.K, args.gamma, MultiIndex(), g_net, f_net, j, act, field, args.gadget_q
        )
    provenance = {**compiled.provenance(), "f": args.f, "g": args.g, "g_tol": args.g_tol}
    netio.save(compiled.net, act, args.out)
    _sidecar(args.out).write_text(json.dumps(provenance) + "\n")
    _emit({**_summary(compiled.net, act, args.out), "provenance": provenance, "seed": args.seed})
    return 0


def _read_points(path: str, dim: int) -> np.ndarray:
    rows = []
    with open(path, newline="") as handle:
        for k, row in enumerate(csv.reader(handle)):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if k == 0:
                    continue  # header row
                raise UsageError(f"non-numeric entry in {path} row {k + 1}")
    pts = np.array(rows, dtype=np.float64).reshape(-1, dim) if rows else np.zeros((0, dim))
    if rows and len(rows[0]) != dim:
        raise UsageError(f"points have {len(rows[0])} columns but the network expects {dim}")
    return pts


def cmd_eval(args: argparse.Namespace) -> int:
    if not args.points and not args.point:
        raise UsageError("give --points FILE.csv or at least one --point")
    net, act = netio.load(args.net)
    dim = net.input_dim
    pts = []
    if args.points:
        pts.append(_read_points(args.points, dim))
    for p in args.point or []:
        if len(p) != dim:
            raise UsageError(f"--point has {len(p)} coordinates but the network expects {dim}")
        pts.append(np.array(p).reshape(1, dim))
    x = np.concatenate(pts, axis=0)
    y = realize(net, act, x) if x.shape[0] else np.zeros((0, net.output_dim))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    outs = ["output"] if net.output_dim == 1 else [f"output{k}" for k in range(net.output_dim)]
    writer.writerow([f"x{k}" for k in range(dim)] + outs)
    for xi, yi in zip(x, y):
        writer.writerow([repr(float(v)) for v in xi] + [repr(float(v)) for v in yi])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    report = run_suites(names)
    passed = all(s["passed"] for s in report.values())
    _emit({"passed": passed, "suites": report, "seed": args.seed})
    return 0 if passed else 1


def cmd_bench(args: argparse.Namespace) -> int:
    if not args.dims or any(not 1 <= d <= 32 for d in args.dims):
        raise UsageError("--dims must list dimensions between 1 and 32")
    rows = cod_benchmark(
        args.dims, n=args.n, M=args.M, K=args.K, gamma=args.gamma, act=args.activation, seed=args.seed,
        samples=args.samples,
    )
    out = Path(args.out)
    timing = out.with_name(out.stem + ".timing.csv")
    out.write_text(rows_to_csv(rows))
    timing.write_text(rows_to_csv(rows, timing=True))
    slope = loglog_slope([r.d for r in rows], [r.params for r in rows]) if len(rows) > 1 else None
    _emit({"out": args.out, "timing": str(timing), "slope": slope, "rows": len(rows), "seed": args.seed})
    return 0


def cmd_schedule(args: argparse.Namespace) -> int:
    try:
        spec = ProblemSpec(
            d=args.d, T=args.T, f=Nonlinearity("linear", args.L), L=args.L, kappa=args.kappa,
            p=args.p, q=args.q, qnorm=args.qnorm, r=args.r,
        )
        sched = compute_schedule(spec, args.eps, cd_route=args.cd_route)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(
        {
            "N_eps": sched.level,
            "K_eps": sched.grid,
            "delta": sched.delta,
            "gamma": sched.gamma,
            "log_delta": sched.log_delta,
            "log_gamma": sched.log_gamma,
            "log_a": sched.log_a,
            "log_b": sched.log_b,
            "log_c": sched.log_c,
            "log_cd": sched.log_cd,
            "cd_route": sched.cd_route,
            "theorem_level": sched.theorem_level,
            "seed": args.seed,
        }
    )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed, echoed in the output (default 0)")
    common.add_argument(
        "--threads", type=int, default=_default_threads(),
        help="worker threads (default: PICARDNET_THREADS or the core count); results do not depend on it",
    )

    parser = argparse.ArgumentParser(
        prog="picardnet",
        description="Multilevel Picard estimators and their exact network compilations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-hat", parents=[common], help="write a hat network")
    p.add_argument("--t0", type=float, required=True, help="left knot")
    p.add_argument("--t1", type=float, required=True, help="peak knot")
    p.add_argument("--t2", type=float, required=True, help="right knot")
    p.add_argument("--alpha", type=float, default=0.5, help="leaky slope when --activation is omitted")
    p.add_argument("--activation", type=_activation, default=None,
                   help="relu, softplus or leaky_relu:ALPHA (overrides --alpha)")
    p.add_argument("--eps", type=float, default=1e-3, help="accuracy for softplus hats")
    p.add_argument("--out", required=True, help="output network file")
    p.set_defaults(func=cmd_build_hat)

    for name, func, doc in (
        ("build-square", cmd_build_square, "write a square network"),
        ("build-product", cmd_build_product, "write a product network"),
    ):
        p = sub.add_parser(name, parents=[common], help=doc)
        p.add_argument("--eps", type=float, required=True, help="accuracy in (0, 1]")
        p.add_argument("--q", type=float, default=3.0, help="growth exponent, above 2 (default 3)")
        p.add_argument("--activation", type=_activation, default=leaky(0.5),
                       help="relu, softplus or leaky_relu:ALPHA (default leaky_relu:0.5)")
        p.add_argument("--out", required=True, help="output network file")
        p.set_defaults(func=func)

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--d", type=int, default=1, help="spatial dimension (default 1)")
    problem.add_argument("--n", type=int, default=2, help="level (default 2)")
    problem.add_argument("--M", type=int, default=2, help="branching (default 2)")
    problem.add_argument("--T", type=float, default=1.0, help="horizon (default 1)")
    problem.add_argument("--t", type=float, default=0.0, help="evaluation time (default 0)")
    problem.add_argument("--f", default="linear:1", help="zero | linear:C | sin:C | net:FILE (default linear:1)")
    problem.add_argument("--g", default="gauss", help="gauss[:A] | net:FILE (default gauss, A=1)")

    p = sub.add_parser("solve-mlp", parents=[common, problem], help="evaluate the MLP estimator")
    p.add_argument("--x", type=_floats, default=None, help="comma-separated point (default origin)")
    p.set_defaults(func=cmd_solve_mlp)

    p = sub.add_parser("compile", parents=[common, problem], help="compile the estimator into a network")
    p.add_argument("--mode", choices=("fixed", "spacetime"), default="fixed")
    p.add_argument("--K", type=int, default=4, help="time grid intervals for spacetime mode (default 4)")
    p.add_argument("--gamma", type=float, default=0.1, help="product accuracy for spacetime mode (default 0.1)")
    p.add_argument("--gadget-q", type=float, default=None, help="product exponent (default: narrowest)")
    p.add_argument("--g-tol", type=float, default=1e-3, help="accuracy of the terminal data network")
    p.add_argument("--activation", type=_activation, default=leaky(0.5),
                   help="relu, softplus or leaky_relu:ALPHA (default leaky_relu:0.5)")
    p.add_argument("--out", required=True, help="output network file; provenance goes next to it")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", parents=[common], help="evaluate a stored network, CSV out")
    p.add_argument("--net", required=True, help="network file")
    p.add_argument("--points", default=None, help="CSV of input points (optional header row)")
    p.add_argument("--point", type=_floats, action="append", help="one comma-separated point; repeatable")
    p.add_argument("--out", default=None, help="output CSV (default standard output)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("suite", choices=("all",) + tuple(SUITES), help="suite to run")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="run benchmarks")
    p.add_argument("kind", choices=("cod",), help="benchmark (cod: parameter scaling in d)")
    p.add_argument("--dims", type=_ints, default=[1, 2, 4, 8, 16], help="comma-separated dimensions")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=1000, help="error sample points per dimension")
    p.add_argument("--activation", type=_activation, default=leaky(0.5))
    p.add_argument("--out", required=True, help="output CSV; wall-clock timings go to a .timing.csv beside it")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("schedule", parents=[common], help="print a resolution schedule")
    p.add_argument("--eps", type=float, required=True, help="target accuracy in (0, 1]")
    p.add_argument("--L", type=float, default=1.0, help="Lipschitz constant (default 1)")
    p.add_argument("--T", type=float, default=1.0, help="horizon (default 1)")
    p.add_argument("--p", type=float, default=2.0, help="growth exponent (default 2)")
    p.add_argument("--d", type=int, default=1, help="dimension (default 1)")
    p.add_argument("--kappa", type=float, default=None, help="moment constant (default: derived)")
    p.add_argument("--q", type=float, default=3.0, help="product exponent, above 2 (default 3)")
    p.add_argument("--qnorm", type=float, default=2.0, help="error norm exponent (default 2)")
    p.add_argument("--r", type=float, default=0.5, help="moment exponent (default 1/2)")
    p.add_argument("--cd-route", choices=("bound", "mc"), default="bound")
    p.set_defaults(func=cmd_schedule)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"picardnet {args.command}: usage error: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - report any failure as a runtime error
        sys.stderr.write(f"picardnet {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
