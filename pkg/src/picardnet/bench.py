"""Parameter-count scaling of compiled space-time networks across dimensions."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import io as netio
from .calculus import identity_net
from .compiler import compile_space_time
from .metrics import MeasureSpec, lq_error
from .mlp import MlpParams
from .network import Activation, leaky, realize
from .oracles import oracle_linear
from .problems import ProblemSpec
from .random_field import MultiIndex, RandomField

__all__ = ["BenchRow", "cod_benchmark", "loglog_slope", "rows_to_csv"]


@dataclass(frozen=True)
class BenchRow:
    d: int
    params: int
    file_params: int
    stored: int
    build_time: float
    eval_time: float
    l2_error: float
    l2_se: float


def loglog_slope(xs: Iterable[float], ys: Iterable[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(np.asarray(list(xs), float)), np.log(np.asarray(list(ys), float)), 1)
    return float(slope)


def cod_benchmark(
    dims: Iterable[int],
    n: int = 2,
    M: int = 2,
    K: int = 4,
    gamma: float = 0.1,
    act: Activation = leaky(0.5),
    seed: int = 0,
    T: float = 1.0,
    samples: int = 1000,
    out_dir: str | Path | None = None,
) -> list[BenchRow]:
    """Compile the space-time network for each ``d`` and record size, timing and error.

    The problem is ``f(u) = u`` with ``g(x) = exp(-|x|^2)``; errors are the
    ``L^2`` distance to the closed-form solution under the uniform
    probability measure on ``[0, T] x [0, 1]^d``.  Each network is written to
    ``out_dir`` (a temporary directory when omitted) and its parameter count
    is recounted from the file.
    """
    import tempfile

    dims = sorted(set(int(d) for d in dims))
    if not dims or dims[0] < 1 or dims[-1] > 32:
        raise ValueError("dimensions must lie in 1..32")
    j = identity_net(act)
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(out_dir) if out_dir is not None else Path(tmp)
        folder.mkdir(parents=True, exist_ok=True)
        for d in dims:
            spec = ProblemSpec(d=d, T=T)
            start = time.perf_counter()
            field = RandomField(seed, d, T)
            compiled = compile_space_time(
                MlpParams(n, M, T, 0.0, d),
                K,
                gamma,
                MultiIndex(),
                spec.g.network(d, act),
                spec.f.network(act),
                j,
                act,
                field,
            )
            build = time.perf_counter() - start
            path = folder / f"spacetime_d{d}.json"
            netio.save(compiled.net, act, path)
            measure = MeasureSpec(d, T, 0.0, 1.0)
            start = time.perf_counter()
            err, se = lq_error(
                lambda p: realize(compiled.net, act, p)[:, 0],
                lambda p: oracle_linear(spec, p[:, 0], p[:, 1:], method="closed"),
                measure,
                2.0,
                samples,
                seed,
            )
            evaluation = time.perf_counter() - start
            rows.append(
                BenchRow(
                    d=d,
                    params=compiled.net.param_count,
                    file_params=netio.param_count_from_file(path),
                    stored=compiled.net.stored_count,
                    build_time=build,
                    eval_time=evaluation,
                    l2_error=err,
                    l2_se=se,
                )
            )
    return rows


_TIMING_FIELDS = ("build_time", "eval_time")


def rows_to_csv(rows: list[BenchRow], timing: bool = False) -> str:
    """CSV with a header row.

    By default only the deterministic columns are written, so one seed always
    gives the same file; ``timing=True`` writes ``d`` with the wall-clock
    columns instead.
    """
    all_fields = list(BenchRow.__dataclass_fields__)
    if timing:
        fields = ["d", *_TIMING_FIELDS]
    else:
        fields = [f for f in all_fields if f not in _TIMING_FIELDS]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in asdict(row).items()})
    return buf.getvalue()
