"""Accuracy metrics, stability diagnostics and the benchmark harness."""

from __future__ import annotations

import multiprocessing as mp
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigInvalid, ConstantInput, DimensionMismatch, NotUnit, Timeout
from .irt import Dataset, generate_equispaced
from .rankers import ScoreVector, run_method
from .spectral import PowerConfig


def spearman(x, y) -> float:
    """Pearson correlation of the average-rank transforms of ``x`` and ``y``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise ConstantInput("need at least two observations")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    sxx, syy = rx @ rx, ry @ ry
    if sxx == 0 or syy == 0:
        raise ConstantInput("spearman is undefined for constant input")
    # one square root of the product keeps identical rankings at exactly 1.0
    return float(np.clip((rx @ ry) / np.sqrt(sxx * syy), -1.0, 1.0))


def positions_of(order) -> np.ndarray:
    """Inverse permutation: ``pos[u]`` is the 0-based rank of user ``u`` in ``order``."""
    order = np.asarray(order, dtype=np.int64)
    pos = np.empty_like(order)
    pos[order] = np.arange(len(order))
    return pos


def rank_displacement(p, q) -> float:
    """Mean absolute rank difference between two orderings, divided by m."""
    p = np.asarray(p, dtype=np.int64)
    q = np.asarray(q, dtype=np.int64)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionMismatch(f"orderings differ in length: {p.shape} vs {q.shape}")
    m = len(p)
    if m == 0:
        return 0.0
    return float(np.abs(positions_of(p) - positions_of(q)).mean() / m)


def eigvec_variance(v, tol: float = 1e-9) -> float:
    """Population variance of the entries of a unit vector."""
    v = np.asarray(v, dtype=np.float64).ravel()
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise NotUnit(f"expected a unit vector, norm is {norm:.12g}")
    return float(v.var())


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class EvalReport:
    method: str
    seed: int
    spearman: float
    displacement: float
    oriented: bool = True
    config: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {"method": self.method, "seed": self.seed,
                "spearman": self.spearman, "displacement": self.displacement}


def ability_order(abilities) -> np.ndarray:
    """Users from most to least able, ties by index."""
    a = np.asarray(abilities, dtype=np.float64)
    return np.lexsort((np.arange(len(a)), -a))


def evaluate_scores(sv: ScoreVector, abilities, seed: int = 0, oriented: bool = True,
                    config: dict | None = None) -> EvalReport:
    """Compare a score vector with true abilities aligned to ``sv.user_ids``."""
    abilities = np.asarray(abilities, dtype=np.float64)
    if abilities.shape != sv.scores.shape:
        raise DimensionMismatch(f"{sv.m} scores but {abilities.size} abilities")
    rho = spearman(sv.scores, abilities)
    disp = rank_displacement(sv.ranking, ability_order(abilities))
    return EvalReport(sv.method, seed, rho, disp, oriented, dict(config or {}))


def evaluate_method(method: str, ds: Dataset, config: PowerConfig = PowerConfig(),
                    orient: bool | None = None) -> EvalReport:
    sv = run_method(method, ds.responses, config, key=ds.key, orient=orient)
    return evaluate_scores(sv, ds.abilities_for(sv.user_ids), seed=ds.config.seed,
                           oriented=orient is not False, config=ds.config.to_json())


# ---------------------------------------------------------------------------
# stability


@dataclass(frozen=True)
class StabilityPoint:
    discrimination: float
    method: str
    axis: str
    mean_variance: float
    mean_displacement: float


def stability_sweep(
    discriminations: Sequence[float] = (2.5, 5, 10, 20, 40),
    methods: Sequence[str] = ("hnd-power", "abh-power"),
    n_pairs: int = 10,
    axis: str = "data",
    m: int = 100,
    n: int = 100,
    k: int = 3,
    config: PowerConfig = PowerConfig(),
) -> list[StabilityPoint]:
    """Variance of converged difference vectors and run-to-run rank displacement.

    ``axis="data"`` compares rankings of two datasets sampled with different
    seeds from the same parameters; ``axis="init"`` compares two runs on one
    dataset that differ only in the power-iteration start vector.
    """
    if axis not in ("data", "init"):
        raise ValueError("axis must be 'data' or 'init'")
    out = []
    for a in discriminations:
        runs = {meth: ([], []) for meth in methods}
        for p in range(n_pairs):
            if axis == "data":
                pair = [(generate_equispaced(a, m, n, k, seed=2 * p), config),
                        (generate_equispaced(a, m, n, k, seed=2 * p + 1), config)]
            else:
                ds = generate_equispaced(a, m, n, k, seed=p)
                pair = [(ds, PowerConfig(config.tol, config.max_iter, 2 * p)),
                        (ds, PowerConfig(config.tol, config.max_iter, 2 * p + 1))]
            for meth in methods:
                variances, disps = runs[meth]
                ranked = [run_method(meth, ds.responses, cfg) for ds, cfg in pair]
                for sv in ranked:
                    variances.append(eigvec_variance(sv.spectral.eigenvector))
                # user ids are 0..m-1 in both runs, so rankings are comparable
                disps.append(rank_displacement(ranked[0].user_ids[ranked[0].ranking],
                                               ranked[1].user_ids[ranked[1].ranking]))
        for meth in methods:
            variances, disps = runs[meth]
            out.append(StabilityPoint(float(a), meth, axis,
                                      float(np.mean(variances)), float(np.mean(disps))))
    return out


# ---------------------------------------------------------------------------
# benchmark


@dataclass(frozen=True)
class BenchRecord:
    method: str
    m: int
    n: int
    k: int
    seed: int
    iterations: int
    wall_ms: float
    timings_ms: tuple[float, ...] = ()

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("timings_ms")
        return d


def _bench_worker(conn, method, ds, config, runs):
    try:
        for _ in range(runs):
            start = time.perf_counter()
            sv = run_method(method, ds.responses, config, key=ds.key, orient=False)
            elapsed = time.perf_counter() - start
            conn.send(("ok", elapsed, int(sv.iterations)))
    except BaseException as exc:  # report, never hang the parent
        conn.send(("error", type(exc).__name__, str(exc)))
    finally:
        conn.close()


def _mp_context():
    try:
        return mp.get_context("fork")
    except ValueError:
        return mp.get_context("spawn")


def bench_run(method: str, ds: Dataset, config: PowerConfig = PowerConfig(),
              repeats: int = 5, timeout_s: float = 1000.0, warmup: bool = True) -> BenchRecord:
    """Median wall time of ``repeats`` ranking calls in a dedicated worker process.

    Only the ranking call is timed (monotonic clock).  A warm-up call runs
    first and is discarded.  Any single call exceeding ``timeout_s`` kills the
    worker and raises :class:`Timeout`.
    """
    if repeats < 1:
        raise ConfigInvalid("repeats must be at least 1")
    runs = repeats + (1 if warmup else 0)
    ctx = _mp_context()
    parent, child = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_bench_worker, args=(child, method, ds, config, runs), daemon=True)
    proc.start()
    child.close()
    timings, iterations = [], []
    try:
        for _ in range(runs):
            call_start = time.monotonic()
            if not parent.poll(timeout_s):
                raise Timeout(method, time.monotonic() - call_start)
            msg = parent.recv()
            if msg[0] == "error":
                raise RuntimeError(f"{method} failed in bench worker: {msg[1]}: {msg[2]}")
            timings.append(msg[1])
            iterations.append(msg[2])
    except EOFError:
        raise RuntimeError(f"bench worker for {method} exited early") from None
    finally:
        if proc.is_alive():
            proc.kill()
        proc.join()
        parent.close()
    if warmup:
        timings, iterations = timings[1:], iterations[1:]
    R = ds.responses
    ms = [t * 1000.0 for t in timings]
    return BenchRecord(
        method=method, m=R.m, n=R.n, k=int(R.k.max()) if R.n else 0,
        seed=ds.config.seed, iterations=int(statistics.median_low(iterations)),
        wall_ms=float(statistics.median(ms)), timings_ms=tuple(ms),
    )


def loglog_slope(sizes, times) -> float:
    """Least-squares slope of log(time) against log(size)."""
    return float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
