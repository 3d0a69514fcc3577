"""Deterministic experiment sweeps, CSV persistence and scaling fits.

Every (grid point, trial) pair gets its own random stream derived from
``SeedSequence([seed, grid_index, trial])``, so results do not depend on the
number of worker threads.  Rows are written in (grid index, trial) order as
soon as they are available.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import product
from os import PathLike
from typing import Callable, Iterable

import numpy as np

from . import config
from .compare import calibrate_compare_constant
from .distributions import Distribution, bilevel
from .errors import ConfigError, InsufficientData, QCondError
from .estimators import CALIBRATION_GRIDS, calibrate_constant
from .oracle import QueryLedger, get_backend
from .testers import calibrate_pairs, uniformity_test


def _uniform_instance(N: int, eps: float) -> Distribution:
    return Distribution.uniform(N)


def _far_instance(N: int, eps: float) -> Distribution:
    return bilevel(N, eps)


def _uniformity_task(instance: Callable, classical: bool) -> Callable:
    def run(N, eps, *, rng, ledger, constants, backend):
        return uniformity_test(
            instance(N, eps), eps,
            constants=constants, backend=backend, rng=rng, ledger=ledger, classical=classical,
        )
    return run


TASKS: dict[str, Callable] = {
    "uniformity-quantum": _uniformity_task(_uniform_instance, False),
    "uniformity-classical": _uniformity_task(_uniform_instance, True),
    "uniformity-quantum-far": _uniformity_task(_far_instance, False),
    "uniformity-classical-far": _uniformity_task(_far_instance, True),
}


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    epsilons: tuple[float, ...] = ()
    Ns: tuple[int, ...] = (64,)
    trials: int = 1
    backend: str = "emulator"
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    out: str | None = None
    record_time: bool = False

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "Ns", tuple(int(n) for n in self.Ns))
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {sorted(TASKS)}")
        if any(not 0 < e <= 2 for e in self.epsilons):
            raise ConfigError("every epsilon must lie in (0, 2]")
        if any(n < 2 for n in self.Ns):
            raise ConfigError("every N must be >= 2")
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.backend not in ("emulator", "exact"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        try:
            replace(config.Constants(), **self.overrides)
        except TypeError as exc:
            raise ConfigError(f"bad constant override: {exc}") from exc

    def grid(self) -> list[tuple[int, float]]:
        return list(product(self.Ns, self.epsilons))

    def constants(self, base: config.Constants | None = None) -> config.Constants:
        base = config.active() if base is None else base
        return replace(base, **self.overrides)

    def to_json(self) -> dict:
        out = asdict(self)
        out["epsilons"], out["Ns"] = list(self.epsilons), list(self.Ns)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | PathLike) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(json.load(fh))


@dataclass(frozen=True)
class ResultRow:
    task: str
    grid_index: int
    trial: int
    N: int
    epsilon: float
    verdict: str
    queries: int
    error: str = ""
    wall_time: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.queries < 0:
            raise ValueError("queries must be >= 0")


COLUMNS = [f.name for f in fields(ResultRow)]


def _format(row: ResultRow) -> list[str]:
    out = []
    for name in COLUMNS:
        v = getattr(row, name)
        out.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
    return out


def load_rows(path: str | PathLike) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
        return [
            ResultRow(
                task=r["task"], grid_index=int(r["grid_index"]), trial=int(r["trial"]),
                N=int(r["N"]), epsilon=float(r["epsilon"]), verdict=r["verdict"],
                queries=int(r["queries"]), error=r["error"],
                wall_time=float(r["wall_time"]) if r["wall_time"] else None, seed=int(r["seed"]),
            )
            for r in reader
        ]


def trial_rng(seed: int, grid_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, grid_index, trial]))


def _run_trial(cfg: ExperimentConfig, constants, backend, gi: int, N: int, eps: float, trial: int):
    ledger = QueryLedger()
    start = time.perf_counter()
    try:
        verdict, error = TASKS[cfg.task](
            N, eps, rng=trial_rng(cfg.seed, gi, trial), ledger=ledger,
            constants=constants, backend=backend,
        ), ""
    except QCondError as exc:
        verdict, error = "", f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start if cfg.record_time else None
    row = ResultRow(cfg.task, gi, trial, N, eps, verdict, ledger.total, error, wall, cfg.seed)
    return row, ledger


def run_sweep(
    cfg: ExperimentConfig,
    *,
    threads: int = 1,
    out: str | PathLike | None = None,
    ledger: QueryLedger | None = None,
    constants: config.Constants | None = None,
) -> list[ResultRow]:
    """Run ``cfg.task`` over its grid; rows are returned and, if ``out`` is set, streamed to CSV."""
    out = cfg.out if out is None else out
    consts = cfg.constants(constants)
    backend = get_backend(cfg.backend)
    jobs = [(gi, N, eps, t) for gi, (N, eps) in enumerate(cfg.grid()) for t in range(cfg.trials)]
    rows: list[ResultRow] = []
    fh = open(out, "w", newline="") if out is not None else None
    try:
        writer = csv.writer(fh) if fh else None
        if writer:
            writer.writerow(COLUMNS)
            fh.flush()
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = pool.map(lambda j: _run_trial(cfg, consts, backend, *j), jobs)
            for row, trial_ledger in results:
                rows.append(row)
                if ledger is not None:
                    ledger.absorb(trial_ledger)
                if writer:
                    writer.writerow(_format(row))
                    fh.flush()
    finally:
        if fh:
            fh.close()
    return rows


def mean_queries_by_epsilon(rows: Iterable[ResultRow]) -> dict[float, float]:
    groups: dict[float, list[int]] = {}
    for r in rows:
        groups.setdefault(r.epsilon, []).append(r.queries)
    return {e: float(np.mean(q)) for e, q in sorted(groups.items())}


def fit_loglog_slope(rows: Iterable[ResultRow]) -> dict:
    """Least-squares slope of log(mean queries) against log(1/epsilon)."""
    means = mean_queries_by_epsilon(rows)
    if len(means) < 3:
        raise InsufficientData(f"need at least 3 distinct epsilon values, got {len(means)}")
    x = np.log([1 / e for e in means])
    y = np.log(list(means.values()))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "r2": r2, "points": len(means)}


def calibrate_all(*, seed: int = 0, backend=None, trials: int = 2000) -> config.Constants:
    """Run every calibration in dependency order and return the resulting constants."""
    base = config.Constants()
    add_c = calibrate_constant("additive", CALIBRATION_GRIDS["additive"], trials=trials, backend=backend, seed=seed)
    mul_c = calibrate_constant("multiplicative", CALIBRATION_GRIDS["multiplicative"], trials=trials, backend=backend, seed=seed)
    cmp_c = calibrate_compare_constant(trials=max(1, trials // 2), backend=backend, seed=seed)
    consts = replace(base, additive_c=add_c, multiplicative_c=mul_c, compare_c=cmp_c)
    c_p = calibrate_pairs(consts, backend=backend, seed=seed)
    grid = [[name, *g] for name, pts in CALIBRATION_GRIDS.items() for g in pts]
    return replace(consts, c_p=c_p, grid=grid)

