"""Single runs and fixed-budget random-search sweeps."""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ecdsep.baselines import run_adam, run_gdm
from ecdsep.core import NumericalError, RngStream
from ecdsep.optimizer import TrajectoryLog, run as run_ecd
from ecdsep.harness.config import (
    OPTIMIZERS,
    Range,
    RunConfig,
    SweepSpec,
    build_hparams,
    build_problem,
    parse_theta0,
)

logger = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    log: TrajectoryLog
    final_f: float
    best_f: float
    steps: int
    terminated: bool
    status: str
    wall_ms: float
    theta: Optional[np.ndarray] = None

    @property
    def failed(self) -> bool:
        return self.status == "diverged"

    def summary(self, timing: bool = False) -> dict:
        return {
            "final_f": self.final_f,
            "best_f": self.best_f,
            "steps": self.steps,
            "terminated": self.terminated,
            "status": self.status,
            "wall_ms": round(self.wall_ms, 3) if timing else None,
        }


def execute(obj, theta0, optimizer: str, hparams, max_steps: int, rng: RngStream,
            record_every: int = 1, keep_theta: bool = False) -> RunOutcome:
    """Run one optimizer; a non-finite value marks the outcome as diverged."""
    stochastic = hasattr(obj, "n_batches")
    tokens = itertools.count() if stochastic else None
    t0 = time.perf_counter()
    try:
        if optimizer == "ecdsep":
            state, log = run_ecd(obj, theta0, hparams, max_steps, rng, batch_tokens=tokens,
                                 record_every=record_every, keep_theta=keep_theta)
            steps, terminated, status, theta = state.step, state.terminated, state.status, state.theta
        elif optimizer == "gdm":
            theta, log = run_gdm(obj, theta0, hparams, max_steps, record_every, keep_theta, tokens)
            steps, terminated, status = max_steps, False, "running"
        elif optimizer in ("adam", "adamw"):
            theta, log = run_adam(obj, theta0, hparams, max_steps, record_every, keep_theta, tokens)
            steps, terminated, status = max_steps, False, "running"
        else:
            raise ValueError(f"unknown optimizer {optimizer!r}")
    except NumericalError as exc:
        wall = (time.perf_counter() - t0) * 1e3
        logger.info("run diverged: %s", exc)
        return RunOutcome(TrajectoryLog(), math.inf, math.inf, exc.step or 0, True, "diverged", wall)
    wall = (time.perf_counter() - t0) * 1e3
    if len(log):
        final_f, best_f = float(log.f[-1]), float(np.min(log.f))
    else:
        final_f = best_f = float(obj.evaluate(theta).value)
    return RunOutcome(log, final_f, best_f, steps, terminated, status, wall, theta)


def run_single(cfg: RunConfig, keep_theta: bool = False) -> RunOutcome:
    obj, theta0 = cfg.build()
    return execute(obj, theta0, cfg.optimizer, cfg.hparams, cfg.max_steps, RngStream(cfg.seed),
                   cfg.record_every, keep_theta)


# ---------------------------------------------------------------- sweeps


@dataclass
class TrialResult:
    optimizer: str
    trial: int
    params: dict
    final_f: float
    best_f: float
    steps: int
    status: str
    metric: float
    rank: int = 0

    def params_text(self) -> str:
        parts = []
        for k in sorted(self.params):
            v = self.params[k]
            parts.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        return ";".join(parts)


SWEEP_HEADER = ("optimizer", "rank", "trial", "metric", "final_f", "best_f", "steps", "status", "params")


def sample_params(space: dict, gen: np.random.Generator) -> dict:
    """Draw one configuration; keys are visited in sorted order for stability."""
    out = {}
    for key in sorted(space):
        spec = space[key]
        out[key] = spec.sample(gen) if isinstance(spec, Range) else spec
    return out


def _opt_index(opt: str) -> int:
    return OPTIMIZERS.index(opt)


def run_sweep(spec: SweepSpec) -> list[TrialResult]:
    """Random search with the same trial budget and trial length for every optimizer.

    Each trial starts from the same point with its own random stream keyed by
    ``(seed, optimizer, trial)``. Diverged trials are kept and ranked last.
    Returns all trials, grouped by optimizer and sorted by rank.
    """
    budgets = spec.budgets()
    if len(set(budgets.values())) > 1:
        raise ValueError("unequal budgets across optimizers")
    obj = build_problem(spec.problem, spec.problem_params)
    theta0 = parse_theta0(spec.theta0, spec.problem, obj)

    jobs = []
    for opt in spec.optimizers:
        gen = RngStream(spec.seed, (2, _opt_index(opt))).generator
        for t in range(spec.trials):
            raw = sample_params(spec.spaces[opt], gen)
            jobs.append((opt, t, raw))

    def one(job):
        opt, t, raw = job
        try:
            hp = build_hparams(opt, raw)
        except ValueError as exc:
            logger.info("trial %s/%d rejected: %s", opt, t, exc)
            return TrialResult(opt, t, raw, math.inf, math.inf, 0, "invalid", math.inf)
        out = execute(obj, theta0, opt, hp, spec.steps, RngStream(spec.seed, (1, _opt_index(opt), t)))
        metric = out.final_f if spec.metric == "final" else out.best_f
        if not math.isfinite(metric):
            metric = math.inf
        return TrialResult(opt, t, raw, out.final_f, out.best_f, out.steps, out.status, metric)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    ranked = []
    for opt in spec.optimizers:
        rows = sorted((r for r in results if r.optimizer == opt), key=lambda r: (r.metric, r.trial))
        for i, r in enumerate(rows, start=1):
            r.rank = i
        ranked.extend(rows)
    return ranked


def best_trials(results: list[TrialResult]) -> dict:
    best = {}
    for r in results:
        if r.rank == 1:
            best[r.optimizer] = r
    return best


def sweep_rows(results: list[TrialResult]):
    for r in results:
        yield (r.optimizer, r.rank, r.trial, r.metric, r.final_f, r.best_f, r.steps, r.status, r.params_text())
