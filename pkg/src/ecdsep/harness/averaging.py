"""Tail averaging of iterates (stochastic weight averaging on a trajectory)."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ecdsep.core import ParamVector


def swa_average(thetas: Sequence[ParamVector], start_index: int) -> ParamVector:
    """Arithmetic mean of ``thetas[start_index:]``."""
    arr = np.asarray(thetas, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("thetas must be a sequence of equal-length vectors")
    if start_index < 0:
        start_index += len(arr)
    if not 0 <= start_index < len(arr):
        raise ValueError(f"empty tail: start_index {start_index} with {len(arr)} iterates")
    return arr[start_index:].mean(axis=0)


def _metric_fn(metric) -> Callable[[ParamVector], float]:
    if hasattr(metric, "evaluate"):
        return lambda th: float(metric.evaluate(th).value)
    return lambda th: float(metric(th))


def best_tail_average(thetas: Sequence[ParamVector], metric) -> tuple[ParamVector, int]:
    """Among tail averages starting anywhere in the second half, return the best.

    ``metric`` is an objective (its full-data value is used) or a plain
    callable. Returns ``(average, start_index)``; ties go to the later start.
    """
    arr = np.asarray(thetas, dtype=np.float64)
    if arr.ndim != 2 or len(arr) < 2:
        raise ValueError("need at least two iterates")
    fn = _metric_fn(metric)
    length = len(arr)
    # suffix sums: tail mean from i is suffix[i] / (length - i)
    suffix = np.cumsum(arr[::-1], axis=0)[::-1]
    best_val, best_i, best_avg = np.inf, length - 1, arr[-1]
    for i in range(length - 1, length // 2 - 1, -1):
        avg = suffix[i] / (length - i)
        val = fn(avg)
        if val < best_val:
            best_val, best_i, best_avg = val, i, avg
    return best_avg, best_i
